//! Packet-level model of one access network instance.
//!
//! Downstream path: core (pure delay) → OLT access stage → feeder → ONU →
//! distribution port → user. Upstream is the mirror image. The access stage is
//! where the architectures differ:
//!
//! * point-to-point: one dedicated port per ONU at the line rate, each way;
//! * TDM-PON: one shared downstream port at the feeder rate, upstream bursts
//!   scheduled by [`Dba`];
//! * hybrid: one queue per wavelength and direction, served packet by packet
//!   by the tunable transceiver pool via [`assign_transceiver`].

use serde::Serialize;

use super::dba::Dba;
use super::link::{DropTailQueue, Offer, Port, WireSize};
use super::pool::{assign_transceiver, Backlog, PoolPolicy, TransceiverState};
use super::{ArchKind, ArchitectureConfig, ConfigError};
use crate::energy::{ActivityLog, Component};
use crate::sim::{EventKind, Scheduler, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Down,
    Up,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PacketKind {
    /// Object request from a user.
    Request,
    Data,
    Ack { cumulative: u32 },
    Video { frame: u32 },
    /// Synthetic load without an application endpoint.
    Probe,
}

#[derive(Clone, Debug)]
pub struct Packet {
    pub id: u64,
    pub flow: u32,
    pub seq: u32,
    pub payload: u32,
    pub wire: u32,
    pub dir: Direction,
    pub onu: u32,
    pub user: u32,
    pub kind: PacketKind,
    pub born: SimTime,
}

impl WireSize for Packet {
    fn wire_bytes(&self) -> u64 {
        self.wire as u64
    }
}

#[derive(Clone, Debug)]
pub enum NetEvent {
    OltIngress(Packet),
    OnuIngress(Packet),
    AccessDone { port: u32, dir: Direction },
    DistDone { onu: u32, dir: Direction },
    Deliver(Packet),
    GrantStart { onu: u32, length: u64 },
    ReportArrive { onu: u32, report: u64 },
    PoolDone { xcvr: u32, dir: Direction },
}

impl EventKind for NetEvent {
    fn target(&self) -> u64 {
        match self {
            NetEvent::OltIngress(p) | NetEvent::OnuIngress(p) | NetEvent::Deliver(p) => p.onu as u64,
            NetEvent::AccessDone { port, .. } => *port as u64,
            NetEvent::DistDone { onu, .. }
            | NetEvent::GrantStart { onu, .. }
            | NetEvent::ReportArrive { onu, .. } => *onu as u64,
            NetEvent::PoolDone { xcvr, .. } => *xcvr as u64,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            NetEvent::OltIngress(_) => "olt_ingress",
            NetEvent::OnuIngress(_) => "onu_ingress",
            NetEvent::AccessDone { .. } => "access_done",
            NetEvent::DistDone { .. } => "dist_done",
            NetEvent::Deliver(_) => "deliver",
            NetEvent::GrantStart { .. } => "grant_start",
            NetEvent::ReportArrive { .. } => "report_arrive",
            NetEvent::PoolDone { .. } => "pool_done",
        }
    }
}

/// Per-ONU MAC statistics.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MacStats {
    pub onu: u32,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub drops: u64,
    pub queue_delay_sum: f64,
    pub queue_delay_count: u64,
    pub e2e_delay_sum: f64,
    pub e2e_count: u64,
}

impl MacStats {
    pub fn mean_queue_delay(&self) -> f64 {
        if self.queue_delay_count == 0 {
            0.0
        } else {
            self.queue_delay_sum / self.queue_delay_count as f64
        }
    }

    /// Mean injection-to-delivery delay of packets to or from this ONU.
    pub fn mean_packet_delay(&self) -> f64 {
        if self.e2e_count == 0 {
            0.0
        } else {
            self.e2e_delay_sum / self.e2e_count as f64
        }
    }
}

/// Packet accounting for one ONU (or the whole network).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Conservation {
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub resident: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.injected == self.delivered + self.dropped + self.resident
    }
}

/// Logged medium occupancy, for exclusivity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MediumUse {
    pub dir: Direction,
    /// Wavelength for hybrid, 0 for the TDM feeder.
    pub channel: u32,
    pub transceiver: u32,
    pub start: SimTime,
    pub end: SimTime,
}

struct InService {
    pkt: Packet,
    enqueued: SimTime,
    start: SimTime,
    wavelength: u32,
}

struct Pool {
    xcvrs: Vec<TransceiverState>,
    queues: Vec<DropTailQueue<Packet>>,
    serving: Vec<bool>,
    in_service: Vec<Option<InService>>,
}

impl Pool {
    fn new(k: u32, w: u32, buffer: u64) -> Self {
        Pool {
            xcvrs: (0..k as usize).map(|i| TransceiverState::new(i, Some(i as u32))).collect(),
            queues: (0..w).map(|_| DropTailQueue::new(buffer)).collect(),
            serving: vec![false; w as usize],
            in_service: (0..k).map(|_| None).collect(),
        }
    }
}

enum Access {
    PointToPoint { down: Vec<Port<Packet>>, up: Vec<Port<Packet>> },
    TdmPon { down: Port<Packet>, up: Vec<DropTailQueue<Packet>>, dba: Dba },
    Hybrid { down: Pool, up: Pool, tuning: SimTime, policy: PoolPolicy },
}

/// Instantiated access network. Owned by one engine.
pub struct Network {
    config: ArchitectureConfig,
    core_one_way: SimTime,
    prop: SimTime,
    rtt: SimTime,
    access: Access,
    dist_down: Vec<Port<Packet>>,
    dist_up: Vec<Port<Packet>>,
    stats: Vec<MacStats>,
    counts: Vec<Conservation>,
    in_flight: Vec<u64>,
    activity: ActivityLog,
    delivered_bytes: u64,
    medium_log: Option<Vec<MediumUse>>,
}

impl Network {
    /// Builds the network described by `config`. `core_rtt` is the round-trip
    /// latency between the OLT and the servers.
    pub fn build(config: &ArchitectureConfig, core_rtt: SimTime) -> Result<Network, ConfigError> {
        config.validate()?;
        let n = config.onu_count as usize;
        let buf = config.buffer_bytes;
        let (access, olt_xcvrs) = match config.kind {
            ArchKind::PointToPoint => (
                Access::PointToPoint {
                    down: (0..n).map(|_| Port::new(config.line_rate, buf)).collect(),
                    up: (0..n).map(|_| Port::new(config.line_rate, buf)).collect(),
                },
                n,
            ),
            ArchKind::TdmPon => (
                Access::TdmPon {
                    down: Port::new(config.feeder_rate, buf),
                    up: (0..n).map(|_| DropTailQueue::new(buf)).collect(),
                    dba: Dba::new(
                        config.feeder_rate,
                        SimTime::from_secs(config.guard_time_s),
                        config.max_grant_bytes,
                    ),
                },
                1,
            ),
            ArchKind::HybridTwdmPon => (
                Access::Hybrid {
                    down: Pool::new(config.transceiver_pool, config.wavelength_count, buf),
                    up: Pool::new(config.transceiver_pool, config.wavelength_count, buf),
                    tuning: SimTime::from_secs(config.tuning_time_s),
                    policy: config.pool_policy,
                },
                config.transceiver_pool as usize,
            ),
        };
        let prop = config.feeder_delay();
        Ok(Network {
            config: config.clone(),
            core_one_way: SimTime::from_ps(core_rtt.as_ps() / 2),
            prop,
            rtt: prop + prop,
            access,
            dist_down: (0..n).map(|_| Port::new(config.distribution_rate, buf)).collect(),
            dist_up: (0..n).map(|_| Port::new(config.distribution_rate, buf)).collect(),
            stats: (0..n as u32).map(|onu| MacStats { onu, ..Default::default() }).collect(),
            counts: vec![Conservation::default(); n],
            in_flight: vec![0; n],
            activity: ActivityLog::new(olt_xcvrs, n),
            delivered_bytes: 0,
            medium_log: None,
        })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    /// Keeps a log of every feeder/wavelength occupancy for invariant checks.
    pub fn log_medium(&mut self) {
        self.medium_log = Some(Vec::new());
    }

    pub fn medium_log(&self) -> &[MediumUse] {
        self.medium_log.as_deref().unwrap_or(&[])
    }

    /// Starts background MAC activity (the TDM-PON polling cycle).
    pub fn start<E: From<NetEvent>>(&mut self, sched: &mut Scheduler<E>) {
        let now = sched.now();
        if let Access::TdmPon { dba, .. } = &mut self.access {
            let n = self.config.onu_count as usize;
            let grants = dba.grant_cycle(&vec![0; n], &vec![self.rtt; n], now);
            for g in grants {
                self.log_use(Direction::Up, 0, 0, g.start, g.end(self.config.feeder_rate));
                let at = g.start - self.prop;
                sched
                    .schedule(at, NetEvent::GrantStart { onu: g.onu, length: g.length }.into())
                    .expect("grant is in the future");
            }
        }
    }

    /// A server emits `pkt` towards its user now.
    pub fn inject_down<E: From<NetEvent>>(&mut self, pkt: Packet, sched: &mut Scheduler<E>) {
        let onu = pkt.onu as usize;
        self.counts[onu].injected += 1;
        self.in_flight[onu] += 1;
        sched.schedule_in(self.core_one_way, NetEvent::OltIngress(pkt).into());
    }

    /// A user emits `pkt` towards the servers now.
    pub fn inject_up<E: From<NetEvent>>(&mut self, pkt: Packet, sched: &mut Scheduler<E>) {
        let onu = pkt.onu as usize;
        self.counts[onu].injected += 1;
        let now = sched.now();
        match self.dist_up[onu].offer(pkt, now) {
            Offer::Dropped(p) => self.drop(p),
            Offer::Queued => {}
            Offer::Started { tx_end } => {
                sched.schedule(tx_end, NetEvent::DistDone { onu: onu as u32, dir: Direction::Up }.into()).expect("future");
            }
        }
    }

    /// Places `pkt` directly in the ONU's upstream access queue, bypassing the
    /// distribution port. Used for saturation experiments.
    pub fn inject_at_onu_upstream<E: From<NetEvent>>(&mut self, pkt: Packet, sched: &mut Scheduler<E>) {
        self.counts[pkt.onu as usize].injected += 1;
        self.enqueue_access_up(pkt, sched);
    }

    /// Bytes waiting in the upstream access queue of `onu`.
    pub fn upstream_backlog(&self, onu: u32) -> u64 {
        match &self.access {
            Access::PointToPoint { up, .. } => up[onu as usize].queued_bytes(),
            Access::TdmPon { up, .. } => up[onu as usize].bytes(),
            Access::Hybrid { up, .. } => up.queues[self.config.wavelength_of(onu) as usize]
                .iter()
                .filter(|q| q.item.onu == onu)
                .map(|q| q.item.wire as u64)
                .sum(),
        }
    }

    /// Processes one network event; returns a packet that reached its endpoint.
    pub fn handle<E: From<NetEvent>>(&mut self, ev: NetEvent, sched: &mut Scheduler<E>) -> Option<Packet> {
        let now = sched.now();
        match ev {
            NetEvent::OltIngress(pkt) => {
                self.in_flight[pkt.onu as usize] -= 1;
                self.enqueue_access_down(pkt, sched);
                None
            }
            NetEvent::OnuIngress(pkt) => {
                let onu = pkt.onu;
                self.in_flight[onu as usize] -= 1;
                match self.dist_down[onu as usize].offer(pkt, now) {
                    Offer::Dropped(p) => self.drop(p),
                    Offer::Queued => {}
                    Offer::Started { tx_end } => {
                        sched.schedule(tx_end, NetEvent::DistDone { onu, dir: Direction::Down }.into()).expect("future");
                    }
                }
                None
            }
            NetEvent::DistDone { onu, dir } => {
                let port = match dir {
                    Direction::Down => &mut self.dist_down[onu as usize],
                    Direction::Up => &mut self.dist_up[onu as usize],
                };
                let dep = port.complete(now);
                if let Some(next) = dep.next_tx_end {
                    sched.schedule(next, NetEvent::DistDone { onu, dir }.into()).expect("future");
                }
                self.activity.record(Component::Onu(onu), dep.tx_start, now);
                match dir {
                    Direction::Down => Some(self.deliver(dep.item, now)),
                    Direction::Up => {
                        self.enqueue_access_up(dep.item, sched);
                        None
                    }
                }
            }
            NetEvent::AccessDone { port, dir } => {
                self.access_port_done(port, dir, sched);
                None
            }
            NetEvent::Deliver(pkt) => {
                self.in_flight[pkt.onu as usize] -= 1;
                Some(self.deliver(pkt, now))
            }
            NetEvent::GrantStart { onu, length } => {
                self.grant_start(onu, length, sched);
                None
            }
            NetEvent::ReportArrive { onu, report } => {
                let rtt = self.rtt;
                let rate = self.config.feeder_rate;
                if let Access::TdmPon { dba, .. } = &mut self.access {
                    let g = dba.grant_one(onu, report, rtt, now);
                    let at = g.start - self.prop;
                    self.log_use(Direction::Up, 0, 0, g.start, g.end(rate));
                    sched.schedule(at, NetEvent::GrantStart { onu, length: g.length }.into()).expect("future");
                }
                None
            }
            NetEvent::PoolDone { xcvr, dir } => {
                self.pool_done(xcvr, dir, sched);
                None
            }
        }
    }

    fn deliver(&mut self, pkt: Packet, now: SimTime) -> Packet {
        let onu = pkt.onu as usize;
        self.counts[onu].delivered += 1;
        self.stats[onu].e2e_delay_sum += (now - pkt.born).as_secs();
        self.stats[onu].e2e_count += 1;
        self.delivered_bytes += pkt.wire as u64;
        pkt
    }

    fn drop(&mut self, pkt: Packet) {
        let onu = pkt.onu as usize;
        self.counts[onu].dropped += 1;
        self.stats[onu].drops += 1;
    }

    fn log_use(&mut self, dir: Direction, channel: u32, transceiver: u32, start: SimTime, end: SimTime) {
        if let Some(log) = self.medium_log.as_mut() {
            log.push(MediumUse { dir, channel, transceiver, start, end });
        }
    }

    fn access_departed(&mut self, pkt: &Packet, enqueued: SimTime, tx_start: SimTime) {
        let s = &mut self.stats[pkt.onu as usize];
        s.bytes_out += pkt.wire as u64;
        s.queue_delay_sum += (tx_start - enqueued).as_secs();
        s.queue_delay_count += 1;
    }

    fn enqueue_access_down<E: From<NetEvent>>(&mut self, pkt: Packet, sched: &mut Scheduler<E>) {
        let now = sched.now();
        let onu = pkt.onu;
        let wire = pkt.wire as u64;
        let offer = match &mut self.access {
            Access::PointToPoint { down, .. } => Some((onu, down[onu as usize].offer(pkt, now))),
            Access::TdmPon { down, .. } => Some((0, down.offer(pkt, now))),
            Access::Hybrid { down, .. } => {
                let w = self.config.wavelength_of(onu) as usize;
                match down.queues[w].push(pkt, now) {
                    Ok(()) => {
                        self.stats[onu as usize].bytes_in += wire;
                        self.pool_kick(Direction::Down, sched);
                    }
                    Err(p) => self.drop(p),
                }
                None
            }
        };
        if let Some((port, offer)) = offer {
            match offer {
                Offer::Dropped(p) => self.drop(p),
                Offer::Queued => self.stats[onu as usize].bytes_in += wire,
                Offer::Started { tx_end } => {
                    self.stats[onu as usize].bytes_in += wire;
                    sched.schedule(tx_end, NetEvent::AccessDone { port, dir: Direction::Down }.into()).expect("future");
                }
            }
        }
    }

    fn enqueue_access_up<E: From<NetEvent>>(&mut self, pkt: Packet, sched: &mut Scheduler<E>) {
        let now = sched.now();
        let onu = pkt.onu;
        let wire = pkt.wire as u64;
        let accepted = match &mut self.access {
            Access::PointToPoint { up, .. } => match up[onu as usize].offer(pkt, now) {
                Offer::Dropped(p) => Err(p),
                Offer::Queued => Ok(()),
                Offer::Started { tx_end } => {
                    sched.schedule(tx_end, NetEvent::AccessDone { port: onu, dir: Direction::Up }.into()).expect("future");
                    Ok(())
                }
            },
            Access::TdmPon { up, .. } => up[onu as usize].push(pkt, now),
            Access::Hybrid { up, .. } => {
                let w = self.config.wavelength_of(onu) as usize;
                up.queues[w].push(pkt, now)
            }
        };
        match accepted {
            Ok(()) => {
                self.stats[onu as usize].bytes_in += wire;
                if matches!(self.access, Access::Hybrid { .. }) {
                    self.pool_kick(Direction::Up, sched);
                }
            }
            Err(p) => self.drop(p),
        }
    }

    fn access_port_done<E: From<NetEvent>>(&mut self, port: u32, dir: Direction, sched: &mut Scheduler<E>) {
        let now = sched.now();
        let dep = match (&mut self.access, dir) {
            (Access::PointToPoint { down, .. }, Direction::Down) => down[port as usize].complete(now),
            (Access::PointToPoint { up, .. }, Direction::Up) => up[port as usize].complete(now),
            (Access::TdmPon { down, .. }, Direction::Down) => down.complete(now),
            _ => unreachable!("no access port for this architecture/direction"),
        };
        if let Some(next) = dep.next_tx_end {
            sched.schedule(next, NetEvent::AccessDone { port, dir }.into()).expect("future");
        }
        let pkt = dep.item;
        let onu = pkt.onu;
        self.access_departed(&pkt, dep.enqueued, dep.tx_start);
        let olt_xcvr = if self.config.kind == ArchKind::PointToPoint { onu } else { 0 };
        self.activity.record(Component::OltTransceiver(olt_xcvr), dep.tx_start, now);
        self.in_flight[onu as usize] += 1;
        match dir {
            Direction::Down => {
                self.log_use(dir, 0, olt_xcvr, dep.tx_start, now);
                self.activity.record(Component::Onu(onu), dep.tx_start + self.prop, now + self.prop);
                sched.schedule_in(self.prop, NetEvent::OnuIngress(pkt).into());
            }
            Direction::Up => {
                self.activity.record(Component::Onu(onu), dep.tx_start, now);
                sched.schedule_in(self.prop + self.core_one_way, NetEvent::Deliver(pkt).into());
            }
        }
    }

    fn grant_start<E: From<NetEvent>>(&mut self, onu: u32, length: u64, sched: &mut Scheduler<E>) {
        let now = sched.now();
        let rate = self.config.feeder_rate;
        let Access::TdmPon { up, .. } = &mut self.access else {
            unreachable!("grant outside TDM-PON")
        };
        let queue = &mut up[onu as usize];
        let mut remaining = length;
        let mut t = now;
        let mut burst = Vec::new();
        while let Some(front) = queue.front() {
            let w = front.item.wire as u64;
            if w > remaining {
                break;
            }
            remaining -= w;
            let q = queue.pop().expect("front exists");
            let start = t;
            t += SimTime::transmission(w, rate);
            burst.push((q, start, t));
        }
        let report = queue.bytes();
        let window_end = now + SimTime::transmission(length, rate);
        if let (Some(first), Some(last)) = (burst.first(), burst.last()) {
            self.activity.record(Component::Onu(onu), first.1, last.2);
            self.activity.record(Component::OltTransceiver(0), first.1 + self.prop, last.2 + self.prop);
        }
        for (q, start, end) in burst {
            self.access_departed(&q.item, q.enqueued, start);
            self.in_flight[onu as usize] += 1;
            let at = end + self.prop + self.core_one_way;
            sched.schedule(at, NetEvent::Deliver(q.item).into()).expect("future");
        }
        sched
            .schedule(window_end + self.prop, NetEvent::ReportArrive { onu, report }.into())
            .expect("future");
    }

    fn pool_kick<E: From<NetEvent>>(&mut self, dir: Direction, sched: &mut Scheduler<E>) {
        let now = sched.now();
        let prop = self.prop;
        let Access::Hybrid { down, up, tuning, policy } = &mut self.access else {
            unreachable!("pool outside hybrid")
        };
        let pool = match dir {
            Direction::Down => down,
            Direction::Up => up,
        };
        let view: Vec<Option<Backlog>> = pool
            .queues
            .iter()
            .zip(&pool.serving)
            .map(|(q, &busy)| {
                if busy {
                    return None;
                }
                q.front().map(|h| Backlog { hol_age: now - h.enqueued, bytes: q.bytes() })
            })
            .collect();
        let decisions = assign_transceiver(&pool.xcvrs, &view, now, *tuning, *policy);
        let mut uses = Vec::with_capacity(decisions.len());
        for a in decisions {
            let w = a.wavelength as usize;
            let q = pool.queues[w].pop().expect("backlogged wavelength");
            let end = a.transmit_start + SimTime::transmission(q.item.wire as u64, self.config.feeder_rate);
            let x = &mut pool.xcvrs[a.transceiver];
            // Held until its completion event runs, even if another event
            // at `end` kicks the pool first.
            x.busy_until = SimTime::MAX;
            x.current_wavelength = Some(a.wavelength);
            pool.serving[w] = true;
            let onu = q.item.onu;
            pool.in_service[a.transceiver] = Some(InService {
                pkt: q.item,
                enqueued: q.enqueued,
                start: a.transmit_start,
                wavelength: a.wavelength,
            });
            sched
                .schedule(end, NetEvent::PoolDone { xcvr: a.transceiver as u32, dir }.into())
                .expect("future");
            uses.push((a, end, onu));
        }
        for (a, end, onu) in uses {
            self.log_use(dir, a.wavelength, a.transceiver as u32, a.transmit_start, end);
            self.activity.record(Component::OltTransceiver(a.transceiver as u32), now, end);
            match dir {
                Direction::Down => self.activity.record(Component::Onu(onu), a.transmit_start + prop, end + prop),
                Direction::Up => self.activity.record(Component::Onu(onu), a.transmit_start, end),
            }
        }
    }

    fn pool_done<E: From<NetEvent>>(&mut self, xcvr: u32, dir: Direction, sched: &mut Scheduler<E>) {
        let Access::Hybrid { down, up, .. } = &mut self.access else {
            unreachable!("pool outside hybrid")
        };
        let pool = match dir {
            Direction::Down => down,
            Direction::Up => up,
        };
        let done = pool.in_service[xcvr as usize].take().expect("transceiver in service");
        pool.xcvrs[xcvr as usize].busy_until = sched.now();
        pool.serving[done.wavelength as usize] = false;
        let pkt = done.pkt;
        let onu = pkt.onu as usize;
        self.access_departed(&pkt, done.enqueued, done.start);
        self.in_flight[onu] += 1;
        match dir {
            Direction::Down => sched.schedule_in(self.prop, NetEvent::OnuIngress(pkt).into()),
            Direction::Up => sched.schedule_in(self.prop + self.core_one_way, NetEvent::Deliver(pkt).into()),
        };
        self.pool_kick(dir, sched);
    }

    pub fn mac_stats(&self) -> &[MacStats] {
        &self.stats
    }

    pub fn delivered_bytes(&self) -> u64 {
        self.delivered_bytes
    }

    pub fn activity(&self) -> &ActivityLog {
        &self.activity
    }

    pub fn into_activity(self) -> ActivityLog {
        self.activity
    }

    /// Per-ONU packet accounting. Resident packets are counted directly from
    /// queues, transmitters and in-flight events.
    pub fn conservation(&self) -> Vec<Conservation> {
        let mut resident: Vec<u64> = self.in_flight.clone();
        for (onu, (d, u)) in self.dist_down.iter().zip(&self.dist_up).enumerate() {
            resident[onu] += (d.resident() + u.resident()) as u64;
        }
        match &self.access {
            Access::PointToPoint { down, up } => {
                for (onu, (d, u)) in down.iter().zip(up).enumerate() {
                    resident[onu] += (d.resident() + u.resident()) as u64;
                }
            }
            Access::TdmPon { down, up, .. } => {
                for onu in down.resident_onus() {
                    resident[onu as usize] += 1;
                }
                for (onu, q) in up.iter().enumerate() {
                    resident[onu] += q.len() as u64;
                }
            }
            Access::Hybrid { down, up, .. } => {
                for pool in [down, up] {
                    for q in &pool.queues {
                        for item in q.iter() {
                            resident[item.item.onu as usize] += 1;
                        }
                    }
                    for s in pool.in_service.iter().flatten() {
                        resident[s.pkt.onu as usize] += 1;
                    }
                }
            }
        }
        self.counts
            .iter()
            .zip(resident)
            .map(|(c, r)| Conservation { resident: r, ..*c })
            .collect()
    }

    pub fn total_conservation(&self) -> Conservation {
        self.conservation().into_iter().fold(Conservation::default(), |a, c| Conservation {
            injected: a.injected + c.injected,
            delivered: a.delivered + c.delivered,
            dropped: a.dropped + c.dropped,
            resident: a.resident + c.resident,
        })
    }
}

impl Port<Packet> {
    fn resident_onus(&self) -> impl Iterator<Item = u32> + '_ {
        self.resident_items().map(|p| p.onu)
    }
}
