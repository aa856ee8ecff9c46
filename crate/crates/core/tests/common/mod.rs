//! Harnesses shared by the network tests and the acceptance suite.

#![allow(dead_code)]

use std::convert::Infallible;

use ngoa_core::arch::link::{Offer, Port, WireSize};
use ngoa_core::arch::{ArchKind, ArchitectureConfig, Direction, NetEvent, Network, Packet, PacketKind};
use ngoa_core::sim::{derive_stream, Engine, Event, EventKind, Handler, RngStream, Scheduler, SimTime};
use ngoa_core::simulation::{run_replication, RunConfig};
use ngoa_core::traffic::{DayProfileSpec, ProbeLoad, TrafficConfig};

/// Mean M/D/1 waiting time for load `rho` and service time `s`.
pub fn md1_wait(rho: f64, s: f64) -> f64 {
    rho * s / (2.0 * (1.0 - rho))
}

pub struct Job(u64);

impl WireSize for Job {
    fn wire_bytes(&self) -> u64 {
        self.0
    }
}

#[derive(Clone, Debug)]
pub enum QueueEvent {
    Arrival,
    Done,
}

impl EventKind for QueueEvent {
    fn target(&self) -> u64 {
        0
    }

    fn kind(&self) -> &'static str {
        match self {
            QueueEvent::Arrival => "arrival",
            QueueEvent::Done => "done",
        }
    }
}

pub struct SingleLink {
    port: Port<Job>,
    arrivals: RngStream,
    mean_gap: f64,
    remaining: u64,
    wait_sum: f64,
    served: u64,
}

impl Handler<QueueEvent> for SingleLink {
    type Error = Infallible;

    fn handle(&mut self, ev: Event<QueueEvent>, sched: &mut Scheduler<QueueEvent>) -> Result<(), Infallible> {
        let now = sched.now();
        match ev.payload {
            QueueEvent::Arrival => {
                if let Offer::Started { tx_end } = self.port.offer(Job(1500), now) {
                    sched.schedule(tx_end, QueueEvent::Done).unwrap();
                }
                self.remaining -= 1;
                if self.remaining > 0 {
                    let gap = self.arrivals.exponential(self.mean_gap);
                    sched.schedule_in(SimTime::from_secs(gap), QueueEvent::Arrival);
                }
            }
            QueueEvent::Done => {
                let d = self.port.complete(now);
                self.wait_sum += (d.tx_start - d.enqueued).as_secs();
                self.served += 1;
                if let Some(t) = d.next_tx_end {
                    sched.schedule(t, QueueEvent::Done).unwrap();
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum TestEvent {
    Net(NetEvent),
    Arrival { onu: u32, dir: Direction },
    Refill,
}

impl From<NetEvent> for TestEvent {
    fn from(e: NetEvent) -> Self {
        TestEvent::Net(e)
    }
}

impl EventKind for TestEvent {
    fn target(&self) -> u64 {
        match self {
            TestEvent::Net(e) => e.target(),
            TestEvent::Arrival { onu, .. } => *onu as u64,
            TestEvent::Refill => 0,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            TestEvent::Net(e) => e.kind(),
            TestEvent::Arrival { .. } => "arrival",
            TestEvent::Refill => "refill",
        }
    }
}

/// Poisson packet sources per ONU and direction, or saturated upstream queues.
pub struct Bench {
    pub net: Network,
    pub streams: Vec<[RngStream; 2]>,
    pub gaps: [f64; 2],
    pub saturate_up: Option<u64>,
    pub next_id: u64,
    pub delivered_up: Vec<u64>,
}

impl Bench {
    pub fn new(config: &ArchitectureConfig, gaps: [f64; 2], seed: u64) -> Self {
        let mut net = Network::build(config, SimTime::from_secs(0.01)).unwrap();
        net.log_medium();
        let streams = (0..config.onu_count)
            .map(|i| [derive_stream(seed, &format!("down/{i}")), derive_stream(seed, &format!("up/{i}"))])
            .collect();
        Bench { net, streams, gaps, saturate_up: None, next_id: 0, delivered_up: vec![0; config.onu_count as usize] }
    }

    fn packet(&mut self, onu: u32, dir: Direction, now: SimTime) -> Packet {
        self.next_id += 1;
        Packet {
            id: self.next_id,
            flow: 0,
            seq: 0,
            payload: 1500,
            wire: 1500,
            dir,
            onu,
            user: onu,
            kind: PacketKind::Probe,
            born: now,
        }
    }

    pub fn run(&mut self, horizon: SimTime) {
        let mut engine = Engine::new();
        let sched = engine.scheduler();
        self.net.start(sched);
        for onu in 0..self.streams.len() as u32 {
            for dir in [Direction::Down, Direction::Up] {
                if self.gaps[dir as usize] > 0.0 {
                    sched.schedule(SimTime::ZERO, TestEvent::Arrival { onu, dir }).unwrap();
                }
            }
        }
        if self.saturate_up.is_some() {
            sched.schedule(SimTime::ZERO, TestEvent::Refill).unwrap();
        }
        engine.run_until(horizon, self).unwrap();
    }
}

impl Handler<TestEvent> for Bench {
    type Error = Infallible;

    fn handle(&mut self, ev: Event<TestEvent>, sched: &mut Scheduler<TestEvent>) -> Result<(), Infallible> {
        let now = sched.now();
        match ev.payload {
            TestEvent::Net(e) => {
                if let Some(p) = self.net.handle(e, sched) {
                    if p.dir == Direction::Up {
                        self.delivered_up[p.onu as usize] += p.wire as u64;
                    }
                }
            }
            TestEvent::Arrival { onu, dir } => {
                let pkt = self.packet(onu, dir, now);
                match dir {
                    Direction::Down => self.net.inject_down(pkt, sched),
                    Direction::Up => self.net.inject_up(pkt, sched),
                }
                let gap = self.streams[onu as usize][dir as usize].exponential(self.gaps[dir as usize]);
                sched.schedule_in(SimTime::from_secs(gap), TestEvent::Arrival { onu, dir });
            }
            TestEvent::Refill => {
                let target = self.saturate_up.unwrap();
                for onu in 0..self.streams.len() as u32 {
                    while self.net.upstream_backlog(onu) < target {
                        let pkt = self.packet(onu, Direction::Up, now);
                        self.net.inject_at_onu_upstream(pkt, sched);
                    }
                }
                sched.schedule_in(SimTime::from_secs(1e-4), TestEvent::Refill);
            }
        }
        Ok(())
    }
}

pub fn gap_for(rate_bps: f64) -> f64 {
    1500.0 * 8.0 / rate_bps
}

/// Mean queueing wait of `packets` fixed-size packets through a FIFO link at
/// load `rho`, with the M/D/1 value it should match.
pub fn md1_trial(rho: f64, packets: u64, seed: u64) -> (f64, f64) {
    let rate = 1e9;
    let service = 1500.0 * 8.0 / rate;
    let mut link = SingleLink {
        port: Port::new(rate, u64::MAX),
        arrivals: derive_stream(seed, "md1"),
        mean_gap: service / rho,
        remaining: packets,
        wait_sum: 0.0,
        served: 0,
    };
    let mut engine = Engine::new();
    engine.scheduler().schedule(SimTime::ZERO, QueueEvent::Arrival).unwrap();
    engine.run_until(SimTime::from_secs(1e6), &mut link).unwrap();
    assert_eq!(link.served, packets);
    (link.wait_sum / packets as f64, md1_wait(rho, service))
}

/// Upstream goodput per ONU (b/s) of a TDM-PON whose ONU queues never drain.
pub fn saturated_tdm_goodput(onus: u32, horizon: f64, seed: u64) -> (ArchitectureConfig, Vec<f64>) {
    let config = ArchitectureConfig { kind: ArchKind::TdmPon, onu_count: onus, ..Default::default() };
    let mut bench = Bench::new(&config, [0.0, 0.0], seed);
    bench.saturate_up = Some(200_000);
    bench.run(SimTime::from_secs(horizon));
    let goodput = bench.delivered_up.iter().map(|&b| b as f64 * 8.0 / horizon).collect();
    (config, goodput)
}

/// Per-ONU mean packet delay of a hybrid PON with one transceiver and one
/// wavelength per ONU and no tuning, next to a point-to-point network at the
/// wavelength rate, both driven by the same probe streams.
pub fn degenerate_hybrid_delays(seed: u64, secs: f64) -> Vec<(f64, f64)> {
    let hybrid = ArchitectureConfig {
        kind: ArchKind::HybridTwdmPon,
        onu_count: 4,
        wavelength_count: 4,
        transceiver_pool: 4,
        tuning_time_s: 0.0,
        ..Default::default()
    };
    let p2p = ArchitectureConfig { kind: ArchKind::PointToPoint, line_rate: hybrid.feeder_rate, ..hybrid.clone() };
    let traffic = TrafficConfig {
        sessions_per_hour: 0.0,
        probe: Some(ProbeLoad { down_bps_per_onu: 60e6, up_bps_per_onu: 40e6, packet_bytes: 1500 }),
        day_profile: Some(DayProfileSpec::Named("flat".into())),
        ..Default::default()
    };
    let run = |architecture: ArchitectureConfig| {
        run_replication(&RunConfig {
            architecture,
            traffic: traffic.clone(),
            duration: SimTime::from_secs(secs),
            warmup: SimTime::ZERO,
            root_seed: seed,
            stream_prefix: "rep/0".into(),
            trace_hash: false,
        })
        .unwrap()
    };
    let (a, b) = (run(hybrid), run(p2p));
    a.mac.iter().zip(&b.mac).map(|(h, p)| (h.mean_packet_delay(), p.mean_packet_delay())).collect()
}
