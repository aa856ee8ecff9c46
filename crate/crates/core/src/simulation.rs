//! One replication: users, applications and transport on top of a [`Network`].
//!
//! Web objects travel over a fixed-window go-back-N transfer: the user sends
//! a request upstream, the server answers with a window of segments, and the
//! user acknowledges every segment cumulatively. Objects of a page are
//! fetched one after another; the page completes when its last object is
//! fully received. Video frames are pushed downstream on a fixed schedule and
//! never retransmitted.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::Arc;

use thiserror::Error;

use crate::arch::{ArchitectureConfig, ConfigError, Conservation, Direction, MacStats, NetEvent, Network, Packet, PacketKind};
use crate::energy::ActivityLog;
use crate::qoe::{decodable_frame_rate, page_delay_stats, FrameReceipt, PageTrace, QoeError, QoeMetric};
use crate::sim::{derive_stream, Engine, Event, EventCounts, EventKind, Handler, RngStream, RunError, Scheduler, SimTime};
use crate::traffic::{
    generate_gop_schedule, generate_page, next_session_time, segment_object, FrameEmission, Segment, TrafficConfig,
    TrafficError, UserProfile,
};

/// Everything needed to reproduce one replication.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub architecture: ArchitectureConfig,
    pub traffic: TrafficConfig,
    pub duration: SimTime,
    pub warmup: SimTime,
    pub root_seed: u64,
    /// Prefix of every random stream path, e.g. `rep/3`.
    pub stream_prefix: String,
    pub trace_hash: bool,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("warm-up {warmup} is not shorter than the run ({duration})")]
    Warmup { warmup: SimTime, duration: SimTime },
    #[error(transparent)]
    Engine(#[from] RunError<Infallible>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SessionCounts {
    pub web: u64,
    pub video: u64,
}

/// Result of one replication.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub mac: Vec<MacStats>,
    pub pages: Vec<PageTrace>,
    /// Receipts of complete GOPs that started after the warm-up.
    pub frames: Vec<FrameReceipt>,
    pub activity: ActivityLog,
    pub delivered_bytes: u64,
    pub horizon: SimTime,
    pub warmup: SimTime,
    pub events: EventCounts,
    pub conservation: Conservation,
    pub sessions: SessionCounts,
    pub trace_hash: Option<String>,
    pub gop: crate::traffic::GopPattern,
}

impl RunOutput {
    pub fn metric(&self, m: QoeMetric) -> Result<f64, QoeError> {
        match m {
            QoeMetric::PageDelay => page_delay_stats(&self.pages, self.warmup).map(|s| s.mean_s),
            QoeMetric::DecodableFrameRate => decodable_frame_rate(&self.frames, &self.gop),
        }
    }

    pub fn metrics(&self, ms: &[QoeMetric]) -> Result<BTreeMap<QoeMetric, f64>, QoeError> {
        ms.iter().map(|&m| self.metric(m).map(|v| (m, v))).collect()
    }
}

#[derive(Clone, Debug)]
pub enum SimEvent {
    Net(NetEvent),
    SessionArrival { user: u32 },
    PageStart { session: u32 },
    VideoFrame { session: u32, slot: u32 },
    /// Server retransmission timer of a web object.
    Rto { flow: u32, generation: u32 },
    /// User-side timer re-sending an unanswered request.
    RequestRto { flow: u32, generation: u32 },
    Probe { onu: u32, dir: Direction },
}

impl From<NetEvent> for SimEvent {
    fn from(e: NetEvent) -> Self {
        SimEvent::Net(e)
    }
}

impl EventKind for SimEvent {
    fn target(&self) -> u64 {
        match self {
            SimEvent::Net(e) => e.target(),
            SimEvent::SessionArrival { user } => *user as u64,
            SimEvent::PageStart { session } | SimEvent::VideoFrame { session, .. } => *session as u64,
            SimEvent::Rto { flow, .. } | SimEvent::RequestRto { flow, .. } => *flow as u64,
            SimEvent::Probe { onu, .. } => *onu as u64,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            SimEvent::Net(e) => e.kind(),
            SimEvent::SessionArrival { .. } => "session_arrival",
            SimEvent::PageStart { .. } => "page_start",
            SimEvent::VideoFrame { .. } => "video_frame",
            SimEvent::Rto { .. } => "rto",
            SimEvent::RequestRto { .. } => "request_rto",
            SimEvent::Probe { .. } => "probe",
        }
    }
}

struct User {
    onu: u32,
    arrivals: RngStream,
    path: String,
    sessions: u32,
}

struct PageProgress {
    trace: usize,
    objects: Vec<u64>,
    next: usize,
}

enum SessionKind {
    Web { stream: RngStream, pages_left: u32, page: Option<PageProgress> },
    Video { start: SimTime, received: Vec<u32> },
}

struct Session {
    user: u32,
    onu: u32,
    kind: SessionKind,
}

struct Flow {
    session: u32,
    onu: u32,
    user: u32,
    segments: Vec<Segment>,
    // server side
    started: bool,
    base: u32,
    next: u32,
    generation: u32,
    timer_armed: bool,
    finished: bool,
    // user side
    expected: u32,
    request_generation: u32,
    complete: bool,
}

struct World {
    net: Network,
    traffic: TrafficConfig,
    profile: UserProfile,
    users: Vec<User>,
    sessions: Vec<Session>,
    flows: Vec<Flow>,
    pages: Vec<PageTrace>,
    video_schedule: Arc<Vec<FrameEmission>>,
    video_segments: Vec<Vec<Segment>>,
    probes: Vec<[RngStream; 2]>,
    next_packet: u64,
    counts: SessionCounts,
}

impl World {
    fn packet(&mut self, flow: u32, seq: u32, payload: u32, wire: u32, dir: Direction, onu: u32, user: u32, kind: PacketKind, now: SimTime) -> Packet {
        self.next_packet += 1;
        Packet { id: self.next_packet, flow, seq, payload, wire, dir, onu, user, kind, born: now }
    }

    fn rto(&self) -> SimTime {
        SimTime::from_secs(self.traffic.transport.rto_s)
    }

    fn on_session_arrival(&mut self, user: u32, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let u = &mut self.users[user as usize];
        let label = format!("{}/session/{}", u.path, u.sessions);
        u.sessions += 1;
        let onu = u.onu;
        if let Some(next) = next_session_time(&self.profile, now, &mut u.arrivals) {
            sched.schedule(next, SimEvent::SessionArrival { user }).expect("future arrival");
        }
        let mut stream = derive_stream(u.arrivals.root_seed(), &label);
        let id = self.sessions.len() as u32;
        if stream.uniform() < self.profile.web_fraction {
            self.counts.web += 1;
            let pages = self.traffic.web.pages_in_session(&mut stream);
            self.sessions.push(Session {
                user,
                onu,
                kind: SessionKind::Web { stream, pages_left: pages, page: None },
            });
            if pages > 0 {
                sched.schedule_in(SimTime::ZERO, SimEvent::PageStart { session: id });
            }
        } else {
            self.counts.video += 1;
            let frames = self.video_schedule.len();
            self.sessions.push(Session {
                user,
                onu,
                kind: SessionKind::Video { start: now, received: vec![0; frames] },
            });
            if frames > 0 {
                sched.schedule_in(SimTime::ZERO, SimEvent::VideoFrame { session: id, slot: 0 });
            }
        }
    }

    fn on_page_start(&mut self, session: u32, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let trace = self.pages.len();
        self.pages.push(PageTrace { request: now, completion: None });
        let s = &mut self.sessions[session as usize];
        let SessionKind::Web { stream, page, .. } = &mut s.kind else {
            unreachable!("page start on a video session")
        };
        let spec = generate_page(&self.traffic.web, stream);
        let objects: Vec<u64> = spec.objects().collect();
        let first = objects[0];
        *page = Some(PageProgress { trace, objects, next: 1 });
        self.open_flow(session, first, sched);
    }

    fn open_flow(&mut self, session: u32, size: u64, sched: &mut Scheduler<SimEvent>) {
        let s = &self.sessions[session as usize];
        let (onu, user) = (s.onu, s.user);
        let id = self.flows.len() as u32;
        self.flows.push(Flow {
            session,
            onu,
            user,
            segments: segment_object(size, self.traffic.transport.mtu_payload),
            started: false,
            base: 0,
            next: 0,
            generation: 0,
            timer_armed: false,
            finished: false,
            expected: 0,
            request_generation: 0,
            complete: false,
        });
        self.send_request(id, sched);
    }

    fn send_request(&mut self, flow: u32, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let t = &self.traffic.transport;
        let (payload, wire) = (t.request_bytes, t.request_bytes + t.header_bytes);
        let f = &mut self.flows[flow as usize];
        f.request_generation += 1;
        let (onu, user, generation) = (f.onu, f.user, f.request_generation);
        let pkt = self.packet(flow, 0, payload, wire, Direction::Up, onu, user, PacketKind::Request, now);
        self.net.inject_up(pkt, sched);
        sched.schedule_in(self.rto(), SimEvent::RequestRto { flow, generation });
    }

    /// Sends every segment the window allows and arms the timer if needed.
    fn server_send(&mut self, flow: u32, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let window = self.traffic.transport.window_segments;
        let header = self.traffic.transport.header_bytes;
        let f = &self.flows[flow as usize];
        let end = (f.base + window).min(f.segments.len() as u32);
        let (from, onu, user) = (f.next, f.onu, f.user);
        for seq in from..end {
            let payload = self.flows[flow as usize].segments[seq as usize].payload;
            let pkt = self.packet(flow, seq, payload, payload + header, Direction::Down, onu, user, PacketKind::Data, now);
            self.net.inject_down(pkt, sched);
        }
        let f = &mut self.flows[flow as usize];
        f.next = f.next.max(end);
        if !f.timer_armed && f.base < f.next {
            self.arm_timer(flow, sched);
        }
    }

    fn arm_timer(&mut self, flow: u32, sched: &mut Scheduler<SimEvent>) {
        let rto = self.rto();
        let f = &mut self.flows[flow as usize];
        f.generation += 1;
        f.timer_armed = true;
        sched.schedule_in(rto, SimEvent::Rto { flow, generation: f.generation });
    }

    fn on_rto(&mut self, flow: u32, generation: u32, sched: &mut Scheduler<SimEvent>) {
        let f = &mut self.flows[flow as usize];
        if f.finished || generation != f.generation {
            return;
        }
        f.timer_armed = false;
        f.next = f.base;
        self.server_send(flow, sched);
    }

    fn on_request_rto(&mut self, flow: u32, generation: u32, sched: &mut Scheduler<SimEvent>) {
        let f = &self.flows[flow as usize];
        if f.expected > 0 || f.complete || generation != f.request_generation {
            return;
        }
        self.send_request(flow, sched);
    }

    fn on_delivered(&mut self, pkt: Packet, sched: &mut Scheduler<SimEvent>) {
        match (pkt.kind, pkt.dir) {
            (PacketKind::Request, _) => {
                let f = &mut self.flows[pkt.flow as usize];
                if !f.started {
                    f.started = true;
                    self.server_send(pkt.flow, sched);
                }
            }
            (PacketKind::Data, _) => self.user_receives(pkt, sched),
            (PacketKind::Ack { cumulative }, _) => self.server_acked(pkt.flow, cumulative, sched),
            (PacketKind::Video { frame }, _) => {
                let now = sched.now();
                let s = &mut self.sessions[pkt.flow as usize];
                if let SessionKind::Video { start, received } = &mut s.kind {
                    if now <= *start + self.video_schedule[frame as usize].deadline {
                        received[frame as usize] += 1;
                    }
                }
            }
            (PacketKind::Probe, _) => {}
        }
    }

    fn user_receives(&mut self, pkt: Packet, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let f = &mut self.flows[pkt.flow as usize];
        if pkt.seq == f.expected {
            f.expected += 1;
        }
        let (cum, onu, user) = (f.expected, f.onu, f.user);
        let just_completed = !f.complete && f.expected as usize == f.segments.len();
        if just_completed {
            f.complete = true;
        }
        let ack_bytes = self.traffic.transport.ack_bytes;
        let ack = self.packet(pkt.flow, cum, 0, ack_bytes, Direction::Up, onu, user, PacketKind::Ack { cumulative: cum }, now);
        self.net.inject_up(ack, sched);
        if just_completed {
            let session = self.flows[pkt.flow as usize].session;
            self.object_complete(session, sched);
        }
    }

    fn server_acked(&mut self, flow: u32, cumulative: u32, sched: &mut Scheduler<SimEvent>) {
        let f = &mut self.flows[flow as usize];
        if f.finished || cumulative <= f.base {
            return;
        }
        f.base = cumulative;
        f.next = f.next.max(f.base);
        if f.base as usize == f.segments.len() {
            f.finished = true;
            f.timer_armed = false;
            f.generation += 1;
            return;
        }
        f.timer_armed = false;
        self.server_send(flow, sched);
        if !self.flows[flow as usize].timer_armed {
            self.arm_timer(flow, sched);
        }
    }

    fn object_complete(&mut self, session: u32, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let think_mean = self.traffic.web.think_time_mean_s;
        let s = &mut self.sessions[session as usize];
        let SessionKind::Web { stream, pages_left, page } = &mut s.kind else {
            unreachable!("web object on a video session")
        };
        let p = page.as_mut().expect("page in progress");
        if p.next < p.objects.len() {
            let size = p.objects[p.next];
            p.next += 1;
            self.open_flow(session, size, sched);
            return;
        }
        self.pages[p.trace].completion = Some(now);
        *page = None;
        *pages_left -= 1;
        if *pages_left > 0 {
            let think = if think_mean > 0.0 { stream.exponential(think_mean) } else { 0.0 };
            sched.schedule_in(SimTime::from_secs(think), SimEvent::PageStart { session });
        }
    }

    fn on_video_frame(&mut self, session: u32, slot: u32, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let s = &self.sessions[session as usize];
        let (onu, user) = (s.onu, s.user);
        let SessionKind::Video { start, .. } = s.kind else {
            unreachable!("frame on a web session")
        };
        let header = self.traffic.transport.header_bytes;
        let segs = self.video_segments[slot as usize].clone();
        for seg in segs {
            let pkt = self.packet(session, seg.index, seg.payload, seg.payload + header, Direction::Down, onu, user, PacketKind::Video { frame: slot }, now);
            self.net.inject_down(pkt, sched);
        }
        if let Some(next) = self.video_schedule.get(slot as usize + 1) {
            sched
                .schedule(start + next.emit, SimEvent::VideoFrame { session, slot: slot + 1 })
                .expect("frames are emitted in order");
        }
    }

    fn on_probe(&mut self, onu: u32, dir: Direction, sched: &mut Scheduler<SimEvent>) {
        let now = sched.now();
        let p = self.traffic.probe.clone().expect("probe load configured");
        let (rate, idx) = match dir {
            Direction::Down => (p.down_bps_per_onu, 0),
            Direction::Up => (p.up_bps_per_onu, 1),
        };
        let bytes = p.packet_bytes;
        let pkt = self.packet(0, 0, bytes, bytes, dir, onu, onu * self.net.config().users_per_onu, PacketKind::Probe, now);
        match dir {
            Direction::Down => self.net.inject_down(pkt, sched),
            Direction::Up => self.net.inject_up(pkt, sched),
        }
        let gap = self.probes[onu as usize][idx].exponential(8.0 * bytes as f64 / rate);
        sched.schedule_in(SimTime::from_secs(gap), SimEvent::Probe { onu, dir });
    }

    /// Receipts of video GOPs that start at or after `warmup` and whose
    /// deadlines all fall within the run.
    fn frame_receipts(&self, warmup: SimTime, horizon: SimTime) -> Vec<FrameReceipt> {
        let mut out = Vec::new();
        let sched = &self.video_schedule;
        for (id, s) in self.sessions.iter().enumerate() {
            let SessionKind::Video { start, received } = &s.kind else { continue };
            let mut slot = 0;
            while slot < sched.len() {
                let gop = sched[slot].gop;
                let len = sched[slot].gop_len as usize;
                let frames = &sched[slot..slot + len];
                let first = *start + frames[0].emit;
                let last_deadline = frames.iter().map(|f| *start + f.deadline).max().expect("non-empty GOP");
                if first >= warmup && last_deadline <= horizon {
                    for (k, f) in frames.iter().enumerate() {
                        let needed = self.video_segments[slot + k].len() as u32;
                        out.push(FrameReceipt {
                            stream: id as u32,
                            index: f.index,
                            gop,
                            pos: f.pos,
                            gop_len: f.gop_len,
                            frame_type: f.frame_type,
                            in_time: received[slot + k] == needed,
                        });
                    }
                }
                slot += len;
            }
        }
        out
    }
}

impl Handler<SimEvent> for World {
    type Error = Infallible;

    fn handle(&mut self, event: Event<SimEvent>, sched: &mut Scheduler<SimEvent>) -> Result<(), Infallible> {
        match event.payload {
            SimEvent::Net(e) => {
                if let Some(pkt) = self.net.handle(e, sched) {
                    self.on_delivered(pkt, sched);
                }
            }
            SimEvent::SessionArrival { user } => self.on_session_arrival(user, sched),
            SimEvent::PageStart { session } => self.on_page_start(session, sched),
            SimEvent::VideoFrame { session, slot } => self.on_video_frame(session, slot, sched),
            SimEvent::Rto { flow, generation } => self.on_rto(flow, generation, sched),
            SimEvent::RequestRto { flow, generation } => self.on_request_rto(flow, generation, sched),
            SimEvent::Probe { onu, dir } => self.on_probe(onu, dir, sched),
        }
        Ok(())
    }
}

/// Runs one replication to completion.
pub fn run_replication(cfg: &RunConfig) -> Result<RunOutput, SimError> {
    cfg.architecture.validate()?;
    cfg.traffic.validate()?;
    if cfg.warmup >= cfg.duration && cfg.duration > SimTime::ZERO {
        return Err(SimError::Warmup { warmup: cfg.warmup, duration: cfg.duration });
    }
    let arch = &cfg.architecture;
    let traffic = &cfg.traffic;
    let net = Network::build(arch, SimTime::from_secs(traffic.transport.core_rtt_s))?;
    let prefix = &cfg.stream_prefix;
    let join = |rest: &str| if prefix.is_empty() { rest.to_string() } else { format!("{prefix}/{rest}") };

    let mut users = Vec::new();
    for onu in 0..arch.onu_count {
        for u in 0..arch.users_per_onu {
            let path = join(&format!("traffic/onu/{onu}/user/{u}"));
            users.push(User {
                onu,
                arrivals: derive_stream(cfg.root_seed, &format!("{path}/arrivals")),
                path,
                sessions: 0,
            });
        }
    }
    let probes = (0..arch.onu_count)
        .map(|onu| {
            [
                derive_stream(cfg.root_seed, &join(&format!("probe/onu/{onu}/down"))),
                derive_stream(cfg.root_seed, &join(&format!("probe/onu/{onu}/up"))),
            ]
        })
        .collect();
    let video_schedule = Arc::new(generate_gop_schedule(&traffic.video));
    let video_segments = video_schedule
        .iter()
        .map(|f| segment_object(f.bytes, traffic.transport.mtu_payload))
        .collect();
    let mut world = World {
        net,
        traffic: traffic.clone(),
        profile: traffic.user_profile()?,
        users,
        sessions: Vec::new(),
        flows: Vec::new(),
        pages: Vec::new(),
        video_schedule,
        video_segments,
        probes,
        next_packet: 0,
        counts: SessionCounts::default(),
    };

    let mut engine = Engine::new();
    if cfg.trace_hash {
        engine = engine.with_trace_hash();
    }
    let sched = engine.scheduler();
    world.net.start(sched);
    for (i, u) in world.users.iter_mut().enumerate() {
        if let Some(t) = next_session_time(&world.profile, SimTime::ZERO, &mut u.arrivals) {
            sched.schedule(t, SimEvent::SessionArrival { user: i as u32 }).expect("future");
        }
    }
    if let Some(p) = &traffic.probe {
        for onu in 0..arch.onu_count {
            for (dir, rate, idx) in [(Direction::Down, p.down_bps_per_onu, 0), (Direction::Up, p.up_bps_per_onu, 1)] {
                if rate > 0.0 {
                    let gap = world.probes[onu as usize][idx].exponential(8.0 * p.packet_bytes as f64 / rate);
                    sched.schedule(SimTime::from_secs(gap), SimEvent::Probe { onu, dir }).expect("future");
                }
            }
        }
    }
    engine.run_until(cfg.duration, &mut world)?;

    let frames = world.frame_receipts(cfg.warmup, cfg.duration);
    let conservation = world.net.total_conservation();
    Ok(RunOutput {
        mac: world.net.mac_stats().to_vec(),
        pages: world.pages,
        frames,
        delivered_bytes: world.net.delivered_bytes(),
        horizon: cfg.duration,
        warmup: cfg.warmup,
        events: engine.counts(),
        conservation,
        sessions: world.counts,
        trace_hash: engine.trace_hash(),
        gop: traffic.video.gop,
        activity: world.net.into_activity(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchKind;
    use crate::traffic::ProbeLoad;

    fn base(kind: ArchKind) -> RunConfig {
        RunConfig {
            architecture: ArchitectureConfig { kind, onu_count: 4, ..Default::default() },
            traffic: TrafficConfig {
                sessions_per_hour: 120.0,
                day_profile: Some(crate::traffic::DayProfileSpec::Named("flat".into())),
                ..Default::default()
            },
            duration: SimTime::from_secs(60.0),
            warmup: SimTime::from_secs(6.0),
            root_seed: 1,
            stream_prefix: "rep/0".into(),
            trace_hash: true,
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = base(ArchKind::TdmPon);
        let a = run_replication(&cfg).unwrap();
        let b = run_replication(&cfg).unwrap();
        assert_eq!(a.trace_hash, b.trace_hash);
        assert_eq!(a.pages, b.pages);
        assert!(a.trace_hash.is_some());
    }

    #[test]
    fn every_architecture_completes_pages_and_conserves_packets() {
        for kind in [ArchKind::PointToPoint, ArchKind::TdmPon, ArchKind::HybridTwdmPon] {
            let out = run_replication(&base(kind)).unwrap();
            assert!(out.sessions.web > 0, "{kind:?}");
            assert!(out.pages.iter().filter(|p| p.completion.is_some()).count() > 5, "{kind:?}");
            assert!(out.conservation.balanced(), "{kind:?}: {:?}", out.conservation);
            let e = out.events;
            assert_eq!(e.scheduled, e.processed + e.cancelled + e.remaining);
            for p in &out.pages {
                if let Some(c) = p.completion {
                    assert!(c >= p.request);
                }
            }
        }
    }

    #[test]
    fn unloaded_page_delay_is_bounded_by_transfer_time() {
        // A single page with one small object on an idle point-to-point link
        // takes about two core round trips plus serialisation.
        let mut cfg = base(ArchKind::PointToPoint);
        cfg.traffic.web_fraction = 1.0;
        cfg.traffic.sessions_per_hour = 30.0;
        let out = run_replication(&cfg).unwrap();
        let delay = out.metric(QoeMetric::PageDelay).unwrap();
        assert!(delay > 0.02 && delay < 1.0, "{delay}");
    }

    #[test]
    fn video_only_run_reports_full_dfr_when_idle() {
        let mut cfg = base(ArchKind::PointToPoint);
        cfg.traffic.web_fraction = 0.0;
        cfg.traffic.sessions_per_hour = 30.0;
        cfg.traffic.video.duration_s = 10.0;
        let out = run_replication(&cfg).unwrap();
        assert!(!out.frames.is_empty());
        assert_eq!(out.metric(QoeMetric::DecodableFrameRate).unwrap(), 1.0);
    }

    #[test]
    fn probe_load_is_carried() {
        let mut cfg = base(ArchKind::HybridTwdmPon);
        cfg.traffic.sessions_per_hour = 0.0;
        cfg.traffic.probe = Some(ProbeLoad { down_bps_per_onu: 10e6, up_bps_per_onu: 5e6, packet_bytes: 1000 });
        cfg.duration = SimTime::from_secs(2.0);
        cfg.warmup = SimTime::ZERO;
        let out = run_replication(&cfg).unwrap();
        let bits = out.delivered_bytes as f64 * 8.0;
        let offered = 4.0 * 15e6 * 2.0;
        assert!((bits / offered - 1.0).abs() < 0.05, "{bits} vs {offered}");
    }
}
