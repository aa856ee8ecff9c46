//! Deterministic discrete-event engine.
//!
//! Time is kept as integer picoseconds so that event ordering never depends on
//! floating-point rounding. Events are dequeued in `(time, seq)` order where
//! `seq` is a per-run insertion counter, which gives FIFO behaviour for events
//! scheduled at the same instant.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::Write;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const PS_PER_SEC: f64 = 1e12;

/// Simulation time in integer picoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    /// Converts seconds to the nearest picosecond. Negative and NaN inputs clamp to zero.
    pub fn from_secs(secs: f64) -> Self {
        if !(secs > 0.0) {
            return SimTime(0);
        }
        let ps = (secs * PS_PER_SEC).round();
        if ps >= u64::MAX as f64 {
            SimTime::MAX
        } else {
            SimTime(ps as u64)
        }
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / PS_PER_SEC
    }

    /// Serialization time of `bytes` on a link of `rate_bps`.
    pub fn transmission(bytes: u64, rate_bps: f64) -> Self {
        SimTime::from_secs(bytes as f64 * 8.0 / rate_bps)
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl std::ops::AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl std::ops::Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12}s", self.as_secs())
    }
}

/// Describes an event payload for tracing.
pub trait EventKind {
    /// Entity the event is addressed to.
    fn target(&self) -> u64;
    /// Short kind label used in trace lines.
    fn kind(&self) -> &'static str;
}

#[derive(Debug)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: u64,
    pub payload: P,
}

impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl<P> Eq for Event<P> {}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Event<P> {
    // Reversed so that BinaryHeap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Handle returned by [`Scheduler::schedule`], usable for cancellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("past event: scheduled at {at} but clock is {now}")]
    PastEvent { at: SimTime, now: SimTime },
}

/// Event queue plus clock. Handlers receive this to schedule follow-up events.
pub struct Scheduler<P> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Event<P>>,
    cancelled: Vec<u64>,
    scheduled: u64,
    cancelled_count: u64,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            cancelled: Vec::new(),
            scheduled: 0,
            cancelled_count: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Enqueues `payload` at absolute time `at`.
    pub fn schedule(&mut self, at: SimTime, payload: P) -> Result<EventHandle, ScheduleError> {
        if at < self.now {
            return Err(ScheduleError::PastEvent { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.scheduled += 1;
        self.heap.push(Event { time: at, seq, payload });
        Ok(EventHandle(seq))
    }

    /// Enqueues `payload` after `delay` from the current clock. Never fails.
    pub fn schedule_in(&mut self, delay: SimTime, payload: P) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, payload)
            .expect("relative schedule cannot be in the past")
    }

    /// Cancels a pending event. Returns `false` if it already fired or was cancelled.
    ///
    /// Linear in the queue size; intended for rare use. Periodic timers should
    /// prefer generation counters.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if self.cancelled.contains(&handle.0) {
            return false;
        }
        if self.heap.iter().any(|e| e.seq == handle.0) {
            self.cancelled.push(handle.0);
            self.cancelled_count += 1;
            true
        } else {
            false
        }
    }

    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    fn pop_until(&mut self, t_end: SimTime) -> Option<Event<P>> {
        loop {
            let head = self.heap.peek()?;
            if head.time > t_end {
                return None;
            }
            let ev = self.heap.pop().expect("peeked");
            if let Some(pos) = self.cancelled.iter().position(|&s| s == ev.seq) {
                self.cancelled.swap_remove(pos);
                continue;
            }
            return Some(ev);
        }
    }
}

/// Receives events from [`Engine::run_until`].
pub trait Handler<P> {
    type Error: std::error::Error + 'static;
    fn handle(&mut self, event: Event<P>, sched: &mut Scheduler<P>) -> Result<(), Self::Error>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub events_processed: u64,
    pub final_clock: SimTime,
}

/// Event accounting: `scheduled == processed + cancelled + remaining`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventCounts {
    pub scheduled: u64,
    pub processed: u64,
    pub cancelled: u64,
    pub remaining: u64,
}

#[derive(Debug, Error)]
pub enum RunError<E: std::error::Error + 'static> {
    #[error("run end {t_end} precedes clock {now}")]
    EndInPast { t_end: SimTime, now: SimTime },
    #[error("handler failed on event seq={seq} kind={kind} at {time}: {source}")]
    Handler {
        seq: u64,
        time: SimTime,
        kind: &'static str,
        #[source]
        source: E,
    },
    #[error("trace write failed: {0}")]
    Trace(#[from] std::io::Error),
}

/// Single-threaded simulation engine.
pub struct Engine<P> {
    sched: Scheduler<P>,
    processed: u64,
    trace_hasher: Option<Sha256>,
    trace_sink: Option<Box<dyn Write + Send>>,
}

impl<P> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Engine<P> {
    pub fn new() -> Self {
        Engine {
            sched: Scheduler::new(),
            processed: 0,
            trace_hasher: None,
            trace_sink: None,
        }
    }

    /// Enables trace hashing. Every processed event contributes one
    /// `time_ps\tseq\ttarget\tkind\n` line to the digest.
    pub fn with_trace_hash(mut self) -> Self {
        self.trace_hasher = Some(Sha256::new());
        self
    }

    /// Writes the event trace to `sink` as tab-separated lines.
    pub fn with_trace_sink(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.trace_sink = Some(sink);
        self
    }

    pub fn scheduler(&mut self) -> &mut Scheduler<P> {
        &mut self.sched
    }

    pub fn now(&self) -> SimTime {
        self.sched.now
    }

    pub fn counts(&self) -> EventCounts {
        EventCounts {
            scheduled: self.sched.scheduled,
            processed: self.processed,
            cancelled: self.sched.cancelled_count,
            remaining: self.sched.pending() as u64,
        }
    }

    /// Hex digest of the trace so far, if hashing is enabled.
    pub fn trace_hash(&self) -> Option<String> {
        self.trace_hasher
            .as_ref()
            .map(|h| hex_digest(&h.clone().finalize()))
    }
}

impl<P: EventKind> Engine<P> {
    /// Processes every event with `time <= t_end` and leaves the clock at `t_end`.
    pub fn run_until<H: Handler<P>>(
        &mut self,
        t_end: SimTime,
        handler: &mut H,
    ) -> Result<RunSummary, RunError<H::Error>> {
        if t_end < self.sched.now {
            return Err(RunError::EndInPast { t_end, now: self.sched.now });
        }
        let start_count = self.processed;
        while let Some(ev) = self.sched.pop_until(t_end) {
            assert!(ev.time >= self.sched.now, "event time went backwards");
            self.sched.now = ev.time;
            self.processed += 1;
            let (seq, time, kind) = (ev.seq, ev.time, ev.payload.kind());
            if self.trace_hasher.is_some() || self.trace_sink.is_some() {
                let line = format!(
                    "{}\t{}\t{}\t{}\n",
                    time.as_ps(),
                    seq,
                    ev.payload.target(),
                    kind
                );
                if let Some(h) = self.trace_hasher.as_mut() {
                    h.update(line.as_bytes());
                }
                if let Some(w) = self.trace_sink.as_mut() {
                    w.write_all(line.as_bytes())?;
                }
            }
            handler
                .handle(ev, &mut self.sched)
                .map_err(|source| RunError::Handler { seq, time, kind, source })?;
        }
        self.sched.now = t_end;
        Ok(RunSummary {
            events_processed: self.processed - start_count,
            final_clock: t_end,
        })
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reproducible random-number stream addressed by `(root_seed, path)`.
///
/// The generator is ChaCha12 keyed by `SHA-256("ngoa-stream-v1" || root_seed_le || path)`.
/// Uniform variates take the top 53 bits of `next_u64`. Both choices are frozen:
/// changing either changes every recorded result.
#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    path: String,
    rng: ChaCha12Rng,
}

/// Derives the stream for `path` (labels separated by `/`, e.g. `onu/7/web`).
pub fn derive_stream(root_seed: u64, path: &str) -> RngStream {
    let mut h = Sha256::new();
    h.update(b"ngoa-stream-v1");
    h.update(root_seed.to_le_bytes());
    h.update(path.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    RngStream {
        root_seed,
        path: path.to_string(),
        rng: ChaCha12Rng::from_seed(key),
    }
}

impl RngStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    /// Independent sub-stream at `path/label`.
    pub fn child(&self, label: &str) -> RngStream {
        let path = if self.path.is_empty() {
            label.to_string()
        } else {
            format!("{}/{}", self.path, label)
        };
        derive_stream(self.root_seed, &path)
    }

    /// Uniform variate in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential variate with the given mean.
    pub fn exponential(&mut self, mean: f64) -> f64 {
        // 1 - U lies in (0, 1], so the log is finite.
        -mean * (1.0 - self.uniform()).ln()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
