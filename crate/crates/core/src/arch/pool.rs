//! Packet-level scheduling of the tunable transceiver pool in the hybrid PON.

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolPolicy {
    /// Serve the wavelength whose head-of-line packet is oldest.
    #[default]
    OldestFirst,
    /// Serve the wavelength with the most queued bytes.
    LongestQueueFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Powered {
    Active,
    Off,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransceiverState {
    pub id: usize,
    pub current_wavelength: Option<u32>,
    pub busy_until: SimTime,
    pub powered: Powered,
}

impl TransceiverState {
    pub fn new(id: usize, wavelength: Option<u32>) -> Self {
        TransceiverState {
            id,
            current_wavelength: wavelength,
            busy_until: SimTime::ZERO,
            powered: Powered::Active,
        }
    }

    pub fn is_idle(&self, now: SimTime) -> bool {
        self.busy_until <= now
    }
}

/// Backlog of one wavelength as seen by the scheduler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Backlog {
    pub hol_age: SimTime,
    pub bytes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub transceiver: usize,
    pub wavelength: u32,
    pub tune_until: SimTime,
    pub transmit_start: SimTime,
}

/// A wavelength whose head-of-line packet has waited this many tuning times
/// may pull a transceiver away from the wavelength it is tuned to.
pub const HOLD_TUNINGS: u64 = 10;

/// Assigns idle transceivers to distinct backlogged wavelengths.
///
/// `queues[w]` is `None` when wavelength `w` is empty or already being served.
/// An idle transceiver keeps serving the wavelength it is tuned to while that
/// wavelength is backlogged, unless some other backlogged wavelength without
/// a tuned idle transceiver has waited [`HOLD_TUNINGS`] tuning times. Otherwise
/// wavelengths are ranked by the policy key (ties to the lowest index); the
/// top ones are matched first to idle transceivers already tuned to them, then
/// to the remaining idle transceivers in id order, which pay `tuning`.
pub fn assign_transceiver(
    pool: &[TransceiverState],
    queues: &[Option<Backlog>],
    now: SimTime,
    tuning: SimTime,
    policy: PoolPolicy,
) -> Vec<Assignment> {
    let mut idle: Vec<&TransceiverState> = pool.iter().filter(|t| t.is_idle(now)).collect();
    if idle.is_empty() {
        return Vec::new();
    }
    let mut ranked: Vec<(u32, Backlog)> = queues
        .iter()
        .enumerate()
        .filter_map(|(w, q)| q.map(|b| (w as u32, b)))
        .collect();
    match policy {
        PoolPolicy::OldestFirst => ranked.sort_by(|a, b| b.1.hol_age.cmp(&a.1.hol_age).then(a.0.cmp(&b.0))),
        PoolPolicy::LongestQueueFirst => ranked.sort_by(|a, b| b.1.bytes.cmp(&a.1.bytes).then(a.0.cmp(&b.0))),
    }
    let tuned_idle = |w: u32| idle.iter().any(|t| t.current_wavelength == Some(w));
    let hold = SimTime::from_ps(tuning.as_ps().saturating_mul(HOLD_TUNINGS));
    let starving = ranked.iter().any(|&(w, b)| !tuned_idle(w) && b.hol_age >= hold);
    if !starving {
        // Tuned transceivers stay put; the rest follow the ranking.
        let (stay, rest): (Vec<_>, Vec<_>) = ranked.into_iter().partition(|&(w, _)| tuned_idle(w));
        ranked = stay.into_iter().chain(rest).collect();
    }
    ranked.truncate(idle.len());

    let mut out = Vec::with_capacity(ranked.len());
    let mut unmatched = Vec::new();
    for &(w, _) in &ranked {
        if let Some(pos) = idle.iter().position(|t| t.current_wavelength == Some(w)) {
            let t = idle.remove(pos);
            out.push(Assignment { transceiver: t.id, wavelength: w, tune_until: now, transmit_start: now });
        } else {
            unmatched.push(w);
        }
    }
    for (w, t) in unmatched.into_iter().zip(idle) {
        let ready = now + tuning;
        out.push(Assignment { transceiver: t.id, wavelength: w, tune_until: ready, transmit_start: ready });
    }
    out
}
