//! Power-state accounting.
//!
//! The simulator records when each OLT transceiver and ONU is busy. After a
//! run those busy intervals are turned into power states (active, idle,
//! sleep/off) and integrated. Accounting is a side channel: it never delays
//! traffic. A sleeping component is woken `wake_s` before its next busy
//! interval, and that wake period is charged at active power.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::{ArchKind, ArchitectureConfig};
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    OltTransceiver(u32),
    Onu(u32),
}

/// Busy intervals per OLT transceiver and per ONU.
#[derive(Clone, Debug, Default)]
pub struct ActivityLog {
    olt: Vec<Vec<(SimTime, SimTime)>>,
    onu: Vec<Vec<(SimTime, SimTime)>>,
}

impl ActivityLog {
    pub fn new(olt_transceivers: usize, onus: usize) -> Self {
        ActivityLog { olt: vec![Vec::new(); olt_transceivers], onu: vec![Vec::new(); onus] }
    }

    pub fn record(&mut self, c: Component, start: SimTime, end: SimTime) {
        if end <= start {
            return;
        }
        let list = match c {
            Component::OltTransceiver(i) => &mut self.olt[i as usize],
            Component::Onu(i) => &mut self.onu[i as usize],
        };
        // Most intervals arrive in order and touch the previous one.
        if let Some(last) = list.last_mut() {
            if start >= last.0 && start <= last.1 {
                last.1 = last.1.max(end);
                return;
            }
        }
        list.push((start, end));
    }

    pub fn olt_transceivers(&self) -> usize {
        self.olt.len()
    }

    pub fn onus(&self) -> usize {
        self.onu.len()
    }

    /// Sorted, non-overlapping busy intervals of `c`.
    pub fn merged(&self, c: Component) -> Vec<(SimTime, SimTime)> {
        let raw = match c {
            Component::OltTransceiver(i) => &self.olt[i as usize],
            Component::Onu(i) => &self.onu[i as usize],
        };
        merge_intervals(raw)
    }
}

fn merge_intervals(raw: &[(SimTime, SimTime)]) -> Vec<(SimTime, SimTime)> {
    let mut v = raw.to_vec();
    v.sort_unstable();
    let mut out: Vec<(SimTime, SimTime)> = Vec::with_capacity(v.len());
    for (s, e) in v {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentClass {
    Core,
    L2Switch,
    OltTransceiver,
    Onu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerState {
    Active,
    Idle,
    Sleep,
    Off,
}

/// Power parameters of one component class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassPower {
    pub active_w: f64,
    pub idle_w: f64,
    pub sleep_w: f64,
    /// Inactivity before entering sleep, in seconds.
    pub sleep_after_s: f64,
    /// Wake-up transition, charged at active power.
    pub wake_s: f64,
}

impl ClassPower {
    fn draw(&self, state: PowerState) -> f64 {
        match state {
            PowerState::Active => self.active_w,
            PowerState::Idle => self.idle_w,
            PowerState::Sleep => self.sleep_w,
            PowerState::Off => 0.0,
        }
    }

    fn validate(&self, class: &'static str) -> Result<(), EnergyError> {
        let ok = self.sleep_w >= 0.0
            && self.sleep_w <= self.idle_w
            && self.idle_w <= self.active_w
            && self.active_w.is_finite()
            && self.sleep_after_s >= 0.0
            && self.wake_s >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(EnergyError::InvalidProfile(class))
        }
    }
}

/// Per-class power parameters. OLT transceiver and ONU figures are per device;
/// core and layer-2 switch figures are per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerProfile {
    pub core: ClassPower,
    pub l2_switch: ClassPower,
    pub olt_transceiver: ClassPower,
    pub onu: ClassPower,
}

impl Default for PowerProfile {
    // Calibrated so that a 32-ONU single-transceiver PON draws 18.8% core,
    // 14.1% layer 2, 7.0% OLT and 60.1% ONU when everything is active.
    fn default() -> Self {
        let class = |active: f64, idle: f64| ClassPower {
            active_w: active,
            idle_w: idle,
            sleep_w: active * 0.1,
            sleep_after_s: 0.05,
            wake_s: 0.002,
        };
        PowerProfile {
            core: class(50.0, 50.0),
            l2_switch: class(37.5, 37.5),
            olt_transceiver: class(18.75, 15.0),
            onu: class(5.0, 4.0),
        }
    }
}

impl PowerProfile {
    pub fn class(&self, c: ComponentClass) -> &ClassPower {
        match c {
            ComponentClass::Core => &self.core,
            ComponentClass::L2Switch => &self.l2_switch,
            ComponentClass::OltTransceiver => &self.olt_transceiver,
            ComponentClass::Onu => &self.onu,
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        self.core.validate("core")?;
        self.l2_switch.validate("l2_switch")?;
        self.olt_transceiver.validate("olt_transceiver")?;
        self.onu.validate("onu")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("component {0} is not mapped to a power class")]
    Unmapped(String),
    #[error("power profile for {0} violates sleep <= idle <= active or has negative timings")]
    InvalidProfile(&'static str),
}

/// Watts per class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassWatts {
    pub core: f64,
    pub l2_switch: f64,
    pub olt: f64,
    pub onu: f64,
}

impl ClassWatts {
    pub fn total(&self) -> f64 {
        self.core + self.l2_switch + self.olt + self.onu
    }

    fn get_mut(&mut self, c: ComponentClass) -> &mut f64 {
        match c {
            ComponentClass::Core => &mut self.core,
            ComponentClass::L2Switch => &mut self.l2_switch,
            ComponentClass::OltTransceiver => &mut self.olt,
            ComponentClass::Onu => &mut self.onu,
        }
    }

    fn scaled(&self, k: f64) -> ClassWatts {
        ClassWatts { core: self.core * k, l2_switch: self.l2_switch * k, olt: self.olt * k, onu: self.onu * k }
    }

    fn add(&self, o: &ClassWatts) -> ClassWatts {
        ClassWatts {
            core: self.core + o.core,
            l2_switch: self.l2_switch + o.l2_switch,
            olt: self.olt + o.olt,
            onu: self.onu + o.onu,
        }
    }

    /// Percentage of the total per class.
    pub fn shares_pct(&self) -> ClassWatts {
        let t = self.total();
        if t == 0.0 {
            return ClassWatts::default();
        }
        self.scaled(100.0 / t)
    }
}

/// One component's power state at an instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentState {
    pub id: String,
    pub class: Option<ComponentClass>,
    pub state: PowerState,
}

/// Instantaneous draw of a set of components.
pub fn power_draw(components: &[ComponentState], profile: &PowerProfile) -> Result<ClassWatts, EnergyError> {
    let mut w = ClassWatts::default();
    for c in components {
        let class = c.class.ok_or_else(|| EnergyError::Unmapped(c.id.clone()))?;
        *w.get_mut(class) += profile.class(class).draw(c.state);
    }
    Ok(w)
}

/// Component inventory of a network, with every device in `state`.
pub fn inventory(config: &ArchitectureConfig, state: PowerState) -> Vec<ComponentState> {
    let xcvrs = olt_transceiver_count(config);
    let mut v = vec![
        ComponentState { id: "core".into(), class: Some(ComponentClass::Core), state },
        ComponentState { id: "l2".into(), class: Some(ComponentClass::L2Switch), state },
    ];
    v.extend((0..xcvrs).map(|i| ComponentState {
        id: format!("olt/{i}"),
        class: Some(ComponentClass::OltTransceiver),
        state,
    }));
    v.extend((0..config.onu_count).map(|i| ComponentState {
        id: format!("onu/{i}"),
        class: Some(ComponentClass::Onu),
        state,
    }));
    v
}

pub fn olt_transceiver_count(config: &ArchitectureConfig) -> u32 {
    match config.kind {
        ArchKind::PointToPoint => config.onu_count,
        ArchKind::TdmPon => 1,
        ArchKind::HybridTwdmPon => config.transceiver_pool,
    }
}

/// Power-state segments of one component over `[0, horizon)`.
///
/// Gaps shorter than `sleep_after_s + wake_s` are spent idle. Longer gaps go
/// idle for `sleep_after_s`, then `low` (sleep or off), then active for
/// `wake_s` before the next busy interval. The trailing gap never wakes.
pub fn state_segments(
    busy: &[(SimTime, SimTime)],
    p: &ClassPower,
    low: PowerState,
    horizon: SimTime,
) -> Vec<(SimTime, SimTime, PowerState)> {
    let after = SimTime::from_secs(p.sleep_after_s);
    let wake = SimTime::from_secs(p.wake_s);
    let mut out = Vec::new();
    let push = |s: SimTime, e: SimTime, st: PowerState, out: &mut Vec<(SimTime, SimTime, PowerState)>| {
        let e = e.min(horizon);
        if e > s {
            out.push((s, e, st));
        }
    };
    let mut prev_end = SimTime::ZERO;
    for &(s, e) in busy {
        if s >= horizon {
            break;
        }
        let s = s.max(prev_end);
        let gap = s - prev_end;
        if gap > after + wake {
            push(prev_end, prev_end + after, PowerState::Idle, &mut out);
            push(prev_end + after, s - wake, low, &mut out);
            push(s - wake, s, PowerState::Active, &mut out);
        } else {
            push(prev_end, s, PowerState::Idle, &mut out);
        }
        push(s, e, PowerState::Active, &mut out);
        prev_end = e.max(prev_end);
    }
    if prev_end < horizon {
        let gap = horizon - prev_end;
        if gap > after {
            push(prev_end, prev_end + after, PowerState::Idle, &mut out);
            push(prev_end + after, horizon, low, &mut out);
        } else {
            push(prev_end, horizon, PowerState::Idle, &mut out);
        }
    }
    out
}

/// Piecewise-constant power by class. Segment `i` covers
/// `[times[i], times[i+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerTimeline {
    times: Vec<SimTime>,
    watts: Vec<ClassWatts>,
}

impl PowerTimeline {
    /// Builds a timeline from explicit segments; `times.len() == watts.len() + 1`.
    pub fn from_segments(times: Vec<SimTime>, watts: Vec<ClassWatts>) -> Self {
        assert_eq!(times.len(), watts.len() + 1, "one boundary more than segments");
        assert!(times.windows(2).all(|w| w[0] <= w[1]), "boundaries must be sorted");
        PowerTimeline { times, watts }
    }

    pub fn constant(start: SimTime, end: SimTime, w: ClassWatts) -> Self {
        Self::from_segments(vec![start, end], vec![w])
    }

    pub fn start(&self) -> SimTime {
        self.times[0]
    }

    pub fn end(&self) -> SimTime {
        *self.times.last().expect("non-empty")
    }

    pub fn segments(&self) -> impl Iterator<Item = (SimTime, SimTime, &ClassWatts)> {
        self.times.windows(2).zip(&self.watts).map(|(t, w)| (t[0], t[1], w))
    }

    /// Restriction to `[from, to)`.
    pub fn slice(&self, from: SimTime, to: SimTime) -> PowerTimeline {
        let mut times = vec![from];
        let mut watts = Vec::new();
        for (s, e, w) in self.segments() {
            let (s, e) = (s.max(from), e.min(to));
            if e > s {
                if *times.last().unwrap() != s {
                    // Gap in coverage: cannot happen for timelines built here.
                    times.push(s);
                    watts.push(ClassWatts::default());
                }
                times.push(e);
                watts.push(*w);
            }
        }
        if watts.is_empty() {
            times.push(to.max(from));
            watts.push(ClassWatts::default());
        }
        PowerTimeline { times, watts }
    }

    /// Time-averaged power in consecutive bins of width `bin`.
    pub fn binned(&self, bin: SimTime) -> Vec<(SimTime, ClassWatts)> {
        let mut out = Vec::new();
        if bin == SimTime::ZERO {
            return out;
        }
        let mut segs = self.segments().peekable();
        let mut t = self.start();
        while t < self.end() {
            let e = (t + bin).min(self.end());
            let mut acc = ClassWatts::default();
            while let Some(&(s0, e0, w)) = segs.peek() {
                let (a, b) = (s0.max(t), e0.min(e));
                if b > a {
                    acc = acc.add(&w.scaled((b - a).as_secs()));
                }
                if e0 <= e {
                    segs.next();
                } else {
                    break;
                }
            }
            out.push((t, acc.scaled(1.0 / (e - t).as_secs())));
            t = e;
        }
        out
    }
}

/// Sums per-component segments into a class timeline over `[0, horizon)`.
fn build_timeline(parts: Vec<(ComponentClass, Vec<(SimTime, SimTime, f64)>)>, horizon: SimTime) -> PowerTimeline {
    let mut deltas: Vec<(SimTime, ComponentClass, f64)> = Vec::new();
    for (class, segs) in parts {
        for (s, e, w) in segs {
            if w != 0.0 {
                deltas.push((s, class, w));
                deltas.push((e, class, -w));
            }
        }
    }
    deltas.sort_by(|a, b| a.0.cmp(&b.0));
    let mut times = vec![SimTime::ZERO];
    let mut watts: Vec<ClassWatts> = Vec::new();
    let mut cur = ClassWatts::default();
    let mut i = 0;
    while i < deltas.len() && deltas[i].0 < horizon {
        let t = deltas[i].0;
        if t > *times.last().unwrap() {
            watts.push(snap(cur));
            times.push(t);
        }
        while i < deltas.len() && deltas[i].0 == t {
            *cur.get_mut(deltas[i].1) += deltas[i].2;
            i += 1;
        }
    }
    if horizon > *times.last().unwrap() || watts.is_empty() {
        watts.push(snap(cur));
        times.push(horizon.max(*times.last().unwrap()));
    }
    PowerTimeline { times, watts }
}

// Removes accumulated rounding noise from repeated +w/-w updates.
fn snap(w: ClassWatts) -> ClassWatts {
    let r = |x: f64| (x * 1e9).round() / 1e9;
    ClassWatts { core: r(w.core), l2_switch: r(w.l2_switch), olt: r(w.olt), onu: r(w.onu) }
}

/// Power timeline of a finished run.
///
/// Core and layer-2 switch are always active. Pooled hybrid transceivers are
/// switched off instead of sleeping; dedicated transceivers and ONUs sleep.
pub fn account_run(
    activity: &ActivityLog,
    config: &ArchitectureConfig,
    profile: &PowerProfile,
    horizon: SimTime,
) -> PowerTimeline {
    let mut parts = vec![
        (ComponentClass::Core, vec![(SimTime::ZERO, horizon, profile.core.active_w)]),
        (ComponentClass::L2Switch, vec![(SimTime::ZERO, horizon, profile.l2_switch.active_w)]),
    ];
    let xcvr_low = if config.kind == ArchKind::HybridTwdmPon { PowerState::Off } else { PowerState::Sleep };
    let mut add = |class: ComponentClass, busy: Vec<(SimTime, SimTime)>, low: PowerState| {
        let p = profile.class(class);
        let segs = state_segments(&busy, p, low, horizon)
            .into_iter()
            .map(|(s, e, st)| (s, e, p.draw(st)))
            .collect();
        parts.push((class, segs));
    };
    for i in 0..activity.olt_transceivers() {
        add(ComponentClass::OltTransceiver, activity.merged(Component::OltTransceiver(i as u32)), xcvr_low);
    }
    for i in 0..activity.onus() {
        add(ComponentClass::Onu, activity.merged(Component::Onu(i as u32)), PowerState::Sleep);
    }
    build_timeline(parts, horizon)
}

/// Integrated energy over a timeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub interval_s: f64,
    pub per_class_j: ClassWatts,
    pub total_j: f64,
    pub delivered_bits: u64,
    /// `None` when nothing was delivered.
    pub energy_per_bit_j: Option<f64>,
    pub shares_pct: ClassWatts,
}

pub fn energy_report(timeline: &PowerTimeline, delivered_bits: u64) -> EnergyReport {
    let mut per_class = ClassWatts::default();
    for (s, e, w) in timeline.segments() {
        per_class = per_class.add(&w.scaled((e - s).as_secs()));
    }
    let total = per_class.total();
    EnergyReport {
        interval_s: (timeline.end() - timeline.start()).as_secs(),
        per_class_j: per_class,
        total_j: total,
        delivered_bits,
        energy_per_bit_j: (delivered_bits > 0).then(|| total / delivered_bits as f64),
        shares_pct: per_class.shares_pct(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn secs(x: f64) -> SimTime {
        SimTime::from_secs(x)
    }

    fn all_active_32() -> ClassWatts {
        let cfg = ArchitectureConfig::default();
        power_draw(&inventory(&cfg, PowerState::Active), &PowerProfile::default()).unwrap()
    }

    #[test]
    fn default_all_active_breakdown() {
        let w = all_active_32();
        assert_eq!((w.core, w.l2_switch, w.olt, w.onu), (50.0, 37.5, 18.75, 160.0));
        assert_eq!(w.total(), 266.25);
        let s = w.shares_pct();
        assert!((s.core - 18.8).abs() < 0.05);
        assert!((s.l2_switch - 14.1).abs() < 0.05);
        assert!((s.olt - 7.0).abs() < 0.05);
        assert!((s.onu - 60.1).abs() < 0.05);
    }

    #[test]
    fn all_sleep_is_ten_percent() {
        let cfg = ArchitectureConfig::default();
        let w = power_draw(&inventory(&cfg, PowerState::Sleep), &PowerProfile::default()).unwrap();
        assert!((w.total() - 26.625).abs() < 1e-12);
    }

    #[test]
    fn switching_off_pooled_transceivers() {
        let cfg = ArchitectureConfig {
            kind: ArchKind::HybridTwdmPon,
            wavelength_count: 4,
            transceiver_pool: 4,
            ..Default::default()
        };
        let p = PowerProfile::default();
        let mut comps = inventory(&cfg, PowerState::Active);
        let on = power_draw(&comps, &p).unwrap();
        for c in comps.iter_mut().filter(|c| c.id == "olt/2" || c.id == "olt/3") {
            c.state = PowerState::Off;
        }
        let off = power_draw(&comps, &p).unwrap();
        assert_eq!(on.olt - off.olt, 2.0 * p.olt_transceiver.active_w);
    }

    #[test]
    fn unmapped_component_rejected() {
        let comps = vec![ComponentState { id: "mystery".into(), class: None, state: PowerState::Active }];
        assert_eq!(power_draw(&comps, &PowerProfile::default()), Err(EnergyError::Unmapped("mystery".into())));
    }

    #[test]
    fn report_arithmetic() {
        let w = ClassWatts { core: 100.0, ..Default::default() };
        let r = energy_report(&PowerTimeline::constant(secs(0.0), secs(3600.0), w), 0);
        assert_eq!(r.total_j, 360_000.0);
        assert_eq!(r.energy_per_bit_j, None);
        let r = energy_report(&PowerTimeline::constant(secs(0.0), secs(10.0), w), 1_000_000_000);
        assert!((r.energy_per_bit_j.unwrap() - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn sleep_cycle_segments() {
        let p = PowerProfile::default().onu;
        let busy = vec![(secs(0.0), secs(0.01)), (secs(1.0), secs(1.01))];
        let segs = state_segments(&busy, &p, PowerState::Sleep, secs(2.0));
        let states: Vec<PowerState> = segs.iter().map(|s| s.2).collect();
        use PowerState::*;
        assert_eq!(states, vec![Active, Idle, Sleep, Active, Active, Idle, Sleep]);
        // Wake period ends exactly when the busy interval starts.
        assert_eq!(segs[3], (secs(0.998), secs(1.0), Active));
        // Contiguous coverage of the horizon.
        assert_eq!(segs[0].0, secs(0.0));
        assert_eq!(segs.last().unwrap().1, secs(2.0));
        assert!(segs.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn short_gaps_stay_idle() {
        let p = PowerProfile::default().onu;
        let busy = vec![(secs(0.0), secs(0.01)), (secs(0.03), secs(0.04))];
        let segs = state_segments(&busy, &p, PowerState::Sleep, secs(0.04));
        assert!(segs.iter().all(|s| s.2 != PowerState::Sleep));
    }

    #[test]
    fn run_accounting_totals() {
        let cfg = ArchitectureConfig { onu_count: 2, ..Default::default() };
        let mut log = ActivityLog::new(1, 2);
        log.record(Component::Onu(0), secs(0.5), secs(0.6));
        log.record(Component::OltTransceiver(0), secs(0.5), secs(0.6));
        let tl = account_run(&log, &cfg, &PowerProfile::default(), secs(1.0));
        let r = energy_report(&tl, 8);
        assert!((r.per_class_j.core - 50.0).abs() < 1e-9);
        assert!((r.per_class_j.l2_switch - 37.5).abs() < 1e-9);
        // ONU 1 never active: idle 50 ms then sleep.
        let onu1 = 4.0 * 0.05 + 0.5 * 0.95;
        // ONU 0: idle 0.05, sleep to 0.498, active 0.102, idle 0.05, sleep 0.35.
        let onu0 = 4.0 * 0.05 + 0.5 * 0.448 + 5.0 * 0.102 + 4.0 * 0.05 + 0.5 * 0.35;
        assert!((r.per_class_j.onu - (onu0 + onu1)).abs() < 1e-9, "{}", r.per_class_j.onu);
        let share_sum = r.shares_pct.total();
        assert!((share_sum - 100.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn energy_is_additive(split in 0.0f64..10.0, cuts in proptest::collection::vec((0.0f64..10.0, 0.0f64..200.0), 1..20)) {
            let mut bounds: Vec<f64> = cuts.iter().map(|c| c.0).collect();
            bounds.push(0.0);
            bounds.push(10.0);
            bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            bounds.dedup();
            let times: Vec<SimTime> = bounds.iter().map(|&b| secs(b)).collect();
            let watts: Vec<ClassWatts> = cuts.iter().cycle().take(times.len() - 1)
                .map(|c| ClassWatts { onu: c.1, core: 1.0, ..Default::default() }).collect();
            let tl = PowerTimeline::from_segments(times, watts);
            let t = secs(split);
            let whole = energy_report(&tl, 0).total_j;
            let parts = energy_report(&tl.slice(secs(0.0), t), 0).total_j + energy_report(&tl.slice(t, secs(10.0)), 0).total_j;
            prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
        }
    }
}
