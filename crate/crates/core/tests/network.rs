mod common;

use common::{degenerate_hybrid_delays, gap_for, md1_trial, saturated_tdm_goodput, Bench};
use ngoa_core::arch::{ArchKind, ArchitectureConfig, Direction, MediumUse};
use ngoa_core::sim::SimTime;
use ngoa_core::simulation::{run_replication, RunConfig};
use ngoa_core::traffic::{DayProfileSpec, TrafficConfig};

#[test]
fn fifo_link_matches_md1_waiting_time() {
    let (mean, expected) = md1_trial(0.5, 200_000, 7);
    assert!((mean / expected - 1.0).abs() <= 0.05, "mean wait {mean} vs {expected}");
}

#[test]
fn tdm_dba_shares_a_saturated_feeder_fairly() {
    let (config, goodput) = saturated_tdm_goodput(16, 1.0, 3);
    let total: f64 = goodput.iter().sum();
    let (lo, hi) = goodput.iter().fold((f64::MAX, 0.0f64), |(l, h), &g| (l.min(g), h.max(g)));
    assert!(hi / lo - 1.0 <= 0.02, "per-ONU goodputs {goodput:?}");
    assert!(total <= config.feeder_rate);
    assert!(total >= 0.9 * config.feeder_rate, "aggregate {total}");
}

fn overlaps(uses: &[MediumUse], key: impl Fn(&MediumUse) -> (u8, u32)) -> Option<(MediumUse, MediumUse)> {
    let mut sorted = uses.to_vec();
    sorted.sort_by_key(|u| (key(u), u.start));
    sorted.windows(2).find(|w| key(&w[0]) == key(&w[1]) && w[1].start < w[0].end).map(|w| (w[0], w[1]))
}

#[test]
fn tdm_upstream_bursts_never_overlap() {
    let config = ArchitectureConfig { kind: ArchKind::TdmPon, onu_count: 8, ..Default::default() };
    let mut bench = Bench::new(&config, [gap_for(40e6), gap_for(60e6)], 11);
    bench.run(SimTime::from_secs(0.5));
    let up: Vec<MediumUse> = bench.net.medium_log().iter().copied().filter(|u| u.dir == Direction::Up && u.end > u.start).collect();
    assert!(up.len() > 100);
    assert_eq!(overlaps(&up, |_| (0, 0)), None);
    let down: Vec<MediumUse> = bench.net.medium_log().iter().copied().filter(|u| u.dir == Direction::Down).collect();
    assert_eq!(overlaps(&down, |_| (0, 0)), None);
    let c = bench.net.total_conservation();
    assert!(c.balanced(), "{c:?}");
    assert!(bench.net.conservation().iter().all(|c| c.balanced()));
}

#[test]
fn hybrid_wavelengths_and_transceivers_are_exclusive() {
    let config = ArchitectureConfig {
        kind: ArchKind::HybridTwdmPon,
        onu_count: 16,
        wavelength_count: 4,
        transceiver_pool: 2,
        ..Default::default()
    };
    let mut bench = Bench::new(&config, [gap_for(20e6), gap_for(10e6)], 5);
    bench.run(SimTime::from_secs(0.5));
    let log = bench.net.medium_log().to_vec();
    assert!(log.len() > 1000);
    for dir in [Direction::Down, Direction::Up] {
        let uses: Vec<MediumUse> = log.iter().copied().filter(|u| u.dir == dir).collect();
        assert_eq!(overlaps(&uses, |u| (0, u.channel)), None, "wavelength clash {dir:?}");
        assert_eq!(overlaps(&uses, |u| (1, u.transceiver)), None, "transceiver clash {dir:?}");
        assert!(uses.iter().all(|u| u.transceiver < 2 && u.channel < 4));
    }
    assert!(bench.net.total_conservation().balanced());
}

#[test]
fn hybrid_with_full_pool_behaves_like_point_to_point() {
    for (onu, (dh, dp)) in degenerate_hybrid_delays(42, 5.0).into_iter().enumerate() {
        assert!(dp > 0.0);
        assert!((dh / dp - 1.0).abs() <= 0.05, "onu {onu}: hybrid {dh} vs p2p {dp}");
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let cfg = RunConfig {
        architecture: ArchitectureConfig { kind: ArchKind::HybridTwdmPon, onu_count: 8, ..Default::default() },
        traffic: TrafficConfig {
            sessions_per_hour: 120.0,
            day_profile: Some(DayProfileSpec::Named("flat".into())),
            ..Default::default()
        },
        duration: SimTime::from_secs(30.0),
        warmup: SimTime::ZERO,
        root_seed: 9,
        stream_prefix: "rep/0".into(),
        trace_hash: true,
    };
    let a = run_replication(&cfg).unwrap();
    let b = run_replication(&cfg).unwrap();
    assert_eq!(a.trace_hash, b.trace_hash);
    assert_eq!(a.mac, b.mac);
    let other = run_replication(&RunConfig { root_seed: 10, ..cfg }).unwrap();
    assert_ne!(a.trace_hash, other.trace_hash);
}
