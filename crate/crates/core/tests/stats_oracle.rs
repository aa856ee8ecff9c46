use ngoa_core::sim::derive_stream;
use ngoa_core::stats::dist::t_quantile;
use ngoa_core::stats::{
    hodges_lehmann, iut_decision, mann_whitney_null_counts, noninferiority, Decision, Direction, MetricSpec, TestKind,
    TestResult, WelchStatistic,
};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    candidate: Vec<f64>,
    reference: Vec<f64>,
    t: f64,
    df: f64,
    p: f64,
    quantile: f64,
}

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn welch_matches_frozen_scipy_values() {
    let text = include_str!("data/welch_oracle.json");
    let fx: Fixture = serde_json::from_str(text).unwrap();
    assert_eq!(fx.cases.len(), 100);
    for (i, c) in fx.cases.iter().enumerate() {
        let w = WelchStatistic::compute(&c.candidate, &c.reference, 0.0);
        assert!(rel(w.t, c.t) <= 1e-9, "case {i}: t {} vs {}", w.t, c.t);
        assert!(rel(w.df, c.df) <= 1e-9, "case {i}: df {} vs {}", w.df, c.df);
        let q = t_quantile(c.p, c.df);
        assert!(rel(q, c.quantile) <= 1e-9, "case {i}: quantile {q} vs {}", c.quantile);
    }
}

/// Null distribution of U by listing every choice of ranks for the first sample.
fn enumerate_null(n: usize, m: usize) -> Vec<u128> {
    let total = n + m;
    let mut counts = vec![0u128; n * m + 1];
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        // U counts pairs where the first-sample item outranks the second-sample item.
        let mut u = 0;
        for a in 0..total {
            if mask & (1 << a) == 0 {
                continue;
            }
            u += (0..a).filter(|b| mask & (1 << b) == 0).count();
        }
        counts[u] += 1;
    }
    counts
}

#[test]
fn mann_whitney_null_matches_enumeration() {
    let four = enumerate_null(4, 4);
    assert_eq!(four.iter().sum::<u128>(), 70);
    assert_eq!(mann_whitney_null_counts(4, 4), four);
    for n in 1..=7 {
        for m in 1..=7 {
            assert_eq!(mann_whitney_null_counts(n, m), enumerate_null(n, m), "n={n} m={m}");
        }
    }
}

/// Median by counting: the smallest value with more than half the
/// differences at or below it (and its partner for even counts).
fn median_by_counting(c: &[f64], r: &[f64]) -> f64 {
    let d: Vec<f64> = c.iter().flat_map(|x| r.iter().map(move |y| x - y)).collect();
    let n = d.len();
    let kth = |k: usize| -> f64 {
        // k-th smallest (0-based): value v with #{< v} <= k < #{<= v}
        *d.iter()
            .find(|&&v| {
                let lt = d.iter().filter(|&&w| w < v).count();
                let le = d.iter().filter(|&&w| w <= v).count();
                lt <= k && k < le
            })
            .unwrap()
    };
    if n % 2 == 1 {
        kth(n / 2)
    } else {
        0.5 * (kth(n / 2 - 1) + kth(n / 2))
    }
}

#[test]
fn hodges_lehmann_matches_counting() {
    let mut s = derive_stream(99, "hl");
    let mut cases = 0;
    while cases < 100 {
        let n = 1 + (s.uniform() * 12.0) as usize;
        let m = 1 + (s.uniform() * 12.0) as usize;
        if n * m > 100 {
            continue;
        }
        // Coarse values create ties on purpose.
        let c: Vec<f64> = (0..n).map(|_| (s.uniform() * 20.0).round() / 2.0).collect();
        let r: Vec<f64> = (0..m).map(|_| (s.uniform() * 20.0).round() / 2.0).collect();
        assert_eq!(hodges_lehmann(&c, &r).unwrap(), median_by_counting(&c, &r));
        cases += 1;
    }
}

#[test]
fn iut_is_conjunction_on_random_vectors() {
    let mut s = derive_stream(5, "iut");
    let base = noninferiority(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &spec(Direction::SmallerBetter, 1.0, TestKind::Welch), 0.05)
        .unwrap();
    for _ in 0..1000 {
        let k = 1 + (s.uniform() * 6.0) as usize;
        let bits: Vec<bool> = (0..k).map(|_| s.uniform() < 0.7).collect();
        let comps = bits
            .iter()
            .map(|&b| TestResult { decision: Decision::from_bool(b), ..base.clone() })
            .collect();
        assert_eq!(iut_decision(comps).unwrap().decision.is_non_inferior(), bits.iter().all(|&b| b));
    }
}

fn spec(direction: Direction, margin: f64, test: TestKind) -> MetricSpec {
    MetricSpec { name: "m".into(), direction, margin, test }
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-50.0f64..50.0, 3..15)
}

proptest! {
    #[test]
    fn decision_follows_reported_bound(
        c in sample(), r in sample(), margin in 0.01f64..20.0,
        larger in any::<bool>(), nonpar in any::<bool>(),
    ) {
        let dir = if larger { Direction::LargerBetter } else { Direction::SmallerBetter };
        let kind = if nonpar { TestKind::Nonparametric } else { TestKind::Welch };
        let res = noninferiority(&c, &r, &spec(dir, margin, kind), 0.05).unwrap();
        prop_assert_eq!(res.decision, TestResult::decision_from_bound(dir, res.bound, margin));
    }

    #[test]
    fn swapping_arms_mirrors_the_result(
        c in sample(), r in sample(), margin in 0.01f64..20.0,
        larger in any::<bool>(), nonpar in any::<bool>(),
    ) {
        let dir = if larger { Direction::LargerBetter } else { Direction::SmallerBetter };
        let kind = if nonpar { TestKind::Nonparametric } else { TestKind::Welch };
        let a = noninferiority(&c, &r, &spec(dir, margin, kind), 0.05).unwrap();
        let b = noninferiority(&r, &c, &spec(dir.flipped(), margin, kind), 0.05).unwrap();
        prop_assert!((a.estimate + b.estimate).abs() <= 1e-9 * a.estimate.abs().max(1.0));
        prop_assert_eq!(a.decision, b.decision);
    }
}

#[test]
fn nonparametric_bound_matches_enumerated_critical_value() {
    // For 5 x 4 the bound is the k-th extreme pairwise difference, with k
    // read off the enumerated null distribution.
    let c = [3.1, 4.7, 2.2, 5.9, 4.0];
    let r = [1.0, 2.5, 3.3, 0.4];
    let counts = enumerate_null(5, 4);
    let total: u128 = counts.iter().sum();
    let mut cum = 0;
    let mut k = 0;
    for (u, &x) in counts.iter().enumerate() {
        cum += x;
        if cum as f64 / total as f64 <= 0.05 {
            k = u + 1;
        }
    }
    let mut d: Vec<f64> = c.iter().flat_map(|x| r.iter().map(move |y| x - y)).collect();
    d.sort_by(f64::total_cmp);
    let res = noninferiority(&c, &r, &spec(Direction::SmallerBetter, 1.0, TestKind::Nonparametric), 0.05).unwrap();
    assert_eq!(res.bound, d[d.len() - k]);
    let res = noninferiority(&c, &r, &spec(Direction::LargerBetter, 1.0, TestKind::Nonparametric), 0.05).unwrap();
    assert_eq!(res.bound, d[k - 1]);
}
