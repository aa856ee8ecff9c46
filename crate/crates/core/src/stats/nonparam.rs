//! Distribution-free bounds on the median difference from the order
//! statistics of all pairwise differences (the Mann–Whitney construction).

use super::dist::{normal_cdf, normal_quantile};
use super::{check_inputs, median_sorted, Direction, MetricSpec, SampleSummary, StatsError, TestKind, TestResult};

/// Above this many pairwise differences the null distribution is
/// approximated by a normal with continuity correction.
const EXACT_LIMIT: usize = 400;

fn pairwise_diffs(c: &[f64], r: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = c.iter().flat_map(|x| r.iter().map(move |y| x - y)).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Median of all pairwise differences `c_i − r_j`.
pub fn hodges_lehmann(c: &[f64], r: &[f64]) -> Result<f64, StatsError> {
    if c.is_empty() || r.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(median_sorted(&pairwise_diffs(c, r)))
}

/// Number of arrangements giving each value `u = 0..=n*m` of the
/// Mann–Whitney statistic under the null hypothesis.
pub fn mann_whitney_null_counts(n: usize, m: usize) -> Vec<u128> {
    // table[j][u]: arrangements of i first-sample and j second-sample items
    // with statistic u, filled row by row in i.
    let width = n * m + 1;
    let mut prev: Vec<Vec<u128>> = (0..=m).map(|_| { let mut v = vec![0u128; width]; v[0] = 1; v }).collect();
    for i in 1..=n {
        let mut cur: Vec<Vec<u128>> = vec![vec![0u128; width]; m + 1];
        cur[0][0] = 1;
        for j in 1..=m {
            for u in 0..=i * j {
                // Largest item from the first sample beats all j others, or
                // the largest item is from the second sample.
                let a = if u >= j { prev[j][u - j] } else { 0 };
                let b = cur[j - 1][u];
                cur[j][u] = a + b;
            }
        }
        prev = cur;
    }
    prev[m].clone()
}

/// `P(U <= u)` under the null, exact for small samples.
pub fn rank_sum_cdf(u: i64, n: usize, m: usize) -> f64 {
    let nm = n * m;
    if u < 0 {
        return 0.0;
    }
    if u as usize >= nm {
        return 1.0;
    }
    if nm <= EXACT_LIMIT {
        let counts = mann_whitney_null_counts(n, m);
        let total: u128 = counts.iter().sum();
        let below: u128 = counts[..=u as usize].iter().sum();
        below as f64 / total as f64
    } else {
        let (mu, sd) = normal_params(n, m);
        normal_cdf((u as f64 + 0.5 - mu) / sd)
    }
}

fn normal_params(n: usize, m: usize) -> (f64, f64) {
    let (n, m) = (n as f64, m as f64);
    (n * m / 2.0, (n * m * (n + m + 1.0) / 12.0).sqrt())
}

/// Largest `k` with `P(U <= k - 1) <= alpha`; zero when no order statistic
/// gives the requested confidence.
fn critical_index(n: usize, m: usize, alpha: f64) -> usize {
    let nm = n * m;
    if nm <= EXACT_LIMIT {
        let counts = mann_whitney_null_counts(n, m);
        let total: u128 = counts.iter().sum();
        let mut cum = 0u128;
        let mut k = 0;
        for (u, c) in counts.iter().enumerate() {
            cum += c;
            if cum as f64 / total as f64 <= alpha {
                k = u + 1;
            } else {
                break;
            }
        }
        k
    } else {
        let (mu, sd) = normal_params(n, m);
        let z = normal_quantile(alpha);
        let k = (mu - 0.5 + z * sd).floor() + 1.0;
        k.clamp(0.0, nm as f64) as usize
    }
}

/// Non-inferiority on the median difference with a distribution-free
/// one-sided confidence bound.
pub fn nonparametric_noninferiority(
    c: &[f64],
    r: &[f64],
    spec: &MetricSpec,
    alpha: f64,
) -> Result<TestResult, StatsError> {
    check_inputs(c, r, spec, alpha)?;
    if c.len() < 3 || r.len() < 3 {
        return Err(StatsError::InsufficientSamples {
            test: "nonparametric",
            needed: 3,
            candidate: c.len(),
            reference: r.len(),
        });
    }
    let (n, m) = (c.len(), r.len());
    let nm = n * m;
    let d = pairwise_diffs(c, r);
    let estimate = median_sorted(&d);
    let k = critical_index(n, m, alpha);
    let delta = spec.margin;
    // Statistic at the margin: pairs where the shifted candidate is worse.
    let (bound, u_obs) = match spec.direction {
        Direction::SmallerBetter => {
            let ub = if k == 0 { f64::INFINITY } else { d[nm - k] };
            (ub, d.iter().map(|&x| tie_count(x, delta)).sum::<f64>())
        }
        Direction::LargerBetter => {
            let lb = if k == 0 { f64::NEG_INFINITY } else { d[k - 1] };
            (lb, d.iter().map(|&x| tie_count(-delta, x)).sum::<f64>())
        }
    };
    let p_value = rank_sum_cdf(u_obs.floor() as i64, n, m);
    Ok(TestResult {
        metric: spec.name.clone(),
        test: TestKind::Nonparametric,
        direction: spec.direction,
        margin: delta,
        alpha,
        estimate,
        bound,
        p_value: Some(p_value),
        statistic: Some(u_obs),
        df: None,
        decision: TestResult::decision_from_bound(spec.direction, bound, delta),
        candidate: SampleSummary::of(c),
        reference: SampleSummary::of(r),
    })
}

/// 1 if `a > b`, ½ on a tie, else 0.
fn tie_count(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else if a == b {
        0.5
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(direction: Direction, margin: f64) -> MetricSpec {
        MetricSpec { name: "x".into(), direction, margin, test: TestKind::Nonparametric }
    }

    #[test]
    fn hodges_lehmann_examples() {
        assert_eq!(hodges_lehmann(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(hodges_lehmann(&[7.0], &[7.0]).unwrap(), 0.0);
        assert_eq!(hodges_lehmann(&[10.0], &[1.0, 2.0]).unwrap(), 8.5);
        assert_eq!(hodges_lehmann(&[], &[1.0]), Err(StatsError::Empty));
    }

    #[test]
    fn null_counts_for_four_and_four() {
        let c = mann_whitney_null_counts(4, 4);
        assert_eq!(c.iter().sum::<u128>(), 70);
        assert_eq!(c, vec![1, 1, 2, 3, 5, 5, 7, 7, 8, 7, 7, 5, 5, 3, 2, 1, 1]);
    }

    #[test]
    fn critical_index_three_by_three() {
        // P(U = 0) = 1/20 exactly, so the extreme difference is the bound.
        assert_eq!(critical_index(3, 3, 0.05), 1);
        assert_eq!(critical_index(3, 3, 0.04), 0);
    }

    #[test]
    fn approximation_is_close_at_the_switch() {
        // 20 x 20 is exact; compare its cdf with the normal formula.
        let (mu, sd) = normal_params(20, 20);
        for u in [120, 150, 170, 200] {
            let exact = rank_sum_cdf(u, 20, 20);
            let approx = normal_cdf((u as f64 + 0.5 - mu) / sd);
            assert!((exact - approx).abs() < 5e-3, "u={u}: {exact} vs {approx}");
        }
    }

    #[test]
    fn identical_samples_pass_and_shifted_fail() {
        let r: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let same = nonparametric_noninferiority(&r, &r, &spec(Direction::SmallerBetter, 1.0), 0.05).unwrap();
        assert_eq!(same.decision.is_non_inferior(), true);
        let c: Vec<f64> = r.iter().map(|x| x + 10.0).collect();
        let shifted = nonparametric_noninferiority(&c, &r, &spec(Direction::SmallerBetter, 1.0), 0.05).unwrap();
        assert!(!shifted.decision.is_non_inferior());
        assert!(matches!(
            nonparametric_noninferiority(&r[..2], &r, &spec(Direction::SmallerBetter, 1.0), 0.05),
            Err(StatsError::InsufficientSamples { .. })
        ));
    }
}
