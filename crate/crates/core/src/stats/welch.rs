use super::dist::{t_cdf, t_quantile};
use super::{check_inputs, mean, variance, Decision, Direction, MetricSpec, SampleSummary, StatsError, TestKind, TestResult};

/// Welch statistic for `H0: μ_c − μ_r = shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchStatistic {
    pub diff: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
}

impl WelchStatistic {
    /// Requires two or more samples per arm and a positive standard error.
    pub fn compute(c: &[f64], r: &[f64], shift: f64) -> Self {
        let (mc, mr) = (mean(c), mean(r));
        let (nc, nr) = (c.len() as f64, r.len() as f64);
        let (qc, qr) = (variance(c, mc) / nc, variance(r, mr) / nr);
        let se2 = qc + qr;
        let se = se2.sqrt();
        let df = se2 * se2 / (qc * qc / (nc - 1.0) + qr * qr / (nr - 1.0));
        let diff = mc - mr;
        WelchStatistic { diff, se, t: (diff - shift) / se, df }
    }
}

/// Welch non-inferiority test with Welch–Satterthwaite degrees of freedom.
///
/// When both samples have zero variance the standard error vanishes and the
/// decision falls back to comparing the mean difference with the margin.
pub fn welch_noninferiority(c: &[f64], r: &[f64], spec: &MetricSpec, alpha: f64) -> Result<TestResult, StatsError> {
    check_inputs(c, r, spec, alpha)?;
    if c.len() < 2 || r.len() < 2 {
        return Err(StatsError::InsufficientSamples {
            test: "welch",
            needed: 2,
            candidate: c.len(),
            reference: r.len(),
        });
    }
    let (sc, sr) = (SampleSummary::of(c), SampleSummary::of(r));
    let delta = spec.margin;
    let shift = match spec.direction {
        Direction::SmallerBetter => delta,
        Direction::LargerBetter => -delta,
    };
    let diff = sc.mean - sr.mean;
    let (bound, p_value, statistic, df) = if sc.sd == 0.0 && sr.sd == 0.0 {
        (diff, None, None, None)
    } else {
        let w = WelchStatistic::compute(c, r, shift);
        let q = t_quantile(1.0 - alpha, w.df);
        match spec.direction {
            Direction::SmallerBetter => (w.diff + q * w.se, Some(t_cdf(w.t, w.df)), Some(w.t), Some(w.df)),
            Direction::LargerBetter => (w.diff - q * w.se, Some(t_cdf(-w.t, w.df)), Some(w.t), Some(w.df)),
        }
    };
    Ok(TestResult {
        metric: spec.name.clone(),
        test: TestKind::Welch,
        direction: spec.direction,
        margin: delta,
        alpha,
        estimate: diff,
        bound,
        p_value,
        statistic,
        df,
        decision: TestResult::decision_from_bound(spec.direction, bound, delta),
        candidate: sc,
        reference: sr,
    })
}

impl Decision {
    /// Decision of the equivalent t-test formulation, for cross-checking.
    pub fn from_t(direction: Direction, t: f64, df: f64, alpha: f64) -> Self {
        let crit = t_quantile(1.0 - alpha, df);
        Decision::from_bool(match direction {
            Direction::SmallerBetter => t < -crit,
            Direction::LargerBetter => t > crit,
        })
    }
}
