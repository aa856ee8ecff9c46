//! Student t and normal distribution functions.
//!
//! The t CDF is the regularized incomplete beta function (continued-fraction
//! evaluation from `statrs`); quantiles start from the `statrs` inverse and
//! are polished by Newton steps on that CDF, guarded by bisection.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

/// `P(T <= t)` for Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

pub fn t_pdf(t: f64, df: f64) -> f64 {
    let ln = ln_gamma((df + 1.0) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln()
        - (df + 1.0) / 2.0 * (1.0 + t * t / df).ln();
    ln.exp()
}

/// Quantile of Student's t: the `t` with `t_cdf(t, df) == p`.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if p == 0.5 {
        return 0.0;
    }
    // Solve on the lower tail, where the CDF carries full relative precision.
    let (q, sign) = if p > 0.5 { (1.0 - p, 1.0) } else { (p, -1.0) };
    let start = StudentsT::new(0.0, 1.0, df).map(|d| d.inverse_cdf(q)).unwrap_or(-1.0);
    let mut x = if start.is_finite() && start < 0.0 { start } else { -1.0 };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, 0.0);
    for _ in 0..200 {
        let f = t_cdf(x, df) - q;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = f / t_pdf(x, df);
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.min(-1.0) };
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) {
            x = next;
            break;
        }
        x = next;
    }
    sign * x.abs()
}

pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for df in [1.0, 2.5, 4.0, 17.3, 120.0, 1e5] {
            for p in [1e-6, 0.01, 0.05, 0.3, 0.5, 0.9, 0.95, 0.999] {
                let t = t_quantile(p, df);
                assert!((t_cdf(t, df) - p).abs() <= 1e-10 * p.max(1e-3), "df={df} p={p} t={t}");
            }
        }
    }

    #[test]
    fn known_critical_values() {
        assert!((t_quantile(0.975, 1.0) - 12.706204736174703).abs() < 1e-9);
        assert!((t_quantile(0.95, 10.0) - 1.8124611228107335).abs() < 1e-12);
        assert!((t_quantile(0.05, 10.0) + 1.8124611228107335).abs() < 1e-12);
        assert!((normal_quantile(0.95) - 1.6448536269514722).abs() < 1e-9);
    }
}
