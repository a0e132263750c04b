//! Small descriptive-statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn covers(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len();
    // Identical values: exact zero, not the rounding residue of the mean.
    if n < 2 || xs.iter().all(|&x| x == xs[0]) {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_var(xs).sqrt()
}

/// Midpoint-of-order-statistics median. Panics on empty input.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    assert!(n > 0, "median of empty slice");
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Two-sided `level` quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile(level: f64, df: f64) -> f64 {
    let p = 0.5 + level / 2.0;
    if !df.is_finite() || df > 1e7 {
        return statrs::distribution::Normal::new(0.0, 1.0)
            .unwrap()
            .inverse_cdf(p);
    }
    StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(p)
}

/// Welch two-sample t result for `mean(a) - mean(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchCi {
    pub diff: f64,
    pub ci: Interval,
    pub df: f64,
    /// True when both arms have zero variance (or a single observation each),
    /// in which case `ci` collapses to the point `diff`.
    pub degenerate: bool,
}

pub fn welch_ci(a: &[f64], b: &[f64], level: f64) -> WelchCi {
    let diff = mean(a) - mean(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = if a.len() > 1 { sample_var(a) / na } else { 0.0 };
    let vb = if b.len() > 1 { sample_var(b) / nb } else { 0.0 };
    let se2 = va + vb;
    if se2 <= 0.0 || !se2.is_finite() {
        return WelchCi {
            diff,
            ci: Interval::point(diff),
            df: f64::NAN,
            degenerate: true,
        };
    }
    let mut denom = 0.0;
    if a.len() > 1 {
        denom += va * va / (na - 1.0);
    }
    if b.len() > 1 {
        denom += vb * vb / (nb - 1.0);
    }
    let df = se2 * se2 / denom;
    let half = t_quantile(level, df) * se2.sqrt();
    WelchCi {
        diff,
        ci: Interval::new(diff - half, diff + half),
        df,
        degenerate: false,
    }
}

/// Order-statistic quartile boundaries `(q1, q2, q3)`.
///
/// `q2` is the median; `q1`/`q3` are medians of the lower/upper halves, where
/// the central order statistic is excluded from both halves when `n` is odd.
/// For `n < 4` halves may be single points; `n == 1` returns the value thrice.
pub fn quartile_bounds(xs: &[f64]) -> (f64, f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    assert!(n > 0, "quartiles of empty slice");
    if n == 1 {
        return (v[0], v[0], v[0]);
    }
    let half = n / 2;
    let lower = &v[..half];
    let upper = &v[n - half..];
    (median_sorted(lower), median_sorted(&v), median_sorted(upper))
}

/// Neumaier-compensated sum.
pub fn stable_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(median(&[7.2, 7.0, 7.1]), 7.1);
    }

    #[test]
    fn quartiles_one_to_eight() {
        let xs: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(quartile_bounds(&xs), (2.5, 4.5, 6.5));
        let odd: Vec<f64> = (1..=7).map(f64::from).collect();
        assert_eq!(quartile_bounds(&odd), (2.0, 4.0, 6.0));
    }

    #[test]
    fn t_quantile_reference_values() {
        // qt(0.975, 10) and qnorm(0.975)
        assert_abs_diff_eq!(t_quantile(0.95, 10.0), 2.228_138_851_986_273_5, epsilon = 1e-9);
        assert_abs_diff_eq!(t_quantile(0.95, f64::INFINITY), 1.959_963_984_540_054, epsilon = 1e-9);
    }

    #[test]
    fn welch_known_case() {
        // Equal variance, equal n: df = 2(n-1).
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 3.0, 4.0];
        let w = welch_ci(&a, &b, 0.95);
        assert_abs_diff_eq!(w.diff, -1.0);
        assert_abs_diff_eq!(w.df, 4.0, epsilon = 1e-12);
        let half = t_quantile(0.95, 4.0) * (2.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(w.ci.hi - w.diff, half, epsilon = 1e-12);
    }

    #[test]
    fn welch_degenerate() {
        let w = welch_ci(&[2.0, 2.0], &[1.0, 1.0], 0.95);
        assert!(w.degenerate);
        assert_eq!(w.ci, Interval::point(1.0));
    }
}
