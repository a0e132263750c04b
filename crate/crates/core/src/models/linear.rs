//! Ordinary least squares outcome model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureEncoder, FeatureMatrix, OutcomeLag};
use crate::linalg::{lstsq, Design};
use crate::stats::{t_quantile, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `(intercept)` followed by the active feature columns.
    pub names: Vec<String>,
    /// Feature-column indices entering the design (after reference coding).
    pub active: Vec<usize>,
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub df_resid: usize,
}

impl LinearModel {
    /// Model with given intercept and per-active-column coefficients, no standard errors.
    pub fn from_coefficients(encoder: &FeatureEncoder, intercept: f64, coefs: &[f64]) -> Self {
        let active = active_columns(encoder);
        assert_eq!(active.len(), coefs.len(), "one coefficient per active column");
        let cols = encoder.column_names();
        let mut names = vec!["(intercept)".to_string()];
        names.extend(active.iter().map(|&j| cols[j].clone()));
        let mut beta = vec![intercept];
        beta.extend_from_slice(coefs);
        Self {
            std_errors: vec![f64::NAN; beta.len()],
            names,
            active,
            beta,
            df_resid: 0,
        }
    }

    #[inline]
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.beta[0]
            + self
                .active
                .iter()
                .zip(&self.beta[1..])
                .map(|(&j, b)| row[j] * b)
                .sum::<f64>()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.beta[i])
    }

    /// Two-sided t interval for the named coefficient.
    pub fn confint(&self, name: &str, level: f64) -> Option<Interval> {
        let i = self.names.iter().position(|n| n == name)?;
        let half = t_quantile(level, self.df_resid as f64) * self.std_errors[i];
        Some(Interval::new(self.beta[i] - half, self.beta[i] + half))
    }
}

/// Columns used by a design with intercept: the first quartile slot is the reference level.
pub(crate) fn active_columns(encoder: &FeatureEncoder) -> Vec<usize> {
    let names = encoder.column_names();
    (0..names.len())
        .filter(|&j| !(encoder.spec.outcome_lag_mode == OutcomeLag::QuartileLag1 && names[j] == "y_lag1_q1"))
        .collect()
}

pub(crate) fn build_design(fm: &FeatureMatrix) -> (Design, Vec<usize>, Vec<String>) {
    let active = active_columns(&fm.encoder);
    let rows: Vec<Vec<f64>> = fm
        .rows
        .iter()
        .map(|r| active.iter().map(|&j| r[j]).collect())
        .collect();
    let cols = fm.column_names();
    let mut names = vec!["(intercept)".to_string()];
    names.extend(active.iter().map(|&j| cols[j].clone()));
    (Design::from_rows(&rows, true), active, names)
}

pub(crate) fn fit(fm: &FeatureMatrix, y: &[f64]) -> Result<(LinearModel, Vec<f64>)> {
    let (design, active, names) = build_design(fm);
    if y.len() != design.n {
        return Err(Error::InvalidData(format!(
            "{} responses for {} feature rows",
            y.len(),
            design.n
        )));
    }
    if design.n < design.p {
        return Err(Error::TooShort {
            needed: design.p,
            found: design.n,
        });
    }
    let sol = lstsq(&design, y, None)
        .map_err(|bad| Error::RankDeficient(bad.into_iter().map(|j| names[j].clone()).collect()))?;
    let resid: Vec<f64> = (0..design.n).map(|i| design.residual(i, y[i], &sol.beta)).collect();
    let df_resid = design.n - design.p;
    let ssr: f64 = resid.iter().map(|r| r * r).sum();
    let sigma2 = if df_resid > 0 { ssr / df_resid as f64 } else { 0.0 };
    let std_errors = sol.xtx_inv_diag.iter().map(|d| (sigma2 * d).sqrt()).collect();
    Ok((
        LinearModel {
            names,
            active,
            beta: sol.beta,
            std_errors,
            df_resid,
        },
        resid,
    ))
}
