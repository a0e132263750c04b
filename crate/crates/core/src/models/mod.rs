//! Outcome and propensity models behind one interface.
//!
//! Outcome models: OLS ([`fit_linear_outcome`]) or a regression forest
//! ([`fit_forest_outcome`]). Propensity models: IRLS logistic regression
//! ([`fit_logistic_propensity`]) or a classification forest
//! ([`fit_forest_propensity`]). Every fitted model carries the
//! [`FeatureEncoder`] it was trained with, so callers can predict from raw
//! `(x_t, x_{t-1}, y_{t-1}, exog)` tuples.

pub mod forest;
pub mod linear;
pub mod logistic;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::features::{FeatureEncoder, FeatureMatrix};

pub use forest::{Forest, ForestConfig, ForestTask};
pub use linear::LinearModel;
pub use logistic::LogisticModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutcomeKind {
    Linear(LinearModel),
    Forest(Forest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedOutcomeModel {
    pub kind: OutcomeKind,
    pub encoder: FeatureEncoder,
    /// Residual standard deviation (denominator `n - p` linear, `n` forest).
    pub resid_sd: f64,
    pub n_obs: usize,
}

impl FittedOutcomeModel {
    /// Linear model with fixed coefficients (one per active column) and residual SD.
    pub fn linear_from_coefficients(encoder: FeatureEncoder, intercept: f64, coefs: &[f64], resid_sd: f64) -> Self {
        let lm = LinearModel::from_coefficients(&encoder, intercept, coefs);
        Self {
            kind: OutcomeKind::Linear(lm),
            encoder,
            resid_sd,
            n_obs: 0,
        }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.kind {
            OutcomeKind::Linear(m) => m.predict(row),
            OutcomeKind::Forest(f) => f.predict(row),
        }
    }

    pub fn predict_mean(&self, x_t: u8, x_prev: u8, y_prev: f64, exog: &[f64]) -> f64 {
        self.predict_row(&self.encoder.encode(x_t, x_prev, y_prev, exog))
    }

    pub fn coefficients(&self) -> Option<Vec<(String, f64)>> {
        match &self.kind {
            OutcomeKind::Linear(m) => Some(m.names.iter().cloned().zip(m.beta.iter().copied()).collect()),
            OutcomeKind::Forest(_) => None,
        }
    }

    pub fn linear(&self) -> Option<&LinearModel> {
        match &self.kind {
            OutcomeKind::Linear(m) => Some(m),
            OutcomeKind::Forest(_) => None,
        }
    }

    /// Compact JSON summary (coefficients or forest settings, residual SD, feature spec).
    pub fn summary(&self) -> serde_json::Value {
        let body = match &self.kind {
            OutcomeKind::Linear(m) => json!({
                "kind": "linear",
                "coefficients": m.names.iter().zip(&m.beta).map(|(n, b)| json!({"name": n, "estimate": b})).collect::<Vec<_>>(),
                "std_errors": m.std_errors,
                "df_resid": m.df_resid,
            }),
            OutcomeKind::Forest(f) => forest_summary(f),
        };
        json!({
            "model": body,
            "resid_sd": self.resid_sd,
            "n_obs": self.n_obs,
            "features": self.encoder,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PropensityKind {
    Logistic(LogisticModel),
    Forest(Forest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPropensityModel {
    pub kind: PropensityKind,
    pub encoder: FeatureEncoder,
    pub n_obs: usize,
}

impl FittedPropensityModel {
    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let p = match &self.kind {
            PropensityKind::Logistic(m) => m.predict(row),
            PropensityKind::Forest(f) => f.predict(row),
        };
        p.clamp(0.0, 1.0)
    }

    pub fn predict_prob(&self, x_prev: u8, y_prev: f64, exog: &[f64]) -> f64 {
        self.predict_row(&self.encoder.encode(0, x_prev, y_prev, exog))
    }

    pub fn coefficients(&self) -> Option<Vec<(String, f64)>> {
        match &self.kind {
            PropensityKind::Logistic(m) => Some(m.names.iter().cloned().zip(m.beta.iter().copied()).collect()),
            PropensityKind::Forest(_) => None,
        }
    }

    pub fn separation_warning(&self) -> bool {
        matches!(&self.kind, PropensityKind::Logistic(m) if m.separation)
    }

    pub fn summary(&self) -> serde_json::Value {
        let body = match &self.kind {
            PropensityKind::Logistic(m) => json!({
                "kind": "logistic",
                "coefficients": m.names.iter().zip(&m.beta).map(|(n, b)| json!({"name": n, "estimate": b})).collect::<Vec<_>>(),
                "iterations": m.iterations,
                "separation_warning": m.separation,
            }),
            PropensityKind::Forest(f) => forest_summary(f),
        };
        json!({ "model": body, "n_obs": self.n_obs, "features": self.encoder })
    }
}

fn forest_summary(f: &Forest) -> serde_json::Value {
    json!({
        "kind": "forest",
        "task": f.task,
        "n_trees": f.trees.len(),
        "mtry": f.mtry,
        "min_node_size": f.min_node_size,
        "config": f.config,
        "mean_nodes_per_tree": f.trees.iter().map(|t| t.n_nodes()).sum::<usize>() as f64 / f.trees.len() as f64,
    })
}

fn check_len<T>(fm: &FeatureMatrix, v: &[T]) -> Result<()> {
    if fm.n_rows() != v.len() {
        return Err(Error::InvalidData(format!(
            "{} responses for {} feature rows",
            v.len(),
            fm.n_rows()
        )));
    }
    Ok(())
}

pub fn fit_linear_outcome(fm: &FeatureMatrix, y: &[f64]) -> Result<FittedOutcomeModel> {
    check_len(fm, y)?;
    if fm.n_rows() < fm.n_cols() + 1 {
        return Err(Error::TooShort {
            needed: fm.n_cols() + 1,
            found: fm.n_rows(),
        });
    }
    let (m, resid) = linear::fit(fm, y)?;
    let df = m.df_resid.max(1) as f64;
    let resid_sd = (resid.iter().map(|r| r * r).sum::<f64>() / df).sqrt();
    Ok(FittedOutcomeModel {
        kind: OutcomeKind::Linear(m),
        encoder: fm.encoder.clone(),
        resid_sd,
        n_obs: fm.n_rows(),
    })
}

pub fn fit_logistic_propensity(fm: &FeatureMatrix, x: &[u8]) -> Result<FittedPropensityModel> {
    check_len(fm, x)?;
    let m = logistic::fit(fm, x)?;
    Ok(FittedPropensityModel {
        kind: PropensityKind::Logistic(m),
        encoder: fm.encoder.clone(),
        n_obs: fm.n_rows(),
    })
}

pub fn fit_forest_outcome(fm: &FeatureMatrix, y: &[f64], cfg: &ForestConfig) -> Result<FittedOutcomeModel> {
    check_len(fm, y)?;
    if fm.n_rows() < 5 {
        return Err(Error::TooShort {
            needed: 5,
            found: fm.n_rows(),
        });
    }
    let f = forest::fit_forest(&fm.rows, y, ForestTask::Regression, cfg)?;
    let n = y.len() as f64;
    let ssr: f64 = fm
        .rows
        .iter()
        .zip(y)
        .map(|(r, yi)| (yi - f.predict(r)).powi(2))
        .sum();
    Ok(FittedOutcomeModel {
        kind: OutcomeKind::Forest(f),
        encoder: fm.encoder.clone(),
        resid_sd: (ssr / n).sqrt(),
        n_obs: fm.n_rows(),
    })
}

pub fn fit_forest_propensity(fm: &FeatureMatrix, x: &[u8], cfg: &ForestConfig) -> Result<FittedPropensityModel> {
    check_len(fm, x)?;
    let ones = x.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == x.len() {
        return Err(Error::SingleClass(x.first().copied().unwrap_or(0)));
    }
    let yv: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
    let f = forest::fit_forest(&fm.rows, &yv, ForestTask::Classification, cfg)?;
    Ok(FittedPropensityModel {
        kind: PropensityKind::Forest(f),
        encoder: fm.encoder.clone(),
        n_obs: fm.n_rows(),
    })
}
