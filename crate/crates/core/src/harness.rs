//! Simulation-study driver: six estimators applied to replicated synthetic
//! datasets, per-dataset empirical bias and cross-dataset summaries.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arco::{simulate_dataset, ArcoParams, PropensityParams, SimConfig};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::features::{assemble_features, FeatureSpec};
use crate::models::{
    fit_forest_outcome, fit_forest_propensity, fit_linear_outcome, fit_logistic_propensity, FittedOutcomeModel,
    FittedPropensityModel, ForestConfig,
};
use crate::motr::{run_motr, ApteEstimate, MotrConfig};
use crate::pstn::{run_pstn, PstnConfig, PstnResult};
use crate::seed::{purpose, SeedSpec};
use crate::stats::{mean, sample_sd, welch_ci, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    Raw,
    Coef,
    MotrGlm,
    PstnGlm,
    MotrRf,
    PstnRf,
}

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Raw,
        MethodId::Coef,
        MethodId::MotrGlm,
        MethodId::PstnGlm,
        MethodId::MotrRf,
        MethodId::PstnRf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Raw => "raw",
            MethodId::Coef => "coef",
            MethodId::MotrGlm => "motr_glm",
            MethodId::PstnGlm => "pstn_glm",
            MethodId::MotrRf => "motr_rf",
            MethodId::PstnRf => "pstn_rf",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    /// Accepts `motr_glm` and `motr-glm` spellings.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Estimator settings shared by single-dataset analysis and replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfigs {
    pub outcome_features: FeatureSpec,
    pub propensity_features: FeatureSpec,
    pub motr: MotrConfig,
    pub pstn: PstnConfig,
    pub outcome_forest: ForestConfig,
    pub propensity_forest: ForestConfig,
    pub ci_level: f64,
}

impl Default for MethodConfigs {
    fn default() -> Self {
        Self {
            outcome_features: FeatureSpec::outcome_default(),
            propensity_features: FeatureSpec::propensity_default(),
            motr: MotrConfig::default(),
            pstn: PstnConfig::default(),
            outcome_forest: ForestConfig::default(),
            propensity_forest: ForestConfig::default(),
            ci_level: 0.95,
        }
    }
}

impl MethodConfigs {
    /// Replication defaults: forests of 100 trees.
    pub fn replication() -> Self {
        let mut c = Self::default();
        c.outcome_forest.n_trees = 100;
        c.propensity_forest.n_trees = 100;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawEstimate {
    pub delta: f64,
    pub ci: Interval,
    pub mean_1: f64,
    pub mean_0: f64,
    pub m1: usize,
    pub m0: usize,
}

/// Difference of observed arm means with a Welch interval.
pub fn estimate_raw(ds: &TimeSeriesDataset, level: f64) -> Result<RawEstimate> {
    let (mut a1, mut a0) = (Vec::new(), Vec::new());
    for p in ds.periods() {
        if p.x == 1 {
            a1.push(p.y)
        } else {
            a0.push(p.y)
        }
    }
    if a1.is_empty() || a0.is_empty() {
        return Err(Error::SingleClass(u8::from(a0.is_empty())));
    }
    let w = welch_ci(&a1, &a0, level);
    Ok(RawEstimate {
        delta: w.diff,
        ci: w.ci,
        mean_1: mean(&a1),
        mean_0: mean(&a0),
        m1: a1.len(),
        m0: a0.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefEstimate {
    pub beta_x: f64,
    pub ci: Interval,
    pub std_error: f64,
    pub model: FittedOutcomeModel,
}

/// Exposure coefficient of the fitted outcome model with its t interval.
pub fn estimate_coef(ds: &TimeSeriesDataset, spec: &FeatureSpec, level: f64) -> Result<CoefEstimate> {
    spec.validate_for_outcome()?;
    let fm = assemble_features(ds, spec)?;
    let model = fit_linear_outcome(&fm, &fm.outcome_targets(ds))?;
    let lm = model.linear().expect("linear fit");
    let i = lm.names.iter().position(|n| n == "x").expect("exposure column");
    let ci = lm.confint("x", level).expect("exposure column");
    Ok(CoefEstimate {
        beta_x: lm.beta[i],
        ci,
        std_error: lm.std_errors[i],
        model: model.clone(),
    })
}

pub fn fit_outcome(ds: &TimeSeriesDataset, method: MethodId, cfg: &MethodConfigs, seed: SeedSpec) -> Result<FittedOutcomeModel> {
    cfg.outcome_features.validate_for_outcome()?;
    let fm = assemble_features(ds, &cfg.outcome_features)?;
    let y = fm.outcome_targets(ds);
    match method {
        MethodId::MotrGlm | MethodId::Coef => fit_linear_outcome(&fm, &y),
        MethodId::MotrRf => {
            let fc = ForestConfig {
                seed: seed.derive(&[purpose::FOREST_OUTCOME]),
                ..cfg.outcome_forest.clone()
            };
            fit_forest_outcome(&fm, &y, &fc)
        }
        other => Err(Error::Config(format!("{other} does not use an outcome model"))),
    }
}

pub fn fit_propensity(ds: &TimeSeriesDataset, method: MethodId, cfg: &MethodConfigs, seed: SeedSpec) -> Result<FittedPropensityModel> {
    cfg.propensity_features.validate_for_propensity()?;
    let fm = assemble_features(ds, &cfg.propensity_features)?;
    let x = fm.exposure_targets(ds);
    match method {
        MethodId::PstnGlm => fit_logistic_propensity(&fm, &x),
        MethodId::PstnRf => {
            let fc = ForestConfig {
                seed: seed.derive(&[purpose::FOREST_PROPENSITY]),
                ..cfg.propensity_forest.clone()
            };
            fit_forest_propensity(&fm, &x, &fc)
        }
        other => Err(Error::Config(format!("{other} does not use a propensity model"))),
    }
}

/// Full output of one estimator on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Raw(RawEstimate),
    Coef(CoefEstimate),
    Motr {
        estimate: ApteEstimate,
        model: FittedOutcomeModel,
    },
    Pstn {
        result: PstnResult,
        model: FittedPropensityModel,
    },
}

impl Analysis {
    pub fn point(&self) -> f64 {
        match self {
            Analysis::Raw(r) => r.delta,
            Analysis::Coef(c) => c.beta_x,
            Analysis::Motr { estimate, .. } => estimate.delta,
            Analysis::Pstn { result, .. } => result.delta,
        }
    }

    pub fn interval(&self) -> Option<Interval> {
        match self {
            Analysis::Raw(r) => Some(r.ci),
            Analysis::Coef(c) => Some(c.ci),
            Analysis::Motr { estimate, .. } => Some(estimate.ci),
            Analysis::Pstn { .. } => None,
        }
    }
}

/// Run `method` on `ds`. `seed` keys every random stream of the method.
pub fn analyze(ds: &TimeSeriesDataset, method: MethodId, cfg: &MethodConfigs, seed: SeedSpec) -> Result<Analysis> {
    match method {
        MethodId::Raw => estimate_raw(ds, cfg.ci_level).map(Analysis::Raw),
        MethodId::Coef => estimate_coef(ds, &cfg.outcome_features, cfg.ci_level).map(Analysis::Coef),
        MethodId::MotrGlm | MethodId::MotrRf => {
            let model = fit_outcome(ds, method, cfg, seed)?;
            let tag = if method == MethodId::MotrGlm {
                purpose::MOTR_GLM
            } else {
                purpose::MOTR_RF
            };
            let mc = MotrConfig {
                seed: seed.derive(&[tag]),
                ci_level: cfg.ci_level,
                ..cfg.motr.clone()
            };
            let estimate = run_motr(ds, &model, &mc)?;
            Ok(Analysis::Motr { estimate, model })
        }
        MethodId::PstnGlm | MethodId::PstnRf => {
            let model = fit_propensity(ds, method, cfg, seed)?;
            let result = run_pstn(ds, &model, &cfg.pstn)?;
            Ok(Analysis::Pstn { result, model })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub h: usize,
    pub arco: ArcoParams,
    pub propensity: PropensityParams,
    /// Dataset template; its seed is replaced by the per-dataset stream.
    pub sim: SimConfig,
    pub methods: Vec<MethodId>,
    pub configs: MethodConfigs,
    pub seed: SeedSpec,
    pub workers: usize,
}

impl Study {
    pub fn benchmark(h: usize, m: usize) -> Self {
        Self {
            h,
            arco: ArcoParams::benchmark(),
            propensity: PropensityParams::benchmark(),
            sim: SimConfig {
                m_analysis: m,
                ..SimConfig::default()
            },
            methods: MethodId::ALL.to_vec(),
            configs: MethodConfigs::replication(),
            seed: SeedSpec::default(),
            workers: 1,
        }
    }

    /// Seed stream of dataset `h` (1-based).
    pub fn dataset_seed(&self, h: usize) -> SeedSpec {
        self.seed.derive(&[h as u64])
    }

    pub fn dataset(&self, h: usize) -> Result<TimeSeriesDataset> {
        let sim = SimConfig {
            seed: self.dataset_seed(h),
            ..self.sim.clone()
        };
        simulate_dataset(&self.arco, &self.propensity, &sim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub h: usize,
    pub method: MethodId,
    pub estimate: Option<f64>,
    pub bias: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: MethodId,
    pub mean_bias: f64,
    pub sd_bias: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub true_apte: f64,
    pub rows: Vec<ReplicationRow>,
    pub summary: Vec<MethodSummary>,
    pub study: Study,
}

impl ReplicationReport {
    pub fn summary_for(&self, method: MethodId) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

pub fn replicate(study: &Study) -> Result<ReplicationReport> {
    if study.h < 2 {
        return Err(Error::Config(format!("H = {} must be at least 2", study.h)));
    }
    if study.methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    let true_apte = study.arco.beta_x;
    let one = |h: usize| -> Result<Vec<ReplicationRow>> {
        let ds = study.dataset(h)?;
        let seed = study.dataset_seed(h);
        Ok(study
            .methods
            .iter()
            .map(|&method| match analyze(&ds, method, &study.configs, seed) {
                Ok(a) => {
                    let est = a.point();
                    ReplicationRow {
                        h,
                        method,
                        estimate: Some(est),
                        bias: Some(est - true_apte),
                        error: None,
                    }
                }
                Err(e) => ReplicationRow {
                    h,
                    method,
                    estimate: None,
                    bias: None,
                    error: Some(e.to_string()),
                },
            })
            .collect())
    };
    // Single worker runs inline: no pool, which also keeps this usable where threads are unavailable.
    let per_h: Vec<Result<Vec<ReplicationRow>>> = if study.workers <= 1 {
        (1..=study.h).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(study.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| (1..=study.h).into_par_iter().map(one).collect())
    };
    let mut rows = Vec::with_capacity(study.h * study.methods.len());
    for r in per_h {
        rows.extend(r?);
    }
    rows.sort_by_key(|r| (r.h, r.method));
    let summary = summarize(&rows, &study.methods);
    Ok(ReplicationReport {
        true_apte,
        rows,
        summary,
        study: study.clone(),
    })
}

/// Mean bias with the symmetric interval `mean +/- 1.96 sd / sqrt(n)`.
pub fn summarize(rows: &[ReplicationRow], methods: &[MethodId]) -> Vec<MethodSummary> {
    let mut ms = methods.to_vec();
    ms.sort();
    ms.dedup();
    ms.into_iter()
        .map(|method| {
            let biases: Vec<f64> = rows.iter().filter(|r| r.method == method).filter_map(|r| r.bias).collect();
            let failures = rows.iter().filter(|r| r.method == method && r.bias.is_none()).count();
            let n = biases.len();
            let (mean_bias, sd_bias) = if n > 0 { (mean(&biases), sample_sd(&biases)) } else { (f64::NAN, f64::NAN) };
            let half = 1.96 * sd_bias / (n as f64).sqrt();
            MethodSummary {
                method,
                mean_bias,
                sd_bias,
                ci_lo: mean_bias - half,
                ci_hi: mean_bias + half,
                n,
                failures,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_two_point_arms() {
        let ds = TimeSeriesDataset::from_xy(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(estimate_raw(&ds, 0.95).unwrap().delta, -2.0);
        let single = TimeSeriesDataset::from_xy(&[1.0, 2.0], &[1, 1]).unwrap();
        assert!(estimate_raw(&single, 0.95).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
        }
        assert_eq!("motr-rf".parse::<MethodId>().unwrap(), MethodId::MotrRf);
        assert!("tmle".parse::<MethodId>().is_err());
    }

    #[test]
    fn noise_free_coef_has_zero_bias() {
        let mut study = Study::benchmark(2, 30);
        study.arco = ArcoParams {
            beta0: 2.0,
            beta_x: 1.1,
            ..ArcoParams::zero()
        };
        study.propensity.alpha0 = 0.0;
        study.propensity.alpha_en = 0.0;
        study.methods = vec![MethodId::Coef];
        let rep = replicate(&study).unwrap();
        assert_eq!(rep.rows.len(), 2);
        for r in &rep.rows {
            assert!(r.bias.unwrap().abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn failures_are_counted_not_fatal() {
        let rows = vec![
            ReplicationRow { h: 1, method: MethodId::Raw, estimate: Some(1.0), bias: Some(-0.1), error: None },
            ReplicationRow { h: 2, method: MethodId::Raw, estimate: None, bias: None, error: Some("x".into()) },
            ReplicationRow { h: 3, method: MethodId::Raw, estimate: Some(1.2), bias: Some(0.1), error: None },
        ];
        let s = &summarize(&rows, &[MethodId::Raw])[0];
        assert_eq!((s.n, s.failures), (2, 1));
        assert!(s.mean_bias.abs() < 1e-15);
        let half = 1.96 * sample_sd(&[-0.1, 0.1]) / 2f64.sqrt();
        assert!((s.ci_hi - half).abs() < 1e-15);
    }
}
