//! Model-twin randomization (MoTR).
//!
//! Each run shuffles the observed exposure sequence, rolls the fitted outcome
//! model forward one period at a time (lagged outcomes come from the run's own
//! noisy predictions, lagged exposures from the shuffled sequence, exogenous
//! columns stay at their observed values), adds `N(0, resid_sd)` noise to each
//! prediction, and contrasts the arm means. Run estimates and their Welch
//! intervals are averaged cumulatively until a stopping rule fires.
//!
//! Initial conditions: when the model uses lags, period 1 is not generated.
//! Its observed outcome and observed exposure are the fixed lag values for
//! period 2, and only the exposures of periods 2..=m are shuffled, so the arm
//! sizes are identical in every run.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::features::exog_table;
use crate::models::FittedOutcomeModel;
use crate::seed::{self, SeedSpec};
use crate::stats::{welch_ci, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotrConfig {
    pub r_min: usize,
    pub r_max: usize,
    pub stop_tol: f64,
    pub stop_window: usize,
    pub ci_level: f64,
    pub seed: SeedSpec,
}

impl Default for MotrConfig {
    fn default() -> Self {
        Self {
            r_min: 10,
            r_max: 200,
            stop_tol: 1e-3,
            stop_window: 5,
            ci_level: 0.95,
            seed: SeedSpec::default(),
        }
    }
}

impl MotrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_min == 0 || self.r_min > self.r_max {
            return Err(Error::Config(format!(
                "need 1 <= r_min ({}) <= r_max ({})",
                self.r_min, self.r_max
            )));
        }
        if self.stop_window == 0 {
            return Err(Error::Config("stop_window must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!("ci_level {} outside (0, 1)", self.ci_level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotrRun {
    pub r: usize,
    pub permuted_x: Vec<u8>,
    pub noisy_preds: Vec<f64>,
    pub mean_po_1: f64,
    pub mean_po_0: f64,
    pub delta: f64,
    pub ci: Interval,
    pub ci_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub r: usize,
    pub delta_r: f64,
    pub lo_r: f64,
    pub hi_r: f64,
    pub cum_delta: f64,
    pub cum_lo: f64,
    pub cum_hi: f64,
    pub cum_po_1: f64,
    pub cum_po_0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApteEstimate {
    pub delta: f64,
    pub ci: Interval,
    pub runs_used: usize,
    pub trajectory: Vec<TrajectoryPoint>,
    pub mean_po_1: f64,
    pub mean_po_0: f64,
    /// Whether the stopping rule fired before `r_max`.
    pub converged: bool,
    /// Runs whose per-run interval collapsed to a point (zero spread in both arms).
    pub degenerate_ci_runs: usize,
}

/// Fixed inputs of a rollout: initial lags, the exposures to shuffle, exogenous rows.
#[derive(Debug, Clone)]
pub struct RolloutContext<'a> {
    model: &'a FittedOutcomeModel,
    /// Observed exposures of the generated periods.
    pub observed_x: Vec<u8>,
    y_init: f64,
    x_init: u8,
    exog: Vec<Vec<f64>>,
}

impl<'a> RolloutContext<'a> {
    pub fn new(ds: &TimeSeriesDataset, model: &'a FittedOutcomeModel) -> Result<Self> {
        let first = initial_offset(model);
        if ds.len() < first + 1 {
            return Err(Error::TooShort {
                needed: first + 1,
                found: ds.len(),
            });
        }
        let table = exog_table(ds, &model.encoder.spec.exog_names)?;
        let (y_init, x_init) = initial_conditions(ds, model);
        let x = ds.x();
        Ok(Self {
            model,
            observed_x: x[first..].to_vec(),
            y_init,
            x_init,
            exog: table[first..].to_vec(),
        })
    }

    pub fn n_generated(&self) -> usize {
        self.observed_x.len()
    }

    /// Roll the model forward under `xs`; `noise` supplies `N(0, resid_sd)` draws.
    pub fn rollout<R: RngCore>(&self, xs: &[u8], mut noise: Option<&mut R>) -> Vec<f64> {
        assert_eq!(xs.len(), self.observed_x.len());
        let sd = self.model.resid_sd;
        let mut preds = Vec::with_capacity(xs.len());
        let (mut y_prev, mut x_prev) = (self.y_init, self.x_init);
        let mut row = Vec::with_capacity(self.model.encoder.n_columns());
        for (t, &x_t) in xs.iter().enumerate() {
            self.model.encoder.encode_into(&mut row, x_t, x_prev, y_prev, &self.exog[t]);
            let mu = self.model.predict_row(&row);
            let y = match noise.as_deref_mut() {
                Some(rng) => mu + seed::normal(rng, sd),
                None => mu,
            };
            preds.push(y);
            y_prev = y;
            x_prev = x_t;
        }
        preds
    }

    /// One run on a given exposure sequence.
    pub fn run_with<R: RngCore>(&self, r: usize, xs: Vec<u8>, noise: Option<&mut R>, level: f64) -> Result<MotrRun> {
        let preds = self.rollout(xs.as_slice(), noise);
        let (mut a1, mut a0) = (Vec::new(), Vec::new());
        for (&x, &y) in xs.iter().zip(&preds) {
            if x == 1 {
                a1.push(y)
            } else {
                a0.push(y)
            }
        }
        if a1.is_empty() || a0.is_empty() {
            return Err(Error::SingleClass(u8::from(a0.is_empty())));
        }
        let w = welch_ci(&a1, &a0, level);
        let mean_po_1 = crate::stats::mean(&a1);
        let mean_po_0 = crate::stats::mean(&a0);
        Ok(MotrRun {
            r,
            permuted_x: xs,
            noisy_preds: preds,
            mean_po_1,
            mean_po_0,
            delta: mean_po_1 - mean_po_0,
            ci: w.ci,
            ci_degenerate: w.degenerate,
        })
    }
}

/// Number of leading periods used only as lag sources (0 or 1).
pub fn initial_offset(model: &FittedOutcomeModel) -> usize {
    usize::from(model.encoder.spec.has_lags())
}

/// Fixed lag values for the first generated period: observed `(y_1, x_1)`.
pub fn initial_conditions(ds: &TimeSeriesDataset, model: &FittedOutcomeModel) -> (f64, u8) {
    if initial_offset(model) == 1 {
        let p = &ds.periods()[0];
        (p.y, p.x)
    } else {
        (f64::NAN, 0)
    }
}

pub fn run_motr(ds: &TimeSeriesDataset, model: &FittedOutcomeModel, cfg: &MotrConfig) -> Result<ApteEstimate> {
    run_motr_with_runs(ds, model, cfg, |_| {})
}

/// As [`run_motr`], also handing each completed run to `on_run`.
pub fn run_motr_with_runs(
    ds: &TimeSeriesDataset,
    model: &FittedOutcomeModel,
    cfg: &MotrConfig,
    mut on_run: impl FnMut(&MotrRun),
) -> Result<ApteEstimate> {
    cfg.validate()?;
    if ds.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            found: ds.len(),
        });
    }
    if model.resid_sd < 0.0 || !model.resid_sd.is_finite() {
        return Err(Error::InvalidParams(format!("resid_sd = {}", model.resid_sd)));
    }
    let ctx = RolloutContext::new(ds, model)?;
    let ones = ctx.observed_x.iter().filter(|&&x| x == 1).count();
    if ones == 0 || ones == ctx.n_generated() {
        return Err(Error::SingleClass(ctx.observed_x[0]));
    }

    let mut traj: Vec<TrajectoryPoint> = Vec::with_capacity(cfg.r_max);
    let (mut s_d, mut s_lo, mut s_hi, mut s_1, mut s_0) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut degenerate = 0;
    let mut converged = false;
    for r in 1..=cfg.r_max {
        let mut rng = cfg.seed.stream(&[r as u64]);
        let mut xs = ctx.observed_x.clone();
        seed::shuffle(&mut rng, &mut xs);
        let run = ctx.run_with(r, xs, Some(&mut rng), cfg.ci_level)?;
        degenerate += usize::from(run.ci_degenerate);
        s_d += run.delta;
        s_lo += run.ci.lo;
        s_hi += run.ci.hi;
        s_1 += run.mean_po_1;
        s_0 += run.mean_po_0;
        let rf = r as f64;
        traj.push(TrajectoryPoint {
            r,
            delta_r: run.delta,
            lo_r: run.ci.lo,
            hi_r: run.ci.hi,
            cum_delta: s_d / rf,
            cum_lo: s_lo / rf,
            cum_hi: s_hi / rf,
            cum_po_1: s_1 / rf,
            cum_po_0: s_0 / rf,
        });
        on_run(&run);
        if r >= cfg.r_min && r < cfg.r_max && stable(&traj, cfg.stop_window, cfg.stop_tol) {
            converged = true;
            break;
        }
    }
    let last = *traj.last().expect("at least one run");
    Ok(ApteEstimate {
        delta: last.cum_delta,
        ci: Interval::new(last.cum_lo, last.cum_hi),
        runs_used: last.r,
        mean_po_1: last.cum_po_1,
        mean_po_0: last.cum_po_0,
        trajectory: traj,
        converged,
        degenerate_ci_runs: degenerate,
    })
}

/// All three cumulative series moved less than `tol` over each of the last `window` runs.
fn stable(traj: &[TrajectoryPoint], window: usize, tol: f64) -> bool {
    if traj.len() <= window {
        return false;
    }
    traj[traj.len() - window - 1..].windows(2).all(|w| {
        (w[1].cum_delta - w[0].cum_delta).abs() < tol
            && (w[1].cum_lo - w[0].cum_lo).abs() < tol
            && (w[1].cum_hi - w[0].cum_hi).abs() < tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{assemble_features, FeatureSpec, OutcomeLag};
    use crate::models::fit_linear_outcome;
    use rand_chacha::ChaCha8Rng;

    fn no_lag_spec() -> FeatureSpec {
        FeatureSpec {
            include_current_exposure: true,
            use_exposure_lag1: false,
            outcome_lag_mode: OutcomeLag::None,
            exog_names: vec![],
        }
    }

    fn toy(m: usize) -> TimeSeriesDataset {
        let x: Vec<u8> = (0..m).map(|i| u8::from(i % 3 == 0)).collect();
        let y: Vec<f64> = x.iter().map(|&x| 2.0 + 1.1 * f64::from(x)).collect();
        TimeSeriesDataset::from_xy(&y, &x).unwrap()
    }

    #[test]
    fn deterministic_model_recovers_effect_exactly() {
        let ds = toy(30);
        let fm = assemble_features(&ds, &no_lag_spec()).unwrap();
        let mut model = fit_linear_outcome(&fm, &fm.outcome_targets(&ds)).unwrap();
        model.resid_sd = 0.0;
        let est = run_motr(&ds, &model, &MotrConfig::default()).unwrap();
        for p in &est.trajectory {
            assert!((p.delta_r - 1.1).abs() < 1e-12);
        }
        assert!((est.delta - 1.1).abs() < 1e-12);
        assert_eq!(est.degenerate_ci_runs, est.runs_used);
        assert_eq!(est.ci, Interval::point(est.delta));
    }

    #[test]
    fn two_period_dataset_generates_one_prediction() {
        let ds = TimeSeriesDataset::from_xy(&[1.0, 2.0], &[0, 1]).unwrap();
        let fm_ds = TimeSeriesDataset::from_xy(&[1.0, 2.0, 3.0, 5.0], &[0, 1, 0, 1]).unwrap();
        let fm = assemble_features(&fm_ds, &FeatureSpec::outcome_default()).unwrap();
        let model = FittedOutcomeModel::linear_from_coefficients(fm.encoder.clone(), 1.0, &[1.0, 0.5], 0.0);
        let ctx = RolloutContext::new(&ds, &model).unwrap();
        assert_eq!(ctx.n_generated(), 1);
        let preds = ctx.rollout::<ChaCha8Rng>(&[1], None);
        assert_eq!(preds, vec![1.0 + 1.0 + 0.5 * 1.0]);
    }

    #[test]
    fn initial_outcome_only_enters_through_lag() {
        let a = TimeSeriesDataset::from_xy(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1]).unwrap();
        let b = TimeSeriesDataset::from_xy(&[9.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1]).unwrap();
        let fm = assemble_features(&a, &FeatureSpec::outcome_default()).unwrap();
        let model = FittedOutcomeModel::linear_from_coefficients(fm.encoder.clone(), 0.0, &[1.0, 0.5], 0.0);
        let (ca, cb) = (RolloutContext::new(&a, &model).unwrap(), RolloutContext::new(&b, &model).unwrap());
        assert_eq!(ca.observed_x, cb.observed_x);
        let xs = [1, 0, 1];
        let (pa, pb) = (ca.rollout::<ChaCha8Rng>(&xs, None), cb.rollout::<ChaCha8Rng>(&xs, None));
        // difference decays geometrically through the lag coefficient
        for (k, (u, v)) in pa.iter().zip(&pb).enumerate() {
            assert!((v - u - 8.0 * 0.5f64.powi(k as i32 + 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn stopping_rule_and_cumulative_identities() {
        let ds = crate::arco::simulate_dataset(
            &crate::arco::ArcoParams::benchmark(),
            &crate::arco::PropensityParams::benchmark(),
            &crate::arco::SimConfig::default(),
        )
        .unwrap();
        let fm = assemble_features(&ds, &FeatureSpec::outcome_default()).unwrap();
        let model = fit_linear_outcome(&fm, &fm.outcome_targets(&ds)).unwrap();
        let cfg = MotrConfig::default();
        let mut runs = Vec::new();
        let est = run_motr_with_runs(&ds, &model, &cfg, |r| runs.push(r.clone())).unwrap();
        assert!(est.runs_used >= cfg.r_min && est.runs_used <= cfg.r_max);
        let m1 = ctx_ones(&ds);
        let mut prev_cum = 0.0;
        for (k, run) in runs.iter().enumerate() {
            assert_eq!(run.delta, run.mean_po_1 - run.mean_po_0);
            assert_eq!(run.permuted_x.iter().filter(|&&x| x == 1).count(), m1);
            let cum = est.trajectory[k].cum_delta;
            if k > 0 {
                let bound = runs[..=k]
                    .iter()
                    .map(|r| (r.delta - prev_cum).abs())
                    .fold(0.0, f64::max)
                    / (k + 1) as f64;
                assert!((cum - prev_cum).abs() <= bound + 1e-12);
            }
            prev_cum = cum;
        }
        let mean_delta = runs.iter().map(|r| r.delta).sum::<f64>() / runs.len() as f64;
        assert!((est.delta - mean_delta).abs() < 1e-12);
        let again = run_motr(&ds, &model, &cfg).unwrap();
        assert_eq!(again, est);
    }

    fn ctx_ones(ds: &TimeSeriesDataset) -> usize {
        ds.x()[1..].iter().filter(|&&x| x == 1).count()
    }

    #[test]
    fn config_validation() {
        let bad = MotrConfig {
            r_min: 5,
            r_max: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
