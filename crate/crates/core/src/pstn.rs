//! Propensity-score twin (PSTn): inverse-probability weighted arm means with
//! trimming, common-support restriction and stabilized weights.

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::features::assemble_features;
use crate::models::FittedPropensityModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PstnConfig {
    pub trim_lo: f64,
    pub trim_hi: f64,
    pub use_overlap: bool,
    pub use_stabilized: bool,
}

impl Default for PstnConfig {
    fn default() -> Self {
        Self {
            trim_lo: 0.05,
            trim_hi: 0.95,
            use_overlap: true,
            use_stabilized: true,
        }
    }
}

impl PstnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.trim_lo && self.trim_lo < self.trim_hi && self.trim_hi <= 1.0) {
            return Err(Error::Config(format!(
                "trim bounds must satisfy 0 <= lo < hi <= 1, got ({}, {})",
                self.trim_lo, self.trim_hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodWeight {
    pub t: usize,
    pub pi_hat: f64,
    /// Multiplier applied to `y_t` (0 for excluded periods).
    pub weight: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Exclusions {
    pub trim: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PstnResult {
    pub delta: f64,
    pub mean_po_1: f64,
    pub mean_po_0: f64,
    pub retained: Vec<usize>,
    pub excluded: Exclusions,
    pub weights: Vec<PeriodWeight>,
    /// Common-support interval applied (if overlap was used).
    pub overlap_region: Option<(f64, f64)>,
}

/// Weighted contrast from precomputed propensities. `t` labels the periods.
pub fn ipw_estimate(t: &[usize], y: &[f64], x: &[u8], pi_hat: &[f64], cfg: &PstnConfig) -> Result<PstnResult> {
    cfg.validate()?;
    let n = y.len();
    if t.len() != n || x.len() != n || pi_hat.len() != n {
        return Err(Error::InvalidData("period, outcome, exposure and propensity lengths differ".into()));
    }
    let mut keep: Vec<bool> = pi_hat
        .iter()
        .map(|&p| p >= cfg.trim_lo && p <= cfg.trim_hi)
        .collect();
    let trimmed = keep.iter().filter(|k| !**k).count();

    let arm_range = |keep: &[bool], s: u8| -> Option<(f64, f64)> {
        (0..n)
            .filter(|&i| keep[i] && x[i] == s)
            .map(|i| pi_hat[i])
            .fold(None, |acc, p| match acc {
                None => Some((p, p)),
                Some((lo, hi)) => Some((lo.min(p), hi.max(p))),
            })
    };
    let counts = |keep: &[bool]| -> (usize, usize) {
        let t1 = (0..n).filter(|&i| keep[i] && x[i] == 1).count();
        let t0 = (0..n).filter(|&i| keep[i] && x[i] == 0).count();
        (t1, t0)
    };
    let emptied = |keep: &[bool], overlap: usize| {
        let (treated, control) = counts(keep);
        Error::ArmEmptied {
            trimmed,
            overlap,
            treated,
            control,
        }
    };

    let mut overlap_removed = 0;
    let mut overlap_region = None;
    if cfg.use_overlap {
        let (Some(r1), Some(r0)) = (arm_range(&keep, 1), arm_range(&keep, 0)) else {
            return Err(emptied(&keep, 0));
        };
        let (lo, hi) = (r1.0.max(r0.0), r1.1.min(r0.1));
        overlap_region = Some((lo, hi));
        for i in 0..n {
            if keep[i] && !(pi_hat[i] >= lo && pi_hat[i] <= hi) {
                keep[i] = false;
                overlap_removed += 1;
            }
        }
    }
    let (m1, m0) = counts(&keep);
    if m1 == 0 || m0 == 0 {
        return Err(emptied(&keep, overlap_removed));
    }
    let retained_total = (m1 + m0) as f64;
    let (p1, p0) = if cfg.use_stabilized {
        (m1 as f64 / retained_total, m0 as f64 / retained_total)
    } else {
        (1.0, 1.0)
    };

    let mut weights = Vec::with_capacity(n);
    let (mut s1, mut s0) = (0.0, 0.0);
    let mut retained = Vec::with_capacity(m1 + m0);
    for i in 0..n {
        let w = if keep[i] {
            let prob = if x[i] == 1 { pi_hat[i] } else { 1.0 - pi_hat[i] };
            let stab = if x[i] == 1 { p1 } else { p0 };
            stab / prob
        } else {
            0.0
        };
        if keep[i] {
            retained.push(t[i]);
            if x[i] == 1 {
                s1 += w * y[i];
            } else {
                s0 += w * y[i];
            }
        }
        weights.push(PeriodWeight {
            t: t[i],
            pi_hat: pi_hat[i],
            weight: w,
            retained: keep[i],
        });
    }
    let mean_po_1 = s1 / m1 as f64;
    let mean_po_0 = s0 / m0 as f64;
    Ok(PstnResult {
        delta: mean_po_1 - mean_po_0,
        mean_po_1,
        mean_po_0,
        retained,
        excluded: Exclusions {
            trim: trimmed,
            overlap: overlap_removed,
        },
        weights,
        overlap_region,
    })
}

/// Predict a propensity for every analyzable period of `ds` and weight.
pub fn run_pstn(ds: &TimeSeriesDataset, model: &FittedPropensityModel, cfg: &PstnConfig) -> Result<PstnResult> {
    let fm = assemble_features(ds, &model.encoder.spec)?;
    let y = ds.y();
    let x = ds.x();
    let exog = crate::features::exog_table(ds, &model.encoder.spec.exog_names)?;
    let pi_hat: Vec<f64> = fm
        .periods
        .iter()
        .map(|&t| {
            let i = t - 1;
            let (xp, yp) = if i > 0 { (x[i - 1], y[i - 1]) } else { (0, f64::NAN) };
            model.predict_prob(xp, yp, &exog[i])
        })
        .collect();
    ipw_estimate(
        &fm.periods,
        &fm.outcome_targets(ds),
        &fm.exposure_targets(ds),
        &pi_hat,
        cfg,
    )
}
