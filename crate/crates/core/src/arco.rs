//! Autoregressive-carryover (ARCO) outcome mechanism: simulation of single-subject
//! datasets with endogenous exposure, and the closed-form long-run mean and APTE
//! of the lag-1 model under per-period randomization.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataset::{PeriodRecord, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::seed::{self, purpose, SeedSpec};

/// Lag-1 ARCO coefficients.
///
/// `Y_t = b0 + bX x_t + bco x_{t-1} + bXco x_t x_{t-1} + bar y_{t-1} + bXar x_t y_{t-1} + V_t.bex + e_t`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcoParams {
    pub beta0: f64,
    pub beta_x: f64,
    pub beta_co: f64,
    pub beta_xco: f64,
    pub beta_ar: f64,
    pub beta_xar: f64,
    pub beta_ex: Vec<f64>,
    pub sigma_eps: f64,
}

impl ArcoParams {
    /// Simulation-study outcome mechanism: b0 = 2, bX = 1.1, bar = 0.8, sigma = 0.5.
    pub fn benchmark() -> Self {
        Self {
            beta0: 2.0,
            beta_x: 1.1,
            beta_ar: 0.8,
            sigma_eps: 0.5,
            ..Self::zero()
        }
    }

    pub fn zero() -> Self {
        Self {
            beta0: 0.0,
            beta_x: 0.0,
            beta_co: 0.0,
            beta_xco: 0.0,
            beta_ar: 0.0,
            beta_xar: 0.0,
            beta_ex: Vec::new(),
            sigma_eps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.beta0,
            self.beta_x,
            self.beta_co,
            self.beta_xco,
            self.beta_ar,
            self.beta_xar,
            self.sigma_eps,
        ];
        if all.iter().chain(&self.beta_ex).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite ARCO coefficient".into()));
        }
        if self.sigma_eps < 0.0 {
            return Err(Error::InvalidParams(format!(
                "sigma_eps = {} must be non-negative",
                self.sigma_eps
            )));
        }
        Ok(())
    }

    /// Stationarity condition required by the long-run formulas.
    pub fn check_stationary(&self) -> Result<()> {
        if self.beta_ar.abs() >= 1.0 || self.beta_ar.abs() + self.beta_xar.abs() >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "nonstationary: |beta_ar| = {}, |beta_ar| + |beta_xar| = {} (both must be < 1)",
                self.beta_ar.abs(),
                self.beta_ar.abs() + self.beta_xar.abs()
            )));
        }
        Ok(())
    }

    /// Noise-free potential outcome under exposure `s`.
    #[inline]
    pub fn mean_outcome(&self, s: u8, x_prev: u8, y_prev: f64, exog: &[f64]) -> f64 {
        let s = f64::from(s);
        let xp = f64::from(x_prev);
        let ex: f64 = self.beta_ex.iter().zip(exog).map(|(b, v)| b * v).sum();
        self.beta0
            + self.beta_x * s
            + self.beta_co * xp
            + self.beta_xco * s * xp
            + self.beta_ar * y_prev
            + self.beta_xar * s * y_prev
            + ex
    }
}

/// How a uniform draw `U` and the propensity `pi_t` produce the exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentRule {
    /// `X = 1{U < pi}`: `pi` is the probability of exposure.
    Direct,
    /// `X = 1{U > pi}`: `pi` is the probability of *non*-exposure.
    Complement,
}

/// Endogenous exposure mechanism:
/// `logit(pi_t) = a0 + a_en (y_{t-1} - lag_center) + a_ar x_{t-1} + V_t.a_ex`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityParams {
    pub alpha0: f64,
    pub alpha_en: f64,
    pub alpha_ar: f64,
    pub alpha_ex: Vec<f64>,
    /// First-period exposure probability.
    pub pi1: f64,
    pub lag_center: f64,
    pub assignment: AssignmentRule,
}

impl PropensityParams {
    /// Simulation-study exposure mechanism (a0 = -0.25, a_en = 1.25, pi1 = 0.5),
    /// with the lagged outcome centred at the long-run mean of the benchmark outcome
    /// mechanism under pi = 0.5 (12.75) and complement assignment.
    pub fn benchmark() -> Self {
        Self {
            alpha0: -0.25,
            alpha_en: 1.25,
            alpha_ar: 0.0,
            alpha_ex: Vec::new(),
            pi1: 0.5,
            lag_center: 12.75,
            assignment: AssignmentRule::Complement,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(Error::InvalidParams(format!("pi1 = {} must lie in (0, 1)", self.pi1)));
        }
        let all = [self.alpha0, self.alpha_en, self.alpha_ar, self.lag_center];
        if all.iter().chain(&self.alpha_ex).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite propensity coefficient".into()));
        }
        Ok(())
    }

    pub fn propensity(&self, x_prev: u8, y_prev: f64, exog: &[f64]) -> f64 {
        let ex: f64 = self.alpha_ex.iter().zip(exog).map(|(a, v)| a * v).sum();
        let eta = self.alpha0
            + self.alpha_en * (y_prev - self.lag_center)
            + self.alpha_ar * f64::from(x_prev)
            + ex;
        expit(eta)
    }

    fn assign(&self, u: f64, pi: f64) -> u8 {
        match self.assignment {
            AssignmentRule::Direct => u8::from(u < pi),
            AssignmentRule::Complement => u8::from(u > pi),
        }
    }
}

pub fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Deterministic exogenous series available to the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExogKind {
    /// `weekend = 1` on generated periods 6 and 7 of every 7.
    Weekend,
}

impl ExogKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExogKind::Weekend => "weekend",
        }
    }

    /// Value at generated period `g` (1-based, before burn-in removal).
    pub fn value(&self, g: usize) -> f64 {
        match self {
            ExogKind::Weekend => f64::from(u8::from(matches!((g - 1) % 7, 5 | 6))),
        }
    }

    pub fn long_run_mean(&self) -> f64 {
        match self {
            ExogKind::Weekend => 2.0 / 7.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub m_analysis: usize,
    pub burn_in: usize,
    pub seed: SeedSpec,
    /// When set, exposure at t > 1 is i.i.d. Bernoulli(`randomized_pi`).
    pub randomized_mode: bool,
    pub randomized_pi: f64,
    pub exog: Vec<ExogKind>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            m_analysis: 220,
            burn_in: 2,
            seed: SeedSpec::default(),
            randomized_mode: false,
            randomized_pi: 0.5,
            exog: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_analysis < 10 {
            return Err(Error::InvalidParams(format!(
                "m_analysis = {} must be at least 10",
                self.m_analysis
            )));
        }
        if !(0.0..=1.0).contains(&self.randomized_pi) {
            return Err(Error::InvalidParams(format!(
                "randomized_pi = {} outside [0, 1]",
                self.randomized_pi
            )));
        }
        Ok(())
    }
}

/// Full generator output, including both potential outcomes per period.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub y1: Vec<f64>,
    pub y0: Vec<f64>,
    pub x: Vec<u8>,
    pub y: Vec<f64>,
}

/// Simulate one dataset of `m_analysis` periods after dropping `burn_in` leading periods.
pub fn simulate_dataset(p: &ArcoParams, q: &PropensityParams, cfg: &SimConfig) -> Result<TimeSeriesDataset> {
    let mut rng = cfg.seed.stream(&[purpose::DATASET]);
    simulate_with_rng(p, q, cfg, &mut rng).map(|(ds, _)| ds)
}

/// As [`simulate_dataset`] but with a caller-owned stream; also returns the trace.
pub fn simulate_with_rng<R: RngCore>(
    p: &ArcoParams,
    q: &PropensityParams,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(TimeSeriesDataset, SimTrace)> {
    p.validate()?;
    q.validate()?;
    cfg.validate()?;
    let n_ex = cfg.exog.len();
    if p.beta_ex.len() > n_ex || q.alpha_ex.len() > n_ex {
        return Err(Error::InvalidParams(format!(
            "{} beta_ex / {} alpha_ex coefficients but only {n_ex} exogenous series",
            p.beta_ex.len(),
            q.alpha_ex.len()
        )));
    }
    let total = cfg.m_analysis + cfg.burn_in;
    let mut tr = SimTrace {
        y1: Vec::with_capacity(total),
        y0: Vec::with_capacity(total),
        x: Vec::with_capacity(total),
        y: Vec::with_capacity(total),
    };
    let mut exog_row = vec![0.0; n_ex];
    for g in 1..=total {
        for (v, k) in exog_row.iter_mut().zip(&cfg.exog) {
            *v = k.value(g);
        }
        // draw order per period: noise, then exposure uniform
        let eps = seed::normal(rng, p.sigma_eps);
        let u = seed::open_unit(rng);
        let (y1, y0, x) = if g == 1 {
            let ex: f64 = p.beta_ex.iter().zip(&exog_row).map(|(b, v)| b * v).sum();
            let y = p.beta0 + ex + eps;
            (y, y, u8::from(u < q.pi1))
        } else {
            let (yp, xp) = (tr.y[g - 2], tr.x[g - 2]);
            let y1 = p.mean_outcome(1, xp, yp, &exog_row) + eps;
            let y0 = p.mean_outcome(0, xp, yp, &exog_row) + eps;
            let x = if cfg.randomized_mode {
                u8::from(u < cfg.randomized_pi)
            } else {
                q.assign(u, q.propensity(xp, yp, &exog_row))
            };
            (y1, y0, x)
        };
        let y = if x == 1 { y1 } else { y0 };
        debug_assert_eq!(y, y1 * f64::from(x) + y0 * f64::from(1 - x));
        tr.y1.push(y1);
        tr.y0.push(y0);
        tr.x.push(x);
        tr.y.push(y);
    }
    let periods = (cfg.burn_in..total)
        .map(|i| PeriodRecord {
            t: i - cfg.burn_in + 1,
            y: tr.y[i],
            x: tr.x[i],
            exog: cfg
                .exog
                .iter()
                .map(|k| (k.name().to_string(), k.value(i + 1)))
                .collect::<BTreeMap<_, _>>(),
        })
        .collect();
    Ok((TimeSeriesDataset::new(periods, cfg.burn_in)?, tr))
}

/// Long-run mean outcome of the lag-1 model under per-period randomization with probability `pi`.
pub fn long_run_mean(p: &ArcoParams, pi: f64, mu_v: &[f64]) -> Result<f64> {
    p.validate()?;
    p.check_stationary()?;
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::InvalidParams(format!("pi = {pi} outside [0, 1]")));
    }
    let denom = 1.0 - p.beta_ar - p.beta_xar * pi;
    if denom <= 0.0 {
        return Err(Error::Nonstationary(denom));
    }
    let ex: f64 = p.beta_ex.iter().zip(mu_v).map(|(b, v)| b * v).sum();
    let num = p.beta0 + p.beta_x * pi + p.beta_co * pi + p.beta_xco * pi * pi + ex;
    Ok(num / denom)
}

/// Long-run APTE `bX + bXco pi + bXar mu_Y`.
pub fn long_run_apte(p: &ArcoParams, pi: f64, mu_y: f64) -> Result<f64> {
    p.validate()?;
    p.check_stationary()?;
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::InvalidParams(format!("pi = {pi} outside [0, 1]")));
    }
    Ok(p.beta_x + p.beta_xco * pi + p.beta_xar * mu_y)
}
