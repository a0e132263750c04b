//! Exact APTE of a noise-free linear lag-1 ARCO system by enumerating exposure
//! histories.
//!
//! The period-`t` conditional average potential outcome under `s` is
//! `E[Y_t^{s, history} | X_t = s]`, the history-weighted mean of the outcome
//! rolled forward along every exposure prefix ending in `s`. Histories are
//! weighted either as i.i.d. Bernoulli(`pi`) draws or uniformly over all
//! arrangements of a fixed number of exposed periods. The APTE is the mean over
//! periods of the CAPO contrasts.
//!
//! Setting the noise to zero is exact for these means because the mechanism is
//! linear in the noise; the oracle is therefore only valid for linear models.

use serde::{Deserialize, Serialize};

use crate::arco::ArcoParams;
use crate::error::{Error, Result};

pub const IID_CAP: usize = 20;
pub const PERMUTATION_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnumMode {
    IidBernoulli { pi: f64 },
    Permutation { m1: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumSpec {
    pub m: usize,
    pub mode: EnumMode,
    pub params: ArcoParams,
    /// Exogenous rows for the `m` periods (empty = none).
    pub exog: Vec<Vec<f64>>,
    /// Lagged outcome and exposure feeding the first enumerated period.
    pub y_init: f64,
    pub x_init: u8,
}

impl EnumSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.m == 0 {
            return Err(Error::InvalidParams("m must be positive".into()));
        }
        match self.mode {
            EnumMode::IidBernoulli { pi } => {
                if self.m > IID_CAP {
                    return Err(Error::EnumerationCap { m: self.m, cap: IID_CAP });
                }
                if !(pi > 0.0 && pi < 1.0) {
                    return Err(Error::InvalidParams(format!("pi = {pi} must lie in (0, 1)")));
                }
            }
            EnumMode::Permutation { m1 } => {
                if self.m > PERMUTATION_CAP {
                    return Err(Error::EnumerationCap {
                        m: self.m,
                        cap: PERMUTATION_CAP,
                    });
                }
                if m1 == 0 || m1 >= self.m {
                    return Err(Error::InvalidParams(format!(
                        "m1 = {m1} must satisfy 0 < m1 < m = {}",
                        self.m
                    )));
                }
            }
        }
        if !self.exog.is_empty() && self.exog.len() != self.m {
            return Err(Error::InvalidParams(format!(
                "{} exogenous rows for m = {}",
                self.exog.len(),
                self.m
            )));
        }
        if self.x_init > 1 {
            return Err(Error::InvalidParams("x_init must be 0 or 1".into()));
        }
        Ok(())
    }

    fn exog_row(&self, t: usize) -> &[f64] {
        self.exog.get(t).map_or(&[], Vec::as_slice)
    }
}

/// Per-period conditional average potential outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capos {
    pub capo_1: Vec<f64>,
    pub capo_0: Vec<f64>,
}

impl Capos {
    pub fn apte(&self) -> f64 {
        let m = self.capo_1.len() as f64;
        self.capo_1
            .iter()
            .zip(&self.capo_0)
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / m
    }
}

struct Acc {
    /// `E[Y_t 1{X_t = s}]` and `P(X_t = s)` per period and arm.
    ysum: Vec<[f64; 2]>,
    mass: Vec<[f64; 2]>,
}

pub fn enumerate_capos(spec: &EnumSpec) -> Result<Capos> {
    enumerate_capos_ordered(spec, false)
}

/// `reverse` visits the exposed branch first; results agree to rounding.
pub fn enumerate_capos_ordered(spec: &EnumSpec, reverse: bool) -> Result<Capos> {
    spec.validate()?;
    let mut acc = Acc {
        ysum: vec![[0.0; 2]; spec.m],
        mass: vec![[0.0; 2]; spec.m],
    };
    descend(spec, &mut acc, 0, spec.y_init, spec.x_init, 0, 1.0, reverse);
    let mut capo_1 = Vec::with_capacity(spec.m);
    let mut capo_0 = Vec::with_capacity(spec.m);
    for t in 0..spec.m {
        capo_1.push(acc.ysum[t][1] / acc.mass[t][1]);
        capo_0.push(acc.ysum[t][0] / acc.mass[t][0]);
    }
    Ok(Capos { capo_1, capo_0 })
}

#[allow(clippy::too_many_arguments)]
fn descend(spec: &EnumSpec, acc: &mut Acc, t: usize, y_prev: f64, x_prev: u8, ones: usize, weight: f64, reverse: bool) {
    if t == spec.m {
        return;
    }
    let p1 = match spec.mode {
        EnumMode::IidBernoulli { pi } => pi,
        EnumMode::Permutation { m1 } => (m1 - ones) as f64 / (spec.m - t) as f64,
    };
    let order: [u8; 2] = if reverse { [1, 0] } else { [0, 1] };
    for s in order {
        let ps = if s == 1 { p1 } else { 1.0 - p1 };
        if ps <= 0.0 {
            continue;
        }
        let w = weight * ps;
        let y = spec.params.mean_outcome(s, x_prev, y_prev, spec.exog_row(t));
        acc.ysum[t][s as usize] += w * y;
        acc.mass[t][s as usize] += w;
        descend(spec, acc, t + 1, y, s, ones + s as usize, w, reverse);
    }
}

/// Exact APTE: mean over periods of the CAPO contrasts.
pub fn enumerate_apte(spec: &EnumSpec) -> Result<f64> {
    Ok(enumerate_capos(spec)?.apte())
}

/// Historical APTE: per-period effects along one fixed exposure history.
pub fn historical_apte(spec: &EnumSpec, history: &[u8]) -> Result<f64> {
    spec.params.validate()?;
    if history.len() != spec.m {
        return Err(Error::InvalidParams(format!(
            "history has {} periods, expected {}",
            history.len(),
            spec.m
        )));
    }
    let p = &spec.params;
    let (mut y_prev, mut x_prev) = (spec.y_init, spec.x_init);
    let mut total = 0.0;
    for (t, &x) in history.iter().enumerate() {
        let ex = spec.exog_row(t);
        total += p.mean_outcome(1, x_prev, y_prev, ex) - p.mean_outcome(0, x_prev, y_prev, ex);
        y_prev = p.mean_outcome(x, x_prev, y_prev, ex);
        x_prev = x;
    }
    Ok(total / spec.m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(m: usize, mode: EnumMode, params: ArcoParams) -> EnumSpec {
        EnumSpec {
            m,
            mode,
            params,
            exog: vec![],
            y_init: 0.0,
            x_init: 0,
        }
    }

    #[test]
    fn no_interference_gives_beta_x() {
        let p = ArcoParams {
            beta0: 2.0,
            beta_x: 1.7,
            ..ArcoParams::zero()
        };
        for m in [1usize, 5, 9] {
            assert_abs_diff_eq!(enumerate_apte(&spec(m, EnumMode::IidBernoulli { pi: 0.3 }, p.clone())).unwrap(), 1.7, epsilon = 1e-12);
            if m > 1 {
                assert_abs_diff_eq!(enumerate_apte(&spec(m, EnumMode::Permutation { m1: 1 }, p.clone())).unwrap(), 1.7, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn historical_carryover_modification() {
        let p = ArcoParams {
            beta0: 1.0,
            beta_x: 0.5,
            beta_co: 0.3,
            beta_xco: 0.25,
            ..ArcoParams::zero()
        };
        let m = 6;
        let s = spec(m, EnumMode::Permutation { m1: 3 }, p.clone());
        let h = vec![1u8; m];
        let expect = p.beta_x + p.beta_xco * (m as f64 - 1.0) / m as f64;
        assert_abs_diff_eq!(historical_apte(&s, &h).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn caps_enforced() {
        let p = ArcoParams::benchmark();
        assert!(matches!(
            enumerate_apte(&spec(21, EnumMode::IidBernoulli { pi: 0.5 }, p.clone())),
            Err(Error::EnumerationCap { cap: 20, .. })
        ));
        assert!(matches!(
            enumerate_apte(&spec(13, EnumMode::Permutation { m1: 6 }, p)),
            Err(Error::EnumerationCap { cap: 12, .. })
        ));
    }
}
