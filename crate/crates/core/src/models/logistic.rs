//! Logistic propensity model fitted by iteratively reweighted least squares.

use serde::{Deserialize, Serialize};

use crate::arco::expit;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::lstsq;

use super::linear::build_design;

pub const MAX_ITER: usize = 50;
pub const TOL: f64 = 1e-10;
/// Logit-scale magnitude treated as evidence of complete separation.
pub const SEPARATION_BOUND: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub names: Vec<String>,
    pub active: Vec<usize>,
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub separation: bool,
}

impl LogisticModel {
    #[inline]
    pub fn predict(&self, row: &[f64]) -> f64 {
        let eta = self.beta[0]
            + self
                .active
                .iter()
                .zip(&self.beta[1..])
                .map(|(&j, b)| row[j] * b)
                .sum::<f64>();
        expit(eta)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.beta[i])
    }
}

pub(crate) fn fit(fm: &FeatureMatrix, x: &[u8]) -> Result<LogisticModel> {
    let (design, active, names) = build_design(fm);
    if x.len() != design.n {
        return Err(Error::InvalidData(format!(
            "{} responses for {} feature rows",
            x.len(),
            design.n
        )));
    }
    let ones = x.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == x.len() {
        return Err(Error::SingleClass(x[0]));
    }
    if design.n < design.p + 1 {
        return Err(Error::TooShort {
            needed: design.p + 1,
            found: design.n,
        });
    }
    let yv: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
    let mut beta = vec![0.0; design.p];
    let mut trace = Vec::new();
    let mut separation = false;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut z = Vec::with_capacity(design.n);
        let mut w = Vec::with_capacity(design.n);
        for (i, &yi) in yv.iter().enumerate() {
            let eta = design.row_dot(i, &beta);
            let p = expit(eta);
            let wi = (p * (1.0 - p)).max(1e-12);
            w.push(wi);
            z.push(eta + (yi - p) / wi);
        }
        let sol = lstsq(&design, &z, Some(&w))
            .map_err(|bad| Error::RankDeficient(bad.into_iter().map(|j| names[j].clone()).collect()))?;
        let change = sol
            .beta
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        trace.push(change);
        beta = sol.beta;
        if beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            separation = true;
            break;
        }
        if change < TOL {
            converged = true;
            break;
        }
    }
    if !converged && !separation {
        return Err(Error::NoConvergence { iterations, trace });
    }
    Ok(LogisticModel {
        names,
        active,
        beta,
        iterations,
        separation,
    })
}
