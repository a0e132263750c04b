//! Deterministic per-series transforms.

use crate::error::{Error, Result};
use crate::stats::median;

/// Binary exposure `1{v > median(values)}` and the median threshold.
pub fn dichotomize_exposure(values: &[f64]) -> Result<(Vec<u8>, f64)> {
    if values.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            found: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite exposure at index {i}")));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(Error::ConstantExposure(first));
    }
    let threshold = median(values);
    Ok((values.iter().map(|&v| u8::from(v > threshold)).collect(), threshold))
}

pub fn log10_transform(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 && value.is_finite() {
                Ok(value.log10())
            } else {
                Err(Error::NonPositive { index, value })
            }
        })
        .collect()
}
