use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityError {
    pub mae: f64,
    /// Mean of `estimate - truth`.
    pub bias: f64,
    /// Per-step signed error `estimate - truth`.
    pub series: Vec<i64>,
}

pub fn cardinality_error(truth: &[usize], estimate: &[usize]) -> Result<CardinalityError> {
    if truth.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: estimate.len(),
        });
    }
    let series: Vec<i64> = truth
        .iter()
        .zip(estimate)
        .map(|(&t, &e)| e as i64 - t as i64)
        .collect();
    let n = series.len().max(1) as f64;
    Ok(CardinalityError {
        mae: series.iter().map(|d| d.abs() as f64).sum::<f64>() / n,
        bias: series.iter().map(|&d| d as f64).sum::<f64>() / n,
        series,
    })
}
