//! Per-dimension Z-normalization fitted on a database.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    /// Sample standard deviation (n - 1 denominator).
    pub stddev: Vec<f64>,
    /// Dimensions with (numerically) zero spread.
    pub constant: Vec<bool>,
}

impl NormalizationStats {
    /// Fits mean and sample standard deviation per dimension. Missing
    /// (`NaN`) entries are left out of the dimension they belong to.
    pub fn fit<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: vectors.len(),
            });
        }
        let dim = vectors[0].as_ref().len();
        for v in vectors {
            if v.as_ref().len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.as_ref().len(),
                });
            }
        }
        let mut mean = vec![0.0; dim];
        let mut stddev = vec![0.0; dim];
        let mut constant = vec![true; dim];
        for d in 0..dim {
            let values: Vec<f64> = vectors.iter().map(|v| v.as_ref()[d]).filter(|x| !x.is_nan()).collect();
            if values.is_empty() {
                continue;
            }
            let n = values.len() as f64;
            let m = values.iter().sum::<f64>() / n;
            let var = if values.len() > 1 {
                values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            mean[d] = m;
            stddev[d] = var.sqrt();
            constant[d] = stddev[d] <= 1e-12 * m.abs().max(1.0);
        }
        Ok(NormalizationStats { mean, stddev, constant })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(v - mean) / stddev`; constant dimensions and missing entries map
    /// to 0, i.e. to the database mean.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok((0..v.len())
            .map(|d| {
                if self.constant[d] || v[d].is_nan() {
                    0.0
                } else {
                    (v[d] - self.mean[d]) / self.stddev[d]
                }
            })
            .collect())
    }
}

pub fn znormalize_fit<V: AsRef<[f64]>>(vectors: &[V]) -> Result<NormalizationStats> {
    NormalizationStats::fit(vectors)
}

pub fn znormalize_apply(v: &[f64], stats: &NormalizationStats) -> Result<Vec<f64>> {
    stats.apply(v)
}
