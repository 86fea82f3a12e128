use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Per-feature affine map fitted on training data: `min -> lo`, `max -> hi`.
///
/// Constant features map to the midpoint of `[lo, hi]`. Values outside the
/// fitted range extrapolate linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub lo: f64,
    pub hi: f64,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureScaling {
    pub fn fit(d: &Dataset, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!(
                "scaling range [{lo}, {hi}] must satisfy lo < hi"
            )));
        }
        let mut mins = vec![f64::INFINITY; d.n_features()];
        let mut maxs = vec![f64::NEG_INFINITY; d.n_features()];
        for row in d.rows() {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Ok(Self { lo, hi, mins, maxs })
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn apply_value(&self, feature: usize, v: f64) -> f64 {
        let (min, max) = (self.mins[feature], self.maxs[feature]);
        if max > min {
            self.lo + (v - min) * (self.hi - self.lo) / (max - min)
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::invalid(format!(
                "row has {} features, scaling was fitted on {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| self.apply_value(j, v))
            .collect())
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        let rows = d.rows().map(|r| self.apply_row(r)).collect::<Result<_>>()?;
        d.with_rows(rows, d.labels().to_vec())
    }
}

/// Fits a [`FeatureScaling`] on `d` and returns the scaled copy with it.
pub fn scale_features(d: &Dataset, lo: f64, hi: f64) -> Result<(Dataset, FeatureScaling)> {
    let scaling = FeatureScaling::fit(d, lo, hi)?;
    Ok((scaling.apply(d)?, scaling))
}
