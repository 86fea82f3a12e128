//! Imbalance-aware classification scores and the leave-one-out balanced error
//! estimate used as upper-level fitness.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, POSITIVE};
use crate::error::{Error, Result};
use crate::kernel::rbf_unchecked;
use crate::smo::SvmModel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    fn require_both_classes(&self) -> Result<()> {
        if self.tp + self.fn_ == 0 || self.fp + self.tn == 0 {
            return Err(Error::invalid(
                "rates need at least one positive and one negative sample",
            ));
        }
        Ok(())
    }

    pub fn sensitivity(&self) -> Result<f64> {
        self.require_both_classes()?;
        Ok(self.tp as f64 / (self.tp + self.fn_) as f64)
    }

    pub fn specificity(&self) -> Result<f64> {
        self.require_both_classes()?;
        Ok(self.tn as f64 / (self.tn + self.fp) as f64)
    }
}

pub fn confusion(labels: &[i8], predictions: &[i8]) -> Result<ConfusionCounts> {
    if labels.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y == POSITIVE, p == POSITIVE) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Balanced error rate, `(FN/(TP+FN) + FP/(FP+TN)) / 2`.
pub fn ber(c: &ConfusionCounts) -> Result<f64> {
    c.require_both_classes()?;
    let fnr = c.fn_ as f64 / (c.tp + c.fn_) as f64;
    let fpr = c.fp as f64 / (c.fp + c.tn) as f64;
    Ok(0.5 * (fnr + fpr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub sen: f64,
    pub spe: f64,
    pub ber: f64,
    pub bar: f64,
    pub bmi: f64,
    pub gm: f64,
    pub uf1: f64,
    pub umcc: f64,
}

impl ScoreReport {
    pub const KEYS: [&'static str; 8] = ["sen", "spe", "ber", "bar", "bmi", "gm", "uf1", "umcc"];

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "sen" => self.sen,
            "spe" => self.spe,
            "ber" => self.ber,
            "bar" => self.bar,
            "bmi" => self.bmi,
            "gm" => self.gm,
            "uf1" => self.uf1,
            "umcc" => self.umcc,
            _ => return None,
        })
    }
}

pub fn scores(c: &ConfusionCounts) -> Result<ScoreReport> {
    let mut report = scores_from_rates(c.sensitivity()?, c.specificity()?);
    report.ber = ber(c)?;
    report.bar = 1.0 - report.ber;
    Ok(report)
}

/// Scores as functions of sensitivity and specificity alone.
///
/// uF1 and uMCC are the F1 and Matthews coefficients of a classifier with
/// these rates on a class-balanced population. uMCC is taken as 0 where
/// `|sen - spe| = 1`.
pub fn scores_from_rates(sen: f64, spe: f64) -> ScoreReport {
    let bar = 0.5 * (sen + spe);
    let bmi = sen + spe - 1.0;
    let spread = 1.0 - (sen - spe) * (sen - spe);
    ScoreReport {
        sen,
        spe,
        ber: 1.0 - bar,
        bar,
        bmi,
        gm: (sen * spe).sqrt(),
        uf1: 2.0 * sen / (2.0 + sen - spe),
        umcc: if spread > 0.0 { bmi / spread.sqrt() } else { 0.0 },
    }
}

/// `sum_{i in SV} a_i y_i K(x_i, x_j) + b` for every training sample `j`.
pub fn training_decision_values(model: &SvmModel, d: &Dataset) -> Vec<f64> {
    let gamma = model.params.gamma;
    (0..d.n_samples())
        .map(|j| {
            let xj = d.row(j);
            let mut sum = 0.0;
            for &i in &model.sv_indices {
                sum += model.alphas[i] * d.y(i) * rbf_unchecked(d.row(i), xj, gamma);
            }
            sum + model.bias
        })
        .collect()
}

/// Leave-one-out error indicator without refitting.
///
/// Removing sample `j` is approximated by dropping its own term from the
/// decision value. For the RBF kernel (`K(x_j, x_j) = 1`) that term is exactly
/// `a_j y_j`, so the test is `y_j (f(x_j) - a_j y_j) < 0`. The sum is formed
/// without the term rather than by subtracting it. Non-support vectors reduce
/// to the plain training error test.
pub fn loo_misclassified(model: &SvmModel, d: &Dataset) -> Vec<bool> {
    let gamma = model.params.gamma;
    (0..d.n_samples())
        .map(|j| {
            let xj = d.row(j);
            let mut sum = 0.0;
            for &i in model.sv_indices.iter().filter(|&&i| i != j) {
                sum += model.alphas[i] * d.y(i) * rbf_unchecked(d.row(i), xj, gamma);
            }
            d.y(j) * (sum + model.bias) < 0.0
        })
        .collect()
}

/// Balanced error rate of the leave-one-out indicator; the upper-level fitness.
pub fn loo_ber(model: &SvmModel, d: &Dataset) -> Result<f64> {
    let predictions: Vec<i8> = loo_misclassified(model, d)
        .into_iter()
        .zip(d.labels())
        .map(|(wrong, &y)| if wrong { -y } else { y })
        .collect();
    ber(&confusion(d.labels(), &predictions)?)
}
