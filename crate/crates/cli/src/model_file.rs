//! Self-contained model file: the dual solution, the support vectors it needs,
//! the feature scaling and the class names.

use bilevel_svm::data::{Dataset, FeatureScaling, POSITIVE};
use bilevel_svm::experiment::{Method, TrainedModel};
use bilevel_svm::kernel::{rbf, KernelConfig};
use bilevel_svm::smo::SvmModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub method: Method,
    /// `[positive, negative]`.
    pub class_names: [String; 2],
    pub feature_names: Vec<String>,
    pub scaling: FeatureScaling,
    #[serde(flatten)]
    pub model: SvmModel,
    /// Scaled training rows of the support vectors, in `sv_indices` order.
    pub support_vectors: Vec<Vec<f64>>,
    pub support_labels: Vec<i8>,
}

impl ModelFile {
    pub fn new(method: Method, trained: &TrainedModel, scaling: FeatureScaling) -> Self {
        let train = &trained.train;
        let sv = &trained.model.sv_indices;
        Self {
            method,
            class_names: train.class_names().clone(),
            feature_names: train.feature_names().to_vec(),
            scaling,
            model: trained.model.clone(),
            support_vectors: sv.iter().map(|&i| train.row(i).to_vec()).collect(),
            support_labels: sv.iter().map(|&i| train.label(i)).collect(),
        }
    }

    /// Decision value of an unscaled sample.
    pub fn decision_value(&self, raw: &[f64]) -> Result<f64, CliError> {
        let x = self.scaling.apply_row(raw).map_err(CliError::from)?;
        let kernel = KernelConfig::new(self.model.params.gamma).map_err(CliError::from)?;
        let mut f = 0.0;
        for ((&i, sv), &y) in self.model.sv_indices.iter().zip(&self.support_vectors).zip(&self.support_labels) {
            f += self.model.alphas[i] * f64::from(y) * rbf(sv, &x, &kernel).map_err(CliError::from)?;
        }
        Ok(f + self.model.bias)
    }

    pub fn class_of(&self, decision: f64) -> &str {
        if decision >= 0.0 {
            &self.class_names[0]
        } else {
            &self.class_names[1]
        }
    }

    /// Internal label of each row of `d`, looked up by class name.
    pub fn labels_for(&self, d: &Dataset) -> Result<Vec<i8>, CliError> {
        d.labels()
            .iter()
            .map(|&y| {
                let name = d.class_name(y);
                if name == self.class_names[0] {
                    Ok(POSITIVE)
                } else if name == self.class_names[1] {
                    Ok(-POSITIVE)
                } else {
                    Err(CliError::usage(format!("class '{name}' is unknown to the model")))
                }
            })
            .collect()
    }
}
