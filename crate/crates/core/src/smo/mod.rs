//! Lower level: sequential minimal optimization for the cost-sensitive SVM dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. sum_i y_i a_i = 0,  0 <= a_i <= C+ (y_i = +1),  0 <= a_i <= C- (y_i = -1)
//! ```

mod feasibility;
mod solver;

pub use feasibility::{equality_residual, repair_equality};
pub use solver::{compute_bias, PairUpdate, Solver};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, POSITIVE};
use crate::error::{Error, Result};
use crate::kernel::{rbf_unchecked, KernelConfig, DEFAULT_CACHE_MB};

/// log2 search range of both misclassification costs.
pub const COST_LOG2_RANGE: (f64, f64) = (-5.0, 10.0);
/// log2 search range of the RBF width.
pub const GAMMA_LOG2_RANGE: (f64, f64) = (-10.0, 5.0);

/// Upper-level decision vector: per-class costs and RBF width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub c_pos: f64,
    pub c_neg: f64,
    pub gamma: f64,
}

impl HyperParams {
    pub fn new(c_pos: f64, c_neg: f64, gamma: f64) -> Result<Self> {
        let hp = Self { c_pos, c_neg, gamma };
        hp.validate()?;
        Ok(hp)
    }

    pub fn from_log2(v: [f64; 3]) -> Self {
        Self {
            c_pos: v[0].exp2(),
            c_neg: v[1].exp2(),
            gamma: v[2].exp2(),
        }
    }

    pub fn to_log2(&self) -> [f64; 3] {
        [self.c_pos.log2(), self.c_neg.log2(), self.gamma.log2()]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C+", self.c_pos), ("C-", self.c_neg), ("gamma", self.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Whether all three values lie in the upper-level search box.
    pub fn in_search_box(&self) -> bool {
        let c = COST_LOG2_RANGE.0.exp2()..=COST_LOG2_RANGE.1.exp2();
        let g = GAMMA_LOG2_RANGE.0.exp2()..=GAMMA_LOG2_RANGE.1.exp2();
        c.contains(&self.c_pos) && c.contains(&self.c_neg) && g.contains(&self.gamma)
    }

    /// Box constraint for a sample with the given label.
    pub fn upper_bound(&self, label: i8) -> f64 {
        if label == POSITIVE {
            self.c_pos
        } else {
            self.c_neg
        }
    }

    pub fn upper_bounds(&self, labels: &[i8]) -> Vec<f64> {
        labels.iter().map(|&y| self.upper_bound(y)).collect()
    }

    pub fn kernel(&self) -> Result<KernelConfig> {
        KernelConfig::new(self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Maximal KKT violation accepted at convergence.
    pub tolerance: f64,
    /// Pair-update budget.
    pub max_iterations: usize,
    pub kernel_cache_mb: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 10_000_000,
            kernel_cache_mb: DEFAULT_CACHE_MB,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid(format!(
                "solver tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("solver iteration budget must be at least 1"));
        }
        Ok(())
    }
}

/// Dual solution of one lower-level problem.
///
/// The model does not own the training samples; evaluation needs the dataset
/// it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub params: HyperParams,
    pub sv_indices: Vec<usize>,
    #[serde(default)]
    pub dual_objective: f64,
    #[serde(default)]
    pub iterations_used: usize,
    #[serde(default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

impl SvmModel {
    pub fn sv_count(&self) -> usize {
        self.sv_indices.len()
    }

    /// `sum_i a_i y_i K(x, x_i) + b` over the support vectors of `train`.
    pub fn decision_value(&self, train: &Dataset, x: &[f64]) -> f64 {
        self.sv_indices
            .iter()
            .map(|&i| self.alphas[i] * train.y(i) * rbf_unchecked(x, train.row(i), self.params.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Class of `x`; a zero decision value counts as positive.
    pub fn predict(&self, train: &Dataset, x: &[f64]) -> i8 {
        if self.decision_value(train, x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn predict_dataset(&self, train: &Dataset, test: &Dataset) -> Vec<i8> {
        test.rows().map(|x| self.predict(train, x)).collect()
    }
}

/// See [`SvmModel::decision_value`]. Fails on a dimension mismatch.
pub fn decision_value(model: &SvmModel, train: &Dataset, x: &[f64]) -> Result<f64> {
    if x.len() != train.n_features() {
        return Err(Error::invalid(format!(
            "sample has {} features, model expects {}",
            x.len(),
            train.n_features()
        )));
    }
    Ok(model.decision_value(train, x))
}

/// Solves the cost-sensitive dual on `d`.
///
/// `init_alphas` is clipped into the per-class boxes and repaired to satisfy
/// the equality constraint before use; `None` starts from zero. Running out of
/// budget is reported through [`SvmModel::converged`], not as an error.
pub fn solve(
    d: &Dataset,
    hp: &HyperParams,
    settings: &SolverSettings,
    init_alphas: Option<&[f64]>,
) -> Result<SvmModel> {
    let mut solver = Solver::new(d, *hp, settings, init_alphas)?;
    solver.run(settings.max_iterations);
    Ok(solver.into_model())
}
