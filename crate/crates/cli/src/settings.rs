//! Run settings: a flat key-value config file, overridden by command-line flags.

use std::path::Path;

use bilevel_svm::experiment::{ExperimentConfig, Method};
use serde::Deserialize;

use crate::CliError;

/// Keys accepted in the config file. Dashed spellings are accepted too.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub folds: Option<usize>,
    #[serde(alias = "inner-folds")]
    pub inner_folds: Option<usize>,
    #[serde(alias = "pop-size")]
    pub pop_size: Option<usize>,
    #[serde(alias = "max-evals")]
    pub max_evals: Option<usize>,
    pub tol: Option<f64>,
    #[serde(alias = "max-iter")]
    pub max_iter: Option<usize>,
    #[serde(alias = "kernel-cache-mb")]
    pub kernel_cache_mb: Option<usize>,
    pub jobs: Option<usize>,
    #[serde(alias = "fitness-std-stop")]
    pub fitness_std_stop: Option<f64>,
    #[serde(alias = "eps-tie")]
    pub eps_tie: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// Flag values; `None` means "not given".
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Method: svm, ros, rus, smote or ebcs.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cross-validation repetitions.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Folds per repetition.
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Upper-level population size.
    #[arg(long, global = true)]
    pub pop_size: Option<usize>,
    /// Upper-level evaluation budget.
    #[arg(long, global = true)]
    pub max_evals: Option<usize>,
    /// SMO stopping tolerance on the KKT violation.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Kernel row cache size in MiB.
    #[arg(long, global = true)]
    pub kernel_cache_mb: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Flat key-value TOML file with defaults for the flags above.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
}

pub fn resolve(flags: &Overrides) -> Result<ExperimentConfig, CliError> {
    let file = match &flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut cfg = ExperimentConfig::default();
    if let Some(m) = flags.method.as_ref().or(file.method.as_ref()) {
        cfg.method = m.parse::<Method>().map_err(|e| CliError::usage(e.to_string()))?;
    }
    macro_rules! pick {
        ($field:expr, $flag:expr, $file:expr) => {
            if let Some(v) = $flag.or($file) {
                $field = v;
            }
        };
    }
    pick!(cfg.seed, flags.seed, file.seed);
    pick!(cfg.reps, flags.reps, file.reps);
    pick!(cfg.folds, flags.folds, file.folds);
    pick!(cfg.inner_folds, None, file.inner_folds);
    pick!(cfg.pop_size, flags.pop_size, file.pop_size);
    pick!(cfg.max_evals, flags.max_evals, file.max_evals);
    pick!(cfg.solver.tolerance, flags.tol, file.tol);
    pick!(cfg.solver.max_iterations, None, file.max_iter);
    pick!(cfg.solver.kernel_cache_mb, flags.kernel_cache_mb, file.kernel_cache_mb);
    pick!(cfg.jobs, flags.jobs, file.jobs);
    pick!(cfg.fitness_std_stop, None, file.fitness_std_stop);
    pick!(cfg.eps_tie, None, file.eps_tie);
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}
