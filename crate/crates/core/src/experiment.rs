//! Cross-validated evaluation of the bilevel method and the tuned baselines.
//!
//! Every outer fold fits feature scaling, resampling and hyper-parameter
//! tuning on its training part only; the test part is touched once, for
//! prediction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilevel::{self, RunConfig};
use crate::data::{stratified_kfold, Dataset, FeatureScaling, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::metrics::{ber, confusion, scores, ScoreReport};
use crate::sampling::{self, SamplerConfig};
use crate::shade::{self, Candidate, ShadeConfig};
use crate::smo::{self, HyperParams, SolverSettings, SvmModel, COST_LOG2_RANGE, GAMMA_LOG2_RANGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain SVM with one cost for both classes.
    Svm,
    Ros,
    Rus,
    Smote,
    /// The bilevel cost-sensitive search.
    Ebcs,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Svm, Method::Ros, Method::Rus, Method::Smote, Method::Ebcs];

    pub fn name(self) -> &'static str {
        match self {
            Method::Svm => "svm",
            Method::Ros => "ros",
            Method::Rus => "rus",
            Method::Smote => "smote",
            Method::Ebcs => "ebcs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}' (expected svm, ros, rus, smote or ebcs)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub method: Method,
    pub seed: u64,
    pub reps: usize,
    pub folds: usize,
    /// Folds of the inner cross-validation used to tune baselines.
    pub inner_folds: usize,
    pub pop_size: usize,
    pub max_evals: usize,
    pub fitness_std_stop: f64,
    pub eps_tie: f64,
    pub solver: SolverSettings,
    pub scale_range: (f64, f64),
    /// Worker threads; 0 lets the runtime decide.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Ebcs,
            seed: 0,
            reps: 10,
            folds: 5,
            inner_folds: 5,
            pop_size: 30,
            max_evals: 1000,
            fitness_std_stop: 1e-3,
            eps_tie: 1e-6,
            solver: SolverSettings::default(),
            scale_range: (0.0, 1.0),
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            pop_size: self.pop_size,
            max_evals: self.max_evals,
            solver: self.solver,
            eps_tie: self.eps_tie,
            seed,
            fitness_std_stop: self.fitness_std_stop,
            use_archive: true,
            jobs: self.jobs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.folds < 2 || self.inner_folds < 2 {
            return Err(Error::invalid(
                "need at least one repetition and at least two outer and inner folds",
            ));
        }
        self.run_config(self.seed).validate()
    }
}

/// Seed for one outer fold, derived from the experiment seed.
pub fn fold_seed(seed: u64, rep: usize, fold: usize) -> u64 {
    seed.wrapping_mul(1_000_003)
        .wrapping_add(rep as u64 * 1_009)
        .wrapping_add(fold as u64)
}

/// A trained classifier together with the (scaled, resampled) data it needs.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: SvmModel,
    pub train: Dataset,
    pub sampler: Option<SamplerConfig>,
}

impl TrainedModel {
    pub fn predict(&self, test: &Dataset) -> Vec<i8> {
        self.model.predict_dataset(&self.train, test)
    }
}

/// Baseline candidate: `log2 C`, `log2 gamma`, then sampler coordinates in `[0, 1]`.
#[derive(Debug, Clone)]
struct Tuned {
    position: Vec<f64>,
    fitness: f64,
}

impl Candidate for Tuned {
    fn position(&self) -> &[f64] {
        &self.position
    }

    fn fitness(&self) -> f64 {
        self.fitness
    }
}

fn minority_sizes(d: &Dataset) -> (usize, usize) {
    let (p, n) = (d.count(POSITIVE), d.count(NEGATIVE));
    (p.min(n), p.max(n))
}

/// Hyper-parameters and sampler settings encoded by a baseline position.
///
/// The sampling amount spans `[(n_min + 1) / n_maj, 1]` and the SMOTE
/// neighbourhood `[1, n_min / 2]`, both relative to `d`.
fn decode(method: Method, x: &[f64], d: &Dataset, seed: u64) -> (HyperParams, Option<SamplerConfig>) {
    let c = x[0].exp2();
    let hp = HyperParams {
        c_pos: c,
        c_neg: c,
        gamma: x[1].exp2(),
    };
    if method == Method::Svm {
        return (hp, None);
    }
    let (n_min, n_maj) = minority_sizes(d);
    let lo = ((n_min + 1) as f64 / n_maj as f64).min(1.0);
    let target_ratio = (lo + x[2] * (1.0 - lo)).min(1.0);
    let k_max = (n_min / 2).max(1);
    let k_neighbors = if method == Method::Smote {
        1 + (x[3] * (k_max - 1) as f64).round() as usize
    } else {
        1
    };
    (
        hp,
        Some(SamplerConfig {
            target_ratio,
            k_neighbors,
            seed,
        }),
    )
}

fn resample(method: Method, d: &Dataset, cfg: &SamplerConfig) -> Result<Dataset> {
    match method {
        Method::Ros => sampling::ros(d, cfg),
        Method::Rus => sampling::rus(d, cfg),
        Method::Smote => {
            let (n_min, _) = minority_sizes(d);
            let k = cfg.k_neighbors.min(n_min.saturating_sub(1)).max(1);
            sampling::smote(d, &SamplerConfig { k_neighbors: k, ..*cfg })
        }
        Method::Svm | Method::Ebcs => Ok(d.clone()),
    }
}

fn fit_baseline(
    method: Method,
    x: &[f64],
    train: &Dataset,
    solver: &SolverSettings,
    seed: u64,
) -> Result<TrainedModel> {
    let (hp, sampler) = decode(method, x, train, seed);
    let train = match &sampler {
        Some(cfg) => resample(method, train, cfg)?,
        None => train.clone(),
    };
    let model = smo::solve(&train, &hp, solver, None)?;
    Ok(TrainedModel { model, train, sampler })
}

/// Mean balanced error over an inner stratified cross-validation.
fn inner_cv_ber(method: Method, x: &[f64], d: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<f64> {
    let plan = stratified_kfold(d, 1, cfg.inner_folds, seed)?;
    let mut total = 0.0;
    for fold in 0..cfg.inner_folds {
        let (tr, va) = plan.split(0, fold);
        let (train, valid) = (d.subset(&tr)?, d.subset(&va)?);
        let fitted = fit_baseline(method, x, &train, &cfg.solver, seed)?;
        total += ber(&confusion(valid.labels(), &fitted.predict(&valid))?)?;
    }
    Ok(total / cfg.inner_folds as f64)
}

fn population_std(pop: &[Tuned]) -> f64 {
    let n = pop.len() as f64;
    let mean = pop.iter().map(|p| p.fitness).sum::<f64>() / n;
    (pop.iter().map(|p| (p.fitness - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Tunes a baseline with SHADE on inner cross-validated BER and refits it on
/// all of `train`.
pub fn tune_baseline(method: Method, train: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<TrainedModel> {
    let mut bounds = vec![COST_LOG2_RANGE, GAMMA_LOG2_RANGE];
    match method {
        Method::Svm => {}
        Method::Ros | Method::Rus => bounds.push((0.0, 1.0)),
        Method::Smote => bounds.extend([(0.0, 1.0), (0.0, 1.0)]),
        Method::Ebcs => return Err(Error::invalid("ebcs is not a baseline")),
    }
    let (mut state, init) = shade::init_population(&bounds, &ShadeConfig::new(cfg.pop_size, seed))?;
    let evaluate = |xs: Vec<Vec<f64>>| -> Result<Vec<Tuned>> {
        xs.into_par_iter()
            .map(|x| {
                let fitness = inner_cv_ber(method, &x, train, cfg, seed)?;
                Ok(Tuned { position: x, fitness })
            })
            .collect()
    };
    let mut population = evaluate(init)?;
    let mut evaluations = population.len();
    while evaluations < cfg.max_evals && population_std(&population) >= cfg.fitness_std_stop {
        let trials = state.propose(&population);
        let take = trials.len().min(cfg.max_evals - evaluations);
        let children = evaluate(trials[..take].iter().map(|t| t.position.clone()).collect())?;
        evaluations += children.len();
        state.advance(&mut population, &trials, children, cfg.eps_tie);
    }
    let best = (0..population.len())
        .min_by(|&a, &b| population[a].fitness.total_cmp(&population[b].fitness).then(a.cmp(&b)))
        .expect("population is non-empty");
    fit_baseline(method, &population[best].position, train, &cfg.solver, seed)
}

/// Trains `cfg.method` on an already scaled training set.
pub fn train_method(train: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<TrainedModel> {
    match cfg.method {
        Method::Ebcs => {
            let outcome = bilevel::run(train, &cfg.run_config(seed))?;
            Ok(TrainedModel {
                model: outcome.model,
                train: train.clone(),
                sampler: None,
            })
        }
        m => tune_baseline(m, train, cfg, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub rep: usize,
    pub fold: usize,
    pub scores: ScoreReport,
    pub train_seconds: f64,
    pub params: HyperParams,
    pub sv_count: usize,
    pub sampler: Option<SamplerConfig>,
    pub n_train: usize,
    pub n_test: usize,
    pub train_positives: usize,
    pub test_positives: usize,
    /// Scaling fitted on this fold's training part.
    pub scaling: FeatureScaling,
    /// Content hashes of the unscaled training and test parts.
    pub train_digest: String,
    pub test_digest: String,
}

/// Scales, trains and scores one outer fold.
pub fn run_fold(
    d: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    cfg: &ExperimentConfig,
    rep: usize,
    fold: usize,
) -> Result<FoldResult> {
    let (raw_train, raw_test) = (d.subset(train_idx)?, d.subset(test_idx)?);
    let scaling = FeatureScaling::fit(&raw_train, cfg.scale_range.0, cfg.scale_range.1)?;
    let (train, test) = (scaling.apply(&raw_train)?, scaling.apply(&raw_test)?);

    let start = Instant::now();
    let trained = train_method(&train, cfg, fold_seed(cfg.seed, rep, fold))?;
    let train_seconds = start.elapsed().as_secs_f64();

    let report = scores(&confusion(test.labels(), &trained.predict(&test))?)?;
    Ok(FoldResult {
        rep,
        fold,
        scores: report,
        train_seconds,
        params: trained.model.params,
        sv_count: trained.model.sv_count(),
        sampler: trained.sampler,
        n_train: train.n_samples(),
        n_test: test.n_samples(),
        train_positives: train.count(POSITIVE),
        test_positives: test.count(POSITIVE),
        scaling,
        train_digest: raw_train.digest(),
        test_digest: raw_test.digest(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one value.
    pub std: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub method: Method,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub folds: Vec<FoldResult>,
    /// Mean and standard deviation per score key, plus `train_seconds`.
    pub aggregate: BTreeMap<String, MetricSummary>,
}

pub fn aggregate(folds: &[FoldResult]) -> BTreeMap<String, MetricSummary> {
    let mut out = BTreeMap::new();
    for key in ScoreReport::KEYS {
        let values: Vec<f64> = folds.iter().map(|f| f.scores.get(key).expect("known key")).collect();
        out.insert(key.to_string(), MetricSummary::of(&values));
    }
    let times: Vec<f64> = folds.iter().map(|f| f.train_seconds).collect();
    out.insert("train_seconds".to_string(), MetricSummary::of(&times));
    out
}

/// Repeated stratified cross-validation of `cfg.method` on `d`.
pub fn cross_validate(d: &Dataset, dataset_id: &str, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let plan = stratified_kfold(d, cfg.reps, cfg.folds, cfg.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker threads: {e}")))?;
    let pairs: Vec<(usize, usize)> = plan.pairs().collect();
    let folds = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(rep, fold)| {
                let (tr, te) = plan.split(rep, fold);
                run_fold(d, &tr, &te, cfg, rep, fold)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentReport {
        dataset: dataset_id.to_string(),
        method: cfg.method,
        seed: cfg.seed,
        config: cfg.clone(),
        aggregate: aggregate(&folds),
        folds,
    })
}

/// Per-method results on one dataset of a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub dataset: String,
    pub method: Method,
    pub aggregate: BTreeMap<String, MetricSummary>,
    /// Total training time over all folds.
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub methods: Vec<Method>,
    pub datasets: Vec<String>,
    pub entries: Vec<BenchEntry>,
}

impl BenchReport {
    /// Training times as `[method][dataset]`.
    pub fn time_matrix(&self) -> Vec<Vec<f64>> {
        self.methods
            .iter()
            .map(|m| {
                self.datasets
                    .iter()
                    .map(|d| {
                        self.entries
                            .iter()
                            .find(|e| e.method == *m && &e.dataset == d)
                            .map_or(f64::NAN, |e| e.train_seconds)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Cross-validates every method on every dataset.
pub fn bench(datasets: &[(String, Dataset)], methods: &[Method], cfg: &ExperimentConfig) -> Result<BenchReport> {
    if datasets.is_empty() || methods.len() < 2 {
        return Err(Error::invalid("a benchmark needs at least one dataset and two methods"));
    }
    let mut entries = Vec::new();
    for (name, d) in datasets {
        for &method in methods {
            let report = cross_validate(d, name, &ExperimentConfig { method, ..cfg.clone() })?;
            entries.push(BenchEntry {
                dataset: name.clone(),
                method,
                train_seconds: report.folds.iter().map(|f| f.train_seconds).sum(),
                aggregate: report.aggregate,
            });
        }
    }
    Ok(BenchReport {
        methods: methods.to_vec(),
        datasets: datasets.iter().map(|(n, _)| n.clone()).collect(),
        entries,
    })
}
