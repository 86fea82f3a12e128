//! Bilevel hyper-parameter search: SHADE over `log2(C+, C-, gamma)` on the
//! upper level, SMO on the lower level, with the leave-one-out balanced error
//! as fitness and lower-level warm starts taken from nearby evaluated
//! configurations.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::loo_ber;
use crate::shade::{self, Candidate, GenerationSummary, ShadeConfig};
use crate::smo::{self, HyperParams, SolverSettings, SvmModel, COST_LOG2_RANGE, GAMMA_LOG2_RANGE};

pub use crate::smo::repair_equality;

/// Search box in log2 coordinates: `C+`, `C-`, `gamma`.
pub fn search_bounds() -> [(f64, f64); 3] {
    [COST_LOG2_RANGE, COST_LOG2_RANGE, GAMMA_LOG2_RANGE]
}

/// An evaluated upper-level configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperIndividual {
    pub hp: HyperParams,
    /// Coordinates in the log2 search space.
    pub position: Vec<f64>,
    /// Leave-one-out balanced error rate on the training data.
    pub fitness: f64,
    pub sv_count: usize,
    pub converged: bool,
    pub solver_iterations: usize,
    #[serde(skip)]
    pub model: SvmModel,
}

impl UpperIndividual {
    pub fn sv_set(&self) -> &[usize] {
        &self.model.sv_indices
    }
}

impl Candidate for UpperIndividual {
    fn position(&self) -> &[f64] {
        &self.position
    }

    fn fitness(&self) -> f64 {
        self.fitness
    }

    fn complexity(&self) -> usize {
        self.sv_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pop_size: usize,
    /// Upper-level evaluation budget (lower-level solves).
    pub max_evals: usize,
    pub solver: SolverSettings,
    /// Fitness differences up to this count as ties.
    pub eps_tie: f64,
    pub seed: u64,
    /// Stop once the population's fitness standard deviation drops below this.
    pub fitness_std_stop: f64,
    pub use_archive: bool,
    /// Worker threads for offspring evaluation; 0 lets the runtime decide.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pop_size: 30,
            max_evals: 1000,
            solver: SolverSettings::default(),
            eps_tie: 1e-6,
            seed: 0,
            fitness_std_stop: 1e-3,
            use_archive: true,
            jobs: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 {
            return Err(Error::invalid(format!(
                "population size must be at least 4, got {}",
                self.pop_size
            )));
        }
        if self.max_evals < self.pop_size {
            return Err(Error::invalid(format!(
                "evaluation budget {} is smaller than the population size {}",
                self.max_evals, self.pop_size
            )));
        }
        if !(self.eps_tie >= 0.0) || !(self.fitness_std_stop >= 0.0) {
            return Err(Error::invalid("tie and stopping thresholds must be non-negative"));
        }
        self.solver.validate()
    }
}

/// Adaptive distribution over the number of neighbours used for warm starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStartState {
    /// `probs[m - 1]` is the probability of using `m` neighbours.
    pub probs: Vec<f64>,
    pub successes: Vec<usize>,
    pub trials: Vec<usize>,
}

impl WarmStartState {
    /// Uniform over `1..=max_m`.
    pub fn new(max_m: usize) -> Self {
        Self {
            probs: vec![1.0 / max_m as f64; max_m],
            successes: vec![0; max_m],
            trials: vec![0; max_m],
        }
    }

    pub fn sample_m<R: rand::Rng>(&self, rng: &mut R) -> usize {
        WeightedIndex::new(&self.probs)
            .expect("probabilities are positive")
            .sample(rng)
            + 1
    }
}

/// Records one use of `m` neighbours and re-derives the distribution from
/// Laplace-smoothed success rates `(s + 1) / (t + 2)`.
pub fn adapt_m(state: &mut WarmStartState, m_used: usize, improved: bool) {
    let k = m_used - 1;
    state.trials[k] += 1;
    if improved {
        state.successes[k] += 1;
    }
    let rates: Vec<f64> = state
        .successes
        .iter()
        .zip(&state.trials)
        .map(|(&s, &t)| (s as f64 + 1.0) / (t as f64 + 2.0))
        .collect();
    let total: f64 = rates.iter().sum();
    state.probs = rates.into_iter().map(|r| r / total).collect();
}

/// Solves the lower level at `hp` and scores it by leave-one-out BER.
pub fn evaluate_individual(
    hp: &HyperParams,
    d: &Dataset,
    init_alphas: Option<&[f64]>,
    solver: &SolverSettings,
) -> Result<UpperIndividual> {
    let model = smo::solve(d, hp, solver, init_alphas)?;
    let fitness = loo_ber(&model, d)?;
    Ok(UpperIndividual {
        hp: *hp,
        position: hp.to_log2().to_vec(),
        fitness,
        sv_count: model.sv_count(),
        converged: model.converged,
        solver_iterations: model.iterations_used,
        model,
    })
}

/// Indices of the `m` members nearest to `point` (Euclidean, log2 space),
/// nearest first; equal distances keep population order.
pub fn neighbor_lookup(point: &[f64], population: &[UpperIndividual], m: usize) -> Vec<usize> {
    let mut dist: Vec<(f64, usize)> = population
        .iter()
        .enumerate()
        .map(|(k, ind)| {
            let d2: f64 = ind
                .position
                .iter()
                .zip(point)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, k)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dist.into_iter().take(m).map(|(_, k)| k).collect()
}

/// Initial multipliers for `hp` from neighbouring solutions.
///
/// Sample `j` gets `p_j` times the mean of its multipliers over the
/// neighbours that hold it as a support vector, where `p_j` is the fraction of
/// neighbours that do. The result is clipped to the new boxes and repaired to
/// satisfy the equality constraint.
pub fn warm_start_alphas(hp: &HyperParams, neighbors: &[&UpperIndividual], d: &Dataset) -> Vec<f64> {
    let n = d.n_samples();
    let mut count = vec![0usize; n];
    let mut sum = vec![0.0; n];
    for nb in neighbors {
        for &j in nb.sv_set() {
            count[j] += 1;
            sum[j] += nb.model.alphas[j];
        }
    }
    let m = neighbors.len().max(1) as f64;
    let upper = hp.upper_bounds(d.labels());
    let raw: Vec<f64> = (0..n)
        .map(|j| {
            if count[j] == 0 {
                return 0.0;
            }
            let p = count[j] as f64 / m;
            (p * sum[j] / count[j] as f64).clamp(0.0, upper[j])
        })
        .collect();
    repair_equality(&raw, d.labels(), &upper)
}

/// Multipliers for a first-generation solve: every sample starts as a support
/// vector at `min(1, C)`.
pub fn cold_start_alphas(hp: &HyperParams, d: &Dataset) -> Vec<f64> {
    let upper = hp.upper_bounds(d.labels());
    let raw: Vec<f64> = upper.iter().map(|c| c.min(1.0)).collect();
    repair_equality(&raw, d.labels(), &upper)
}

/// Index of the lowest-fitness member; members within `eps_tie` of the
/// minimum are ranked by support-vector count, then by index.
pub fn select_final(population: &[UpperIndividual], eps_tie: f64) -> Result<usize> {
    let best = population
        .iter()
        .map(|p| p.fitness)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::invalid("cannot select from an empty population"))?;
    Ok((0..population.len())
        .filter(|&k| population[k].fitness <= best + eps_tie)
        .min_by_key(|&k| (population[k].sv_count, k))
        .expect("the minimum is a candidate"))
}

/// One row per upper-level evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub eval_id: usize,
    pub generation: usize,
    pub log2_c_pos: f64,
    pub log2_c_neg: f64,
    pub log2_gamma: f64,
    pub ber: f64,
    pub sv_count: usize,
    pub solver_iterations: usize,
    pub m_used: usize,
    pub warm_started: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    FitnessSpread,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: SvmModel,
    pub best: UpperIndividual,
    pub trace: Vec<TraceRow>,
    pub generations: Vec<GenerationSummary>,
    pub evaluations: usize,
    pub stop_reason: StopReason,
    pub warm_start: WarmStartState,
}

fn fitness_std(population: &[UpperIndividual]) -> f64 {
    let n = population.len() as f64;
    let mean = population.iter().map(|p| p.fitness).sum::<f64>() / n;
    (population.iter().map(|p| (p.fitness - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn trace_row(eval_id: usize, generation: usize, ind: &UpperIndividual, m_used: usize) -> TraceRow {
    TraceRow {
        eval_id,
        generation,
        log2_c_pos: ind.position[0],
        log2_c_neg: ind.position[1],
        log2_gamma: ind.position[2],
        ber: ind.fitness,
        sv_count: ind.sv_count,
        solver_iterations: ind.solver_iterations,
        m_used,
        warm_started: m_used > 0,
    }
}

/// Evaluates `jobs` in parallel, keeping input order.
fn evaluate_batch(
    d: &Dataset,
    solver: &SolverSettings,
    jobs: Vec<(Vec<f64>, Vec<f64>)>,
) -> Result<Vec<UpperIndividual>> {
    jobs.into_par_iter()
        .map(|(position, init)| {
            let hp = HyperParams::from_log2([position[0], position[1], position[2]]);
            let mut ind = evaluate_individual(&hp, d, Some(&init), solver)?;
            // Keep the exact search coordinates rather than a log2 round trip.
            ind.position = position;
            Ok(ind)
        })
        .collect()
}

/// Runs the full bilevel search on `d` and returns the selected model.
pub fn run(d: &Dataset, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker threads: {e}")))?;
    pool.install(|| run_inner(d, cfg))
}

fn run_inner(d: &Dataset, cfg: &RunConfig) -> Result<RunOutcome> {
    let mut shade_cfg = ShadeConfig::new(cfg.pop_size, cfg.seed);
    shade_cfg.use_archive = cfg.use_archive;
    let (mut state, positions) = shade::init_population(&search_bounds(), &shade_cfg)?;

    let jobs = positions
        .into_iter()
        .map(|x| {
            let hp = HyperParams::from_log2([x[0], x[1], x[2]]);
            (x, cold_start_alphas(&hp, d))
        })
        .collect();
    let mut population = evaluate_batch(d, &cfg.solver, jobs)?;
    let mut trace: Vec<TraceRow> = population
        .iter()
        .enumerate()
        .map(|(k, ind)| trace_row(k, 0, ind, 0))
        .collect();
    let mut evaluations = population.len();
    let mut generations = vec![state.summary(&population)];
    let mut warm = WarmStartState::new(cfg.pop_size);

    let stop_reason = loop {
        if evaluations >= cfg.max_evals {
            break StopReason::Budget;
        }
        if fitness_std(&population) < cfg.fitness_std_stop {
            break StopReason::FitnessSpread;
        }
        let trials = state.propose(&population);
        let take = trials.len().min(cfg.max_evals - evaluations);
        let mut m_used = Vec::with_capacity(take);
        let mut jobs = Vec::with_capacity(take);
        for trial in &trials[..take] {
            let m = warm.sample_m(state.rng());
            let hp = HyperParams::from_log2([trial.position[0], trial.position[1], trial.position[2]]);
            let neighbors: Vec<&UpperIndividual> = neighbor_lookup(&trial.position, &population, m)
                .into_iter()
                .map(|k| &population[k])
                .collect();
            jobs.push((trial.position.clone(), warm_start_alphas(&hp, &neighbors, d)));
            m_used.push(m);
        }
        let children = evaluate_batch(d, &cfg.solver, jobs)?;
        let generation = state.generation + 1;
        for (k, child) in children.iter().enumerate() {
            trace.push(trace_row(evaluations + k, generation, child, m_used[k]));
        }
        evaluations += children.len();
        let won = state.advance(&mut population, &trials, children, cfg.eps_tie);
        for (m, improved) in m_used.into_iter().zip(won) {
            adapt_m(&mut warm, m, improved);
        }
        generations.push(state.summary(&population));
    };

    let best = population.swap_remove(select_final(&population, cfg.eps_tie)?);
    Ok(RunOutcome {
        model: best.model.clone(),
        best,
        trace,
        generations,
        evaluations,
        stop_reason,
        warm_start: warm,
    })
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_generation_log(path: &Path, rows: &[GenerationSummary]) -> Result<()> {
    write_csv(path, rows)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{other:?}")),
    })?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smo::equality_residual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(n_pos: usize, n_neg: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..n_pos + n_neg {
            let (cx, y) = if k < n_pos { (-2.0, 1) } else { (2.0, -1) };
            rows.push(vec![cx + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]);
            labels.push(y);
        }
        Dataset::new(rows, labels, vec![], ["p".into(), "n".into()]).unwrap()
    }

    fn individual(position: [f64; 3], fitness: f64, sv: Vec<usize>, alphas: Vec<f64>) -> UpperIndividual {
        let hp = HyperParams::from_log2(position);
        UpperIndividual {
            hp,
            position: position.to_vec(),
            fitness,
            sv_count: sv.len(),
            converged: true,
            solver_iterations: 0,
            model: SvmModel {
                alphas,
                bias: 0.0,
                params: hp,
                sv_indices: sv,
                dual_objective: 0.0,
                iterations_used: 0,
                converged: true,
            },
        }
    }

    #[test]
    fn separable_blobs_have_zero_fitness() {
        let d = blobs(10, 30, 1);
        let hp = HyperParams::new(10.0, 10.0, 0.5).unwrap();
        let ind = evaluate_individual(&hp, &d, None, &SolverSettings::default()).unwrap();
        assert_eq!(ind.fitness, 0.0);
        assert_eq!(ind.sv_count, ind.sv_set().len());
        let again = evaluate_individual(&hp, &d, None, &SolverSettings::default()).unwrap();
        assert_eq!(ind, again);
    }

    #[test]
    fn extreme_width_memorises() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        let labels: Vec<i8> = (0..30).map(|k| if k % 3 == 0 { 1 } else { -1 }).collect();
        let d = Dataset::new(rows, labels, vec![], ["p".into(), "n".into()]).unwrap();
        let hp = HyperParams::new(10.0, 10.0, 32.0).unwrap();
        let ind = evaluate_individual(&hp, &d, None, &SolverSettings::default()).unwrap();
        assert_eq!(ind.sv_count, 30);
    }

    fn brute_force_neighbors(point: &[f64], pop: &[UpperIndividual], m: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..pop.len()).collect();
        for a in 0..all.len() {
            for b in 0..all.len() - 1 - a {
                let d = |k: usize| -> f64 {
                    pop[k].position.iter().zip(point).map(|(x, y)| (x - y).powi(2)).sum()
                };
                if d(all[b]) > d(all[b + 1]) {
                    all.swap(b, b + 1);
                }
            }
        }
        all.truncate(m);
        all
    }

    #[test]
    fn neighbors() {
        let pop = vec![
            individual([0.0, 0.0, 0.0], 0.1, vec![], vec![]),
            individual([3.0, 0.0, -1.0], 0.1, vec![], vec![]),
            individual([1.0, 1.0, 1.0], 0.1, vec![], vec![]),
        ];
        assert_eq!(neighbor_lookup(&[3.0, 0.0, -1.0], &pop, 1), vec![1]);
        assert_eq!(neighbor_lookup(&[0.0; 3], &pop, 3).len(), 3);
        for point in [[0.9, 0.9, 0.8], [2.0, 0.5, 0.0], [-4.0, 2.0, 3.0]] {
            for m in 1..=3 {
                assert_eq!(neighbor_lookup(&point, &pop, m), brute_force_neighbors(&point, &pop, m));
            }
        }
        // Equidistant members keep population order.
        let twins = vec![
            individual([1.0, 0.0, 0.0], 0.1, vec![], vec![]),
            individual([-1.0, 0.0, 0.0], 0.1, vec![], vec![]),
        ];
        assert_eq!(neighbor_lookup(&[0.0; 3], &twins, 2), vec![0, 1]);
    }

    fn four_points() -> Dataset {
        Dataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1, -1, 1, -1],
            vec![],
            ["p".into(), "n".into()],
        )
        .unwrap()
    }

    #[test]
    fn single_neighbor_warm_start() {
        let d = four_points();
        let nb = individual([0.0; 3], 0.0, vec![1, 3], vec![0.0, 0.5, 0.0, 0.5]);
        let hp = HyperParams::new(1.0, 1.0, 1.0).unwrap();
        // p_1 = p_3 = 1, others 0; both are negatives so the equality repair
        // has no positive mass to balance against.
        let raw = warm_start_alphas(&hp, &[&nb], &d);
        assert_eq!(raw, vec![0.0; 4]);

        let nb = individual([0.0; 3], 0.0, vec![0, 1], vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(warm_start_alphas(&hp, &[&nb], &d), vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn frequency_weighting_and_repair() {
        let d = four_points();
        let a = individual([0.0; 3], 0.0, vec![0, 1], vec![0.8, 0.8, 0.0, 0.0]);
        let b = individual([0.0; 3], 0.0, vec![0, 1, 2, 3], vec![0.4, 0.2, 0.6, 0.8]);
        let hp = HyperParams::new(0.5, 1.0, 1.0).unwrap();
        let out = warm_start_alphas(&hp, &[&a, &b], &d);
        // Raw: [0.6 -> 0.5 (cap), 0.5, 0.3, 0.4]; positives 0.8, negatives 0.9.
        assert_eq!(out[0], 0.5);
        assert_eq!(out[2], 0.3);
        assert!(equality_residual(&out, d.labels()).abs() <= 1e-12);
        assert!(out[1] < 0.5 && out[3] < 0.4);
        let unseen = individual([0.0; 3], 0.0, vec![0], vec![0.3, 0.0, 0.0, 0.0]);
        assert_eq!(warm_start_alphas(&hp, &[&unseen], &d)[2], 0.0);
    }

    #[test]
    fn neighbor_count_adaptation() {
        let mut w = WarmStartState::new(5);
        assert!(w.probs.iter().all(|p| (*p - 0.2).abs() < 1e-15));
        for m in 1..=5 {
            adapt_m(&mut w, m, true);
            adapt_m(&mut w, m, false);
        }
        assert!(w.probs.iter().all(|p| (*p - 0.2).abs() < 1e-15));

        let mut w = WarmStartState::new(5);
        for _ in 0..50 {
            for m in 1..=5 {
                adapt_m(&mut w, m, m == 3);
            }
        }
        let best = (0..5).max_by(|&a, &b| w.probs[a].total_cmp(&w.probs[b])).unwrap();
        assert_eq!(best, 2);
        assert!((w.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.probs.iter().all(|p| *p > 0.0));
    }

    #[test]
    fn final_selection() {
        let fit = |f: &[f64], sv: &[usize]| -> Vec<UpperIndividual> {
            f.iter()
                .zip(sv)
                .map(|(&f, &s)| individual([0.0; 3], f, (0..s).collect(), vec![0.0; 30]))
                .collect()
        };
        assert_eq!(select_final(&fit(&[0.1, 0.2, 0.3], &[5, 5, 5]), 1e-6).unwrap(), 0);
        assert_eq!(select_final(&fit(&[0.1, 0.1 + 1e-9], &[20, 5]), 1e-6).unwrap(), 1);
        assert_eq!(select_final(&fit(&[0.2, 0.2, 0.2], &[4, 4, 4]), 1e-6).unwrap(), 0);
        assert!(select_final(&[], 1e-6).is_err());
    }

    #[test]
    fn cold_start_is_feasible() {
        let d = blobs(3, 9, 0);
        let hp = HyperParams::new(0.25, 4.0, 1.0).unwrap();
        let a = cold_start_alphas(&hp, &d);
        assert!(equality_residual(&a, d.labels()).abs() < 1e-12);
        assert!(a.iter().all(|v| *v > 0.0));
    }

    fn small_run(seed: u64, max_evals: usize) -> RunConfig {
        RunConfig {
            pop_size: 8,
            max_evals,
            seed,
            fitness_std_stop: 0.0,
            ..RunConfig::default()
        }
    }

    #[test]
    fn run_on_separable_blobs() {
        let d = blobs(8, 24, 5);
        let out = run(&d, &small_run(1, 40)).unwrap();
        assert_eq!(out.best.fitness, 0.0);
        assert_eq!(out.evaluations, 40);
        assert_eq!(out.trace.len(), 40);
        assert!(out.trace.iter().skip(8).all(|r| r.warm_started && r.m_used >= 1));
        let again = run(&d, &RunConfig { jobs: 1, ..small_run(1, 40) }).unwrap();
        assert_eq!(out.best.hp, again.best.hp);
        assert_eq!(out.trace, again.trace);
    }

    #[test]
    fn budget_of_one_generation() {
        let d = blobs(6, 12, 2);
        let out = run(&d, &small_run(0, 8)).unwrap();
        assert_eq!(out.evaluations, 8);
        assert_eq!(out.generations.len(), 1);
        assert!(out.trace.iter().all(|r| !r.warm_started));
        // Truncated last generation.
        let out = run(&d, &small_run(0, 13)).unwrap();
        assert_eq!(out.evaluations, 13);
        assert_eq!(out.trace.len(), 13);
    }

    #[test]
    fn flat_fitness_stops_early() {
        let d = blobs(6, 12, 4);
        let cfg = RunConfig {
            fitness_std_stop: 1e-3,
            ..small_run(0, 200)
        };
        let out = run(&d, &cfg).unwrap();
        if out.stop_reason == StopReason::FitnessSpread {
            assert!(out.evaluations < 200);
        }
        assert!(out.evaluations <= 200);
    }

    #[test]
    fn config_validation() {
        let d = blobs(4, 8, 0);
        assert!(run(&d, &RunConfig { pop_size: 3, ..RunConfig::default() }).is_err());
        assert!(run(&d, &RunConfig { max_evals: 10, ..RunConfig::default() }).is_err());
    }

    #[test]
    fn trace_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let d = blobs(4, 8, 0);
        let out = run(&d, &small_run(0, 8)).unwrap();
        write_trace(&path, &out.trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "eval_id,generation,log2_c_pos,log2_c_neg,log2_gamma,ber,sv_count,solver_iterations,m_used,warm_started"
        ));
        assert_eq!(text.lines().count(), 9);
    }
}
