//! Success-history based adaptive differential evolution (SHADE).
//!
//! The engine owns the success memories, the archive and the random stream;
//! the caller owns the evaluated population. One generation is
//! [`ShadeState::propose`] (all random draws, sequential), evaluation by the
//! caller (in any order or in parallel), then [`ShadeState::advance`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest value a memory cell may hold.
const MEMORY_FLOOR: f64 = 1e-6;
const SAMPLE_SCALE: f64 = 0.1;

/// An evaluated point of the search.
pub trait Candidate {
    fn position(&self) -> &[f64];
    fn fitness(&self) -> f64;
    /// Secondary key preferred smaller when fitnesses tie.
    fn complexity(&self) -> usize {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadeConfig {
    pub pop_size: usize,
    /// Number of memory cells `H`.
    pub memory_size: usize,
    /// Fraction of the population eligible as `pbest`.
    pub p_best: f64,
    pub use_archive: bool,
    pub archive_size: usize,
    pub seed: u64,
}

impl ShadeConfig {
    /// `H` and the archive capacity equal the population size; `p = 0.1`.
    pub fn new(pop_size: usize, seed: u64) -> Self {
        Self {
            pop_size,
            memory_size: pop_size,
            p_best: 0.1,
            use_archive: true,
            archive_size: pop_size,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 {
            return Err(Error::invalid(format!(
                "population size must be at least 4, got {}",
                self.pop_size
            )));
        }
        if self.memory_size == 0 {
            return Err(Error::invalid("memory size must be at least 1"));
        }
        if !(self.p_best > 0.0 && self.p_best <= 1.0) {
            return Err(Error::invalid(format!("p_best must lie in (0, 1], got {}", self.p_best)));
        }
        Ok(())
    }
}

/// A trial vector and the control parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub parent: usize,
    pub position: Vec<f64>,
    pub f: f64,
    pub cr: f64,
}

/// A successful `(F, CR)` pair and the fitness gain it bought.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Success {
    pub f: f64,
    pub cr: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub memory_f: f64,
    pub memory_cr: f64,
    pub archive_len: usize,
}

#[derive(Debug, Clone)]
pub struct ShadeState {
    config: ShadeConfig,
    bounds: Vec<(f64, f64)>,
    pub memory_f: Vec<f64>,
    pub memory_cr: Vec<f64>,
    pub memory_index: usize,
    pub archive: Vec<Vec<f64>>,
    pub generation: usize,
    rng: ChaCha8Rng,
}

/// Draws the initial engine state and `pop_size` points uniform in `bounds`.
pub fn init_population(
    bounds: &[(f64, f64)],
    config: &ShadeConfig,
) -> Result<(ShadeState, Vec<Vec<f64>>)> {
    config.validate()?;
    if bounds.is_empty() {
        return Err(Error::invalid("search space has no dimensions"));
    }
    for &(lo, hi) in bounds {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid(format!("invalid bounds [{lo}, {hi}]")));
        }
    }
    let mut state = ShadeState {
        config: config.clone(),
        bounds: bounds.to_vec(),
        memory_f: vec![0.5; config.memory_size],
        memory_cr: vec![0.5; config.memory_size],
        memory_index: 0,
        archive: Vec::new(),
        generation: 0,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let positions = (0..config.pop_size)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + state.rng.random::<f64>() * (hi - lo))
                .collect()
        })
        .collect();
    Ok((state, positions))
}

impl ShadeState {
    pub fn config(&self) -> &ShadeConfig {
        &self.config
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Mutable access to the random stream, for callers that need extra draws
    /// kept in the same deterministic sequence.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// `(F, CR)` from a random memory cell.
    pub fn sample_f_cr(&mut self) -> (f64, f64) {
        let r = self.rng.random_range(0..self.memory_f.len());
        sample_f_cr_from(&mut self.rng, self.memory_f[r], self.memory_cr[r])
    }

    /// current-to-pbest/1 mutation, binomial crossover and midpoint repair.
    pub fn mutate_crossover<T: Candidate>(
        &mut self,
        population: &[T],
        i: usize,
        f: f64,
        cr: f64,
    ) -> Vec<f64> {
        let n = population.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            population[a]
                .fitness()
                .total_cmp(&population[b].fitness())
                .then(population[a].complexity().cmp(&population[b].complexity()))
                .then(a.cmp(&b))
        });
        let top = ((self.config.p_best * n as f64).ceil() as usize).clamp(1, n);
        let pbest = order[self.rng.random_range(0..top)];

        let r1 = loop {
            let r = self.rng.random_range(0..n);
            if r != i {
                break r;
            }
        };
        let pool = n + if self.config.use_archive { self.archive.len() } else { 0 };
        let r2 = loop {
            let r = self.rng.random_range(0..pool);
            if r != i && r != r1 {
                break r;
            }
        };
        let x2 = if r2 < n {
            population[r2].position()
        } else {
            &self.archive[r2 - n]
        };

        let parent = population[i].position();
        let mutant = current_to_pbest(parent, population[pbest].position(), population[r1].position(), x2, f);
        let trial = binomial_crossover(&mut self.rng, parent, &mutant, cr);
        trial
            .iter()
            .zip(parent)
            .zip(&self.bounds)
            .map(|((&v, &p), &(lo, hi))| repair(v, lo, hi, p))
            .collect()
    }

    /// One trial per population member, drawn in index order.
    pub fn propose<T: Candidate>(&mut self, population: &[T]) -> Vec<Trial> {
        (0..population.len())
            .map(|i| {
                let (f, cr) = self.sample_f_cr();
                let position = self.mutate_crossover(population, i, f, cr);
                Trial {
                    parent: i,
                    position,
                    f,
                    cr,
                }
            })
            .collect()
    }

    /// One-to-one survivor selection, archive and memory update.
    ///
    /// `children[k]` is the evaluation of `trials[k]`; a shorter `children`
    /// leaves the remaining parents untouched. Returns, per child, whether it
    /// replaced its parent.
    pub fn advance<T: Candidate>(
        &mut self,
        population: &mut [T],
        trials: &[Trial],
        children: Vec<T>,
        eps: f64,
    ) -> Vec<bool> {
        let mut successes = Vec::new();
        let mut won = Vec::with_capacity(children.len());
        for (trial, child) in trials.iter().zip(children) {
            let parent = &population[trial.parent];
            if !survivor_select(parent, &child, eps) {
                won.push(false);
                continue;
            }
            successes.push(Success {
                f: trial.f,
                cr: trial.cr,
                delta: (parent.fitness() - child.fitness()).max(0.0),
            });
            let replaced = parent.position().to_vec();
            self.push_archive(replaced);
            population[trial.parent] = child;
            won.push(true);
        }
        self.update_memory(&successes);
        self.generation += 1;
        won
    }

    fn push_archive(&mut self, x: Vec<f64>) {
        if !self.config.use_archive || self.config.archive_size == 0 {
            return;
        }
        if self.archive.len() < self.config.archive_size {
            self.archive.push(x);
        } else {
            let k = self.rng.random_range(0..self.archive.len());
            self.archive[k] = x;
        }
    }

    /// Writes the weighted means of the successful `F` (Lehmer) and `CR`
    /// (arithmetic) into the current cell and advances the cursor.
    pub fn update_memory(&mut self, successes: &[Success]) {
        if successes.is_empty() {
            return;
        }
        let total: f64 = successes.iter().map(|s| s.delta).sum();
        let weight = |s: &Success| {
            if total > 0.0 {
                s.delta / total
            } else {
                1.0 / successes.len() as f64
            }
        };
        let (mut f2, mut f1, mut cr) = (0.0, 0.0, 0.0);
        for s in successes {
            let w = weight(s);
            f2 += w * s.f * s.f;
            f1 += w * s.f;
            cr += w * s.cr;
        }
        let k = self.memory_index;
        self.memory_f[k] = (f2 / f1).clamp(MEMORY_FLOOR, 1.0);
        self.memory_cr[k] = cr.clamp(MEMORY_FLOOR, 1.0);
        self.memory_index = (k + 1) % self.memory_f.len();
    }

    pub fn summary<T: Candidate>(&self, population: &[T]) -> GenerationSummary {
        let fit: Vec<f64> = population.iter().map(|c| c.fitness()).collect();
        GenerationSummary {
            generation: self.generation,
            best_fitness: fit.iter().copied().fold(f64::INFINITY, f64::min),
            mean_fitness: fit.iter().sum::<f64>() / fit.len().max(1) as f64,
            memory_f: mean(&self.memory_f),
            memory_cr: mean(&self.memory_cr),
            archive_len: self.archive.len(),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `CR ~ N(m_cr, 0.1)` clipped to `[0, 1]`; `F ~ Cauchy(m_f, 0.1)` redrawn
/// while non-positive and clipped to 1.
pub fn sample_f_cr_from<R: Rng>(rng: &mut R, m_f: f64, m_cr: f64) -> (f64, f64) {
    let normal = Normal::new(m_cr, SAMPLE_SCALE).expect("finite memory value");
    let cauchy = Cauchy::new(m_f, SAMPLE_SCALE).expect("finite memory value");
    let cr = normal.sample(rng).clamp(0.0, 1.0);
    let f = loop {
        let f = cauchy.sample(rng);
        if f > 0.0 {
            break f.min(1.0);
        }
    };
    (f, cr)
}

/// `x + F (pbest - x) + F (r1 - r2)`.
pub fn current_to_pbest(x: &[f64], pbest: &[f64], r1: &[f64], r2: &[f64], f: f64) -> Vec<f64> {
    (0..x.len())
        .map(|d| x[d] + f * (pbest[d] - x[d]) + f * (r1[d] - r2[d]))
        .collect()
}

/// Takes each mutant component with probability `cr`, and one random
/// component unconditionally.
pub fn binomial_crossover<R: Rng>(rng: &mut R, parent: &[f64], mutant: &[f64], cr: f64) -> Vec<f64> {
    let forced = rng.random_range(0..parent.len());
    (0..parent.len())
        .map(|d| {
            if d == forced || rng.random::<f64>() < cr {
                mutant[d]
            } else {
                parent[d]
            }
        })
        .collect()
}

/// Pulls an out-of-range component halfway back from the violated bound to
/// the parent's value.
pub fn repair(value: f64, lo: f64, hi: f64, parent: f64) -> f64 {
    if value < lo {
        0.5 * (lo + parent)
    } else if value > hi {
        0.5 * (hi + parent)
    } else {
        value
    }
}

/// Whether `child` replaces `parent`: strictly better by more than `eps`, or
/// within `eps` and strictly less complex.
pub fn survivor_select<T: Candidate>(parent: &T, child: &T, eps: f64) -> bool {
    let (pf, cf) = (parent.fitness(), child.fitness());
    cf < pf - eps || ((cf - pf).abs() <= eps && child.complexity() < parent.complexity())
}
