use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};

/// Repeated stratified k-fold assignment.
///
/// Serialized as `{"seed": .., "reps": [[fold ids], ..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FoldPlanRepr", into = "FoldPlanRepr")]
pub struct FoldPlan {
    seed: u64,
    folds_per_rep: usize,
    assignments: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct FoldPlanRepr {
    seed: u64,
    reps: Vec<Vec<usize>>,
}

impl From<FoldPlan> for FoldPlanRepr {
    fn from(p: FoldPlan) -> Self {
        Self {
            seed: p.seed,
            reps: p.assignments,
        }
    }
}

impl TryFrom<FoldPlanRepr> for FoldPlan {
    type Error = String;

    fn try_from(r: FoldPlanRepr) -> std::result::Result<Self, String> {
        let folds_per_rep = r
            .reps
            .iter()
            .flatten()
            .max()
            .map_or(0, |m| m + 1);
        if r.reps.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err("repetitions cover different numbers of samples".into());
        }
        Ok(Self {
            seed: r.seed,
            folds_per_rep,
            assignments: r.reps,
        })
    }
}

impl FoldPlan {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn repetitions(&self) -> usize {
        self.assignments.len()
    }

    pub fn folds_per_rep(&self) -> usize {
        self.folds_per_rep
    }

    /// Fold id of every sample in repetition `rep`.
    pub fn assignments(&self, rep: usize) -> &[usize] {
        &self.assignments[rep]
    }

    /// `(train, test)` sample indices, both ascending.
    pub fn split(&self, rep: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments[rep].iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    /// All `(rep, fold)` pairs in order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.repetitions()).flat_map(move |r| (0..self.folds_per_rep).map(move |f| (r, f)))
    }
}

/// Builds `reps` independent stratified `k`-fold partitions.
///
/// Each class is shuffled and dealt round-robin over the folds, so every fold
/// holds `floor` or `ceil` of its proportional share of each class.
pub fn stratified_kfold(d: &Dataset, reps: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if reps == 0 {
        return Err(Error::invalid("need at least one repetition"));
    }
    let classes = [d.indices_of(POSITIVE), d.indices_of(NEGATIVE)];
    for (members, label) in classes.iter().zip([POSITIVE, NEGATIVE]) {
        if members.len() < k {
            return Err(Error::invalid(format!(
                "class '{}' has {} samples, fewer than {k} folds",
                d.class_name(label),
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut fold_of = vec![0; d.n_samples()];
        let mut cursor = 0;
        for members in &classes {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            for i in shuffled {
                fold_of[i] = cursor % k;
                cursor += 1;
            }
        }
        assignments.push(fold_of);
    }
    Ok(FoldPlan {
        seed,
        folds_per_rep: k,
        assignments,
    })
}
