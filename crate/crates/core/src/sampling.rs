//! Data-level rebalancing: random oversampling, random undersampling and SMOTE.
//!
//! Ratios are `n_minority / n_majority` after sampling. Original rows keep their
//! order; synthetic or duplicated rows are appended.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::kernel::squared_distance;

/// Slack for ratios that are met up to rounding.
const RATIO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub target_ratio: f64,
    /// Neighbourhood size for SMOTE.
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            target_ratio: 1.0,
            k_neighbors: 5,
            seed: 0,
        }
    }
}

/// `(minority label, n_min, n_maj)`; on equal counts the positive class is the minority.
fn class_sizes(d: &Dataset) -> (i8, usize, usize) {
    let (pos, neg) = (d.count(POSITIVE), d.count(NEGATIVE));
    if pos <= neg {
        (POSITIVE, pos, neg)
    } else {
        (NEGATIVE, neg, pos)
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("target ratio must lie in (0, 1], got {ratio}")))
    }
}

/// Minority size needed to reach `ratio` by oversampling.
fn oversample_target(d: &Dataset, ratio: f64) -> Result<(i8, usize, usize)> {
    check_ratio(ratio)?;
    let (minority, n_min, n_maj) = class_sizes(d);
    let current = n_min as f64 / n_maj as f64;
    if ratio < current - RATIO_SLACK {
        return Err(Error::invalid(format!(
            "target ratio {ratio} is below the current ratio {current:.6}; oversampling cannot lower it"
        )));
    }
    let target = ((ratio * n_maj as f64) - RATIO_SLACK).ceil().max(n_min as f64) as usize;
    Ok((minority, n_min, target))
}

fn all_rows(d: &Dataset) -> (Vec<Vec<f64>>, Vec<i8>) {
    (d.rows().map(<[f64]>::to_vec).collect(), d.labels().to_vec())
}

/// Random oversampling: duplicates minority rows, drawn with replacement.
pub fn ros(d: &Dataset, cfg: &SamplerConfig) -> Result<Dataset> {
    let (minority, n_min, target) = oversample_target(d, cfg.target_ratio)?;
    let pool = d.indices_of(minority);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut rows, mut labels) = all_rows(d);
    for _ in n_min..target {
        let i = pool[rng.random_range(0..pool.len())];
        rows.push(d.row(i).to_vec());
        labels.push(minority);
    }
    d.with_rows(rows, labels)
}

/// Random undersampling: keeps `floor(n_min / ratio)` majority rows, drawn
/// without replacement.
pub fn rus(d: &Dataset, cfg: &SamplerConfig) -> Result<Dataset> {
    check_ratio(cfg.target_ratio)?;
    let (minority, n_min, n_maj) = class_sizes(d);
    let keep = ((n_min as f64 / cfg.target_ratio) + RATIO_SLACK).floor() as usize;
    if keep == 0 {
        return Err(Error::invalid("target ratio leaves no majority samples"));
    }
    if keep >= n_maj {
        return Ok(d.clone());
    }
    let majority = d.indices_of(-minority);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen: Vec<usize> = index::sample(&mut rng, n_maj, keep)
        .into_iter()
        .map(|k| majority[k])
        .collect();
    chosen.extend(d.indices_of(minority));
    chosen.sort_unstable();
    d.subset(&chosen)
}

/// `x_i + u (x_nn - x_i)`, kept inside the segment's bounding box.
pub fn interpolate(xi: &[f64], xnn: &[f64], u: f64) -> Vec<f64> {
    xi.iter()
        .zip(xnn)
        .map(|(&a, &b)| (a + u * (b - a)).clamp(a.min(b), a.max(b)))
        .collect()
}

/// Indices into `pool` of the `k` nearest other members of each member;
/// equal distances keep pool order.
fn nearest_within(d: &Dataset, pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    pool.iter()
        .enumerate()
        .map(|(a, &i)| {
            let mut dist: Vec<(f64, usize)> = pool
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, &j)| (squared_distance(d.row(i), d.row(j)), b))
                .collect();
            dist.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            dist.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

/// SMOTE: synthetic minority rows on segments between a minority sample and
/// one of its `k` nearest minority neighbours.
pub fn smote(d: &Dataset, cfg: &SamplerConfig) -> Result<Dataset> {
    let (minority, n_min, target) = oversample_target(d, cfg.target_ratio)?;
    if cfg.k_neighbors == 0 || cfg.k_neighbors >= n_min {
        return Err(Error::invalid(format!(
            "SMOTE needs 1 <= k_neighbors < minority size ({n_min}), got {}",
            cfg.k_neighbors
        )));
    }
    let pool = d.indices_of(minority);
    let neighbors = nearest_within(d, &pool, cfg.k_neighbors);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut rows, mut labels) = all_rows(d);
    for _ in n_min..target {
        let a = rng.random_range(0..pool.len());
        let b = neighbors[a][rng.random_range(0..cfg.k_neighbors)];
        let u: f64 = rng.random();
        rows.push(interpolate(d.row(pool[a]), d.row(pool[b]), u));
        labels.push(minority);
    }
    d.with_rows(rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn toy(n_min: usize, n_maj: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..n_min + n_maj {
            let shift = if k < n_min { 3.0 } else { 0.0 };
            rows.push(vec![shift + rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0)]);
            labels.push(if k < n_min { POSITIVE } else { NEGATIVE });
        }
        Dataset::new(rows, labels, vec![], ["min".into(), "maj".into()]).unwrap()
    }

    fn cfg(ratio: f64) -> SamplerConfig {
        SamplerConfig {
            target_ratio: ratio,
            k_neighbors: 3,
            seed: 9,
        }
    }

    fn key(row: &[f64]) -> Vec<u64> {
        row.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn ros_balances_by_replication() {
        let d = toy(10, 30, 0);
        let out = ros(&d, &cfg(1.0)).unwrap();
        assert_eq!((out.count(POSITIVE), out.count(NEGATIVE)), (30, 30));
        let originals: HashSet<Vec<u64>> = d.indices_of(POSITIVE).iter().map(|&i| key(d.row(i))).collect();
        for i in 40..60 {
            assert!(originals.contains(&key(out.row(i))));
        }
        for i in 0..40 {
            assert_eq!(out.row(i), d.row(i));
        }
        assert_eq!(ros(&d, &cfg(1.0 / 3.0)).unwrap(), d);
        assert!(ros(&d, &cfg(0.2)).is_err());
        assert_eq!(ros(&d, &cfg(1.0)).unwrap(), out);
    }

    #[test]
    fn rus_subsamples_majority() {
        let d = toy(10, 30, 1);
        let out = rus(&d, &cfg(1.0)).unwrap();
        assert_eq!((out.count(POSITIVE), out.count(NEGATIVE)), (10, 10));
        let half = rus(&d, &cfg(0.5)).unwrap();
        assert_eq!((half.count(POSITIVE), half.count(NEGATIVE)), (10, 20));
        let majority: HashSet<Vec<u64>> = d.indices_of(NEGATIVE).iter().map(|&i| key(d.row(i))).collect();
        for i in out.indices_of(NEGATIVE) {
            assert!(majority.contains(&key(out.row(i))));
        }
        let pos_in: Vec<&[f64]> = d.indices_of(POSITIVE).into_iter().map(|i| d.row(i)).collect();
        let pos_out: Vec<&[f64]> = out.indices_of(POSITIVE).into_iter().map(|i| out.row(i)).collect();
        assert_eq!(pos_in, pos_out);
        assert!(rus(&d, &cfg(0.0)).is_err());
        assert!(rus(&d, &cfg(1.5)).is_err());
    }

    #[test]
    fn rus_meets_ratio_that_does_not_divide() {
        let d = toy(10, 40, 2);
        let out = rus(&d, &cfg(0.3)).unwrap();
        assert_eq!(out.count(NEGATIVE), 33);
        assert!(10.0 / 33.0 >= 0.3);
    }

    #[test]
    fn interpolation_endpoints() {
        let (a, b) = ([1.0, -2.0], [3.0, 5.0]);
        assert_eq!(interpolate(&a, &b, 0.0), a.to_vec());
        assert_eq!(interpolate(&a, &b, 1.0), b.to_vec());
        assert_eq!(interpolate(&a, &b, 0.5), vec![2.0, 1.5]);
    }

    fn within_minority_box(d: &Dataset, out: &Dataset) -> bool {
        let pos = d.indices_of(POSITIVE);
        (0..d.n_features()).all(|f| {
            let lo = pos.iter().map(|&i| d.row(i)[f]).fold(f64::INFINITY, f64::min);
            let hi = pos.iter().map(|&i| d.row(i)[f]).fold(f64::NEG_INFINITY, f64::max);
            (d.n_samples()..out.n_samples()).all(|i| (lo..=hi).contains(&out.row(i)[f]))
        })
    }

    #[test]
    fn smote_synthesises_inside_minority_hull_box() {
        let d = toy(10, 30, 3);
        for seed in 0..50 {
            let out = smote(&d, &SamplerConfig { seed, ..cfg(1.0) }).unwrap();
            assert_eq!((out.count(POSITIVE), out.count(NEGATIVE)), (30, 30));
            assert!(within_minority_box(&d, &out));
            for i in d.indices_of(NEGATIVE) {
                assert_eq!(out.row(i), d.row(i));
            }
        }
        assert!(smote(&d, &SamplerConfig { k_neighbors: 10, ..cfg(1.0) }).is_err());
        assert!(smote(&d, &SamplerConfig { k_neighbors: 0, ..cfg(1.0) }).is_err());
        assert_eq!(smote(&d, &cfg(0.7)).unwrap(), smote(&d, &cfg(0.7)).unwrap());
    }

    #[test]
    fn nearest_neighbours_by_brute_force() {
        let d = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![3.0], vec![10.0], vec![20.0]],
            vec![1, 1, 1, 1, -1],
            vec![],
            ["a".into(), "b".into()],
        )
        .unwrap();
        let pool = d.indices_of(POSITIVE);
        let nn = nearest_within(&d, &pool, 2);
        assert_eq!(nn, vec![vec![1, 2], vec![0, 2], vec![1, 0], vec![2, 1]]);
    }

    #[test]
    fn ratio_within_one_sample() {
        let d = toy(7, 53, 4);
        for ratio in [0.2, 0.37, 0.5, 0.81, 1.0] {
            let o = ros(&d, &cfg(ratio)).unwrap();
            let r = o.count(POSITIVE) as f64 / o.count(NEGATIVE) as f64;
            assert!(r >= ratio - 1e-12 && ((o.count(POSITIVE) - 1) as f64) / 53.0 < ratio);
            let u = rus(&d, &cfg(ratio)).unwrap();
            let r = 7.0 / u.count(NEGATIVE) as f64;
            assert!(r >= ratio - 1e-12 && 7.0 / ((u.count(NEGATIVE) + 1) as f64) < ratio);
        }
    }
}
