//! RBF kernel and a row-granular LRU cache for the SMO solver.

use std::sync::Arc;

use lru::LruCache;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Default cache budget in megabytes.
pub const DEFAULT_CACHE_MB: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    gamma: f64,
}

impl KernelConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(Self { gamma })
        } else {
            Err(Error::invalid(format!(
                "kernel width gamma must be positive and finite, got {gamma}"
            )))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

pub fn squared_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(-gamma * |x - z|^2)`.
pub fn rbf(x: &[f64], z: &[f64], cfg: &KernelConfig) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::invalid(format!(
            "kernel arguments differ in dimension ({} vs {})",
            x.len(),
            z.len()
        )));
    }
    Ok(rbf_unchecked(x, z, cfg.gamma))
}

#[inline]
pub(crate) fn rbf_unchecked(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(x, z)).exp()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub rows: usize,
    pub bytes: usize,
}

/// LRU cache of full kernel rows under a byte budget.
///
/// A cache is bound to one kernel width; requesting rows for a different
/// width flushes it.
pub struct KernelCache {
    capacity_bytes: usize,
    used_bytes: usize,
    gamma: Option<f64>,
    rows: LruCache<usize, Arc<[f64]>>,
    hits: u64,
    misses: u64,
}

impl KernelCache {
    pub fn new(capacity_bytes: usize) -> Self {
        Self {
            capacity_bytes,
            used_bytes: 0,
            gamma: None,
            rows: LruCache::unbounded(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn with_megabytes(mb: usize) -> Self {
        Self::new(mb.saturating_mul(1 << 20))
    }

    pub fn capacity_bytes(&self) -> usize {
        self.capacity_bytes
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits,
            misses: self.misses,
            rows: self.rows.len(),
            bytes: self.used_bytes,
        }
    }

    pub fn clear(&mut self) {
        self.rows.clear();
        self.used_bytes = 0;
    }

    /// Row `i` of the kernel matrix over `d`.
    pub fn row(&mut self, i: usize, d: &Dataset, cfg: &KernelConfig) -> Arc<[f64]> {
        if self.gamma != Some(cfg.gamma) {
            self.clear();
            self.gamma = Some(cfg.gamma);
        }
        if let Some(row) = self.rows.get(&i) {
            self.hits += 1;
            return Arc::clone(row);
        }
        self.misses += 1;
        let xi = d.row(i);
        let row: Arc<[f64]> = d.rows().map(|xj| rbf_unchecked(xi, xj, cfg.gamma)).collect();
        let bytes = std::mem::size_of_val(&*row);
        if bytes <= self.capacity_bytes {
            while self.used_bytes + bytes > self.capacity_bytes {
                match self.rows.pop_lru() {
                    Some((_, evicted)) => self.used_bytes -= std::mem::size_of_val(&*evicted),
                    None => break,
                }
            }
            self.rows.put(i, Arc::clone(&row));
            self.used_bytes += bytes;
        }
        row
    }
}

/// Kernel row `i` over `d`, served from `cache` when possible.
pub fn kernel_row(i: usize, d: &Dataset, cfg: &KernelConfig, cache: &mut KernelCache) -> Result<Arc<[f64]>> {
    if i >= d.n_samples() {
        return Err(Error::invalid(format!(
            "sample index {i} out of range for {} samples",
            d.n_samples()
        )));
    }
    Ok(cache.row(i, d, cfg))
}
