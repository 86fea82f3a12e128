//! Performance profiles over a method x problem cost matrix.
//!
//! `rho_m(tau)` is the fraction of problems on which method `m` costs at most
//! `tau` times the cheapest method on that problem.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceProfile {
    /// `ratios[m][p]` = cost of method `m` on problem `p` over the best cost on `p`.
    ratios: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub method: String,
    pub tau: f64,
    pub rho: f64,
}

/// Builds the profile from `times[method][problem]`.
pub fn performance_profile(times: &[Vec<f64>]) -> Result<PerformanceProfile> {
    let n_problems = times.first().map_or(0, Vec::len);
    if times.is_empty() || n_problems == 0 {
        return Err(Error::invalid("performance profile needs at least one method and one problem"));
    }
    if times.iter().any(|row| row.len() != n_problems) {
        return Err(Error::invalid("every method needs a time for every problem"));
    }
    if let Some(t) = times.iter().flatten().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::invalid(format!("times must be positive and finite, got {t}")));
    }
    let best: Vec<f64> = (0..n_problems)
        .map(|p| times.iter().map(|row| row[p]).fold(f64::INFINITY, f64::min))
        .collect();
    let ratios = times
        .iter()
        .map(|row| row.iter().zip(&best).map(|(t, b)| t / b).collect())
        .collect();
    Ok(PerformanceProfile { ratios })
}

impl PerformanceProfile {
    pub fn n_methods(&self) -> usize {
        self.ratios.len()
    }

    pub fn n_problems(&self) -> usize {
        self.ratios[0].len()
    }

    pub fn ratios(&self) -> &[Vec<f64>] {
        &self.ratios
    }

    pub fn rho(&self, method: usize, tau: f64) -> f64 {
        let hits = self.ratios[method].iter().filter(|r| **r <= tau).count();
        hits as f64 / self.n_problems() as f64
    }

    /// Sorted distinct ratios over all methods: the points where some `rho` steps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut taus: Vec<f64> = self.ratios.iter().flatten().copied().collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        taus
    }

    /// `rho` of every method at every breakpoint.
    pub fn points(&self, names: &[String]) -> Vec<ProfilePoint> {
        let taus = self.breakpoints();
        (0..self.n_methods())
            .flat_map(|m| {
                taus.iter().map(move |&tau| ProfilePoint {
                    method: names.get(m).cloned().unwrap_or_else(|| m.to_string()),
                    tau,
                    rho: self.rho(m, tau),
                })
            })
            .collect()
    }
}

pub fn write_profile_csv(path: &Path, points: &[ProfilePoint]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_profile(file, points).map_err(|e| match e {
        Error::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        other => other,
    })
}

/// Writes `method,tau,rho` rows.
pub fn write_profile<W: io::Write>(w: W, points: &[ProfilePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}
