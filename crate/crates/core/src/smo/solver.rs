use super::{repair_equality, HyperParams, SolverSettings, SvmModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{KernelCache, KernelConfig};

/// Outcome of a single two-variable step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairUpdate {
    pub delta_i: f64,
    pub delta_j: f64,
    /// Curvature along the pair direction was not positive; an endpoint was taken.
    pub degenerate: bool,
}

/// SMO state over one dataset and one hyper-parameter setting.
///
/// Works on the minimisation form `1/2 a'Qa - e'a` with `Q_ij = y_i y_j K_ij`
/// and keeps the gradient `G = Qa - e` up to date. The gradient is rebuilt from
/// scratch every `n` updates to bound round-off drift.
pub struct Solver<'a> {
    data: &'a Dataset,
    params: HyperParams,
    kernel: KernelConfig,
    cache: KernelCache,
    tolerance: f64,
    y: Vec<f64>,
    upper: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    updates: usize,
    since_refresh: usize,
    converged: bool,
}

impl<'a> Solver<'a> {
    pub fn new(
        data: &'a Dataset,
        params: HyperParams,
        settings: &SolverSettings,
        init_alphas: Option<&[f64]>,
    ) -> Result<Self> {
        params.validate()?;
        settings.validate()?;
        let n = data.n_samples();
        let upper = params.upper_bounds(data.labels());
        let alpha = match init_alphas {
            Some(init) if init.len() != n => {
                return Err(Error::invalid(format!(
                    "{} initial multipliers for {n} samples",
                    init.len()
                )))
            }
            Some(init) => repair_equality(init, data.labels(), &upper),
            None => vec![0.0; n],
        };
        let mut solver = Self {
            data,
            params,
            kernel: params.kernel()?,
            cache: KernelCache::with_megabytes(settings.kernel_cache_mb),
            tolerance: settings.tolerance,
            y: (0..n).map(|i| data.y(i)).collect(),
            upper,
            alpha,
            grad: vec![-1.0; n],
            updates: 0,
            since_refresh: 0,
            converged: false,
        };
        solver.refresh_gradient();
        Ok(solver)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn cache(&self) -> &KernelCache {
        &self.cache
    }

    /// Recomputes `G = Qa - e` from the current multipliers.
    pub fn refresh_gradient(&mut self) {
        let n = self.alpha.len();
        let mut grad = vec![-1.0; n];
        for k in 0..n {
            let a = self.alpha[k];
            if a == 0.0 {
                continue;
            }
            let row = self.cache.row(k, self.data, &self.kernel);
            let coef = a * self.y[k];
            for t in 0..n {
                grad[t] += self.y[t] * coef * row[t];
            }
        }
        self.grad = grad;
        self.since_refresh = 0;
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.upper[t]
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.upper[t]
        }
    }

    /// `-y_t G_t`, which equals `y_t - sum_k a_k y_k K_kt`.
    fn score(&self, t: usize) -> f64 {
        -self.y[t] * self.grad[t]
    }

    /// `max_{I_up} score - min_{I_low} score` with the arg-extremes
    /// (lowest index on ties). `None` if either set is empty.
    fn extremes(&self) -> Option<(usize, usize, f64)> {
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_low: Option<(usize, f64)> = None;
        for t in 0..self.alpha.len() {
            let s = self.score(t);
            if self.in_up(t) && best_up.is_none_or(|(_, v)| s > v) {
                best_up = Some((t, s));
            }
            if self.in_low(t) && best_low.is_none_or(|(_, v)| s < v) {
                best_low = Some((t, s));
            }
        }
        let ((i, up), (j, low)) = (best_up?, best_low?);
        Some((i, j, up - low))
    }

    /// Largest first-order KKT violation over feasible pairs (0 when none).
    pub fn max_violation(&self) -> f64 {
        self.extremes().map_or(0.0, |(_, _, v)| v.max(0.0))
    }

    /// Maximal violating pair, or `None` once the violation is below tolerance.
    pub fn select_working_pair(&self) -> Option<(usize, usize)> {
        match self.extremes() {
            Some((i, j, v)) if v >= self.tolerance && i != j => Some((i, j)),
            _ => None,
        }
    }

    /// Optimises the two-variable subproblem in `(a_i, a_j)` exactly.
    ///
    /// Moves along `d_i = y_i, d_j = -y_j`, which keeps `sum y a` fixed, and
    /// clips the step to both boxes. With non-positive curvature the better of
    /// the two feasible endpoints is taken (or no move if neither improves).
    pub fn update_pair(&mut self, i: usize, j: usize) -> PairUpdate {
        assert_ne!(i, j, "working pair must be two distinct samples");
        let row_i = self.cache.row(i, self.data, &self.kernel);
        let row_j = self.cache.row(j, self.data, &self.kernel);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);

        // Feasible step interval from a_i + t y_i and a_j - t y_j.
        let (lo_i, hi_i) = if yi > 0.0 {
            (-ai, self.upper[i] - ai)
        } else {
            (ai - self.upper[i], ai)
        };
        let (lo_j, hi_j) = if yj > 0.0 {
            (aj - self.upper[j], aj)
        } else {
            (-aj, self.upper[j] - aj)
        };
        let (lo, hi) = (lo_i.max(lo_j), hi_i.min(hi_j));

        let slope = yi * self.grad[i] - yj * self.grad[j];
        let curvature = row_i[i] + row_j[j] - 2.0 * row_i[j];
        let degenerate = curvature <= 0.0;
        let step = if !degenerate {
            (-slope / curvature).clamp(lo, hi)
        } else {
            let phi = |t: f64| slope * t + 0.5 * curvature * t * t;
            let (f_lo, f_hi) = (phi(lo), phi(hi));
            if f_lo < 0.0 && f_lo <= f_hi {
                lo
            } else if f_hi < 0.0 {
                hi
            } else {
                0.0
            }
        };
        if step == 0.0 {
            return PairUpdate {
                delta_i: 0.0,
                delta_j: 0.0,
                degenerate,
            };
        }

        // A step that ends on a box edge lands exactly on the bound; otherwise a
        // multiplier one ulp short of its cap could never leave the working set.
        let (ci, cj) = (self.upper[i], self.upper[j]);
        let new_ai = if step == hi_i {
            if yi > 0.0 { ci } else { 0.0 }
        } else if step == lo_i {
            if yi > 0.0 { 0.0 } else { ci }
        } else {
            (ai + step * yi).clamp(0.0, ci)
        };
        let new_aj = if step == hi_j {
            if yj > 0.0 { 0.0 } else { cj }
        } else if step == lo_j {
            if yj > 0.0 { cj } else { 0.0 }
        } else {
            (aj - step * yj).clamp(0.0, cj)
        };
        let (delta_i, delta_j) = (new_ai - ai, new_aj - aj);
        self.alpha[i] = new_ai;
        self.alpha[j] = new_aj;

        if delta_i == 0.0 && delta_j == 0.0 {
            return PairUpdate {
                delta_i,
                delta_j,
                degenerate,
            };
        }
        let (si, sj) = (yi * delta_i, yj * delta_j);
        for t in 0..self.grad.len() {
            self.grad[t] += self.y[t] * (si * row_i[t] + sj * row_j[t]);
        }
        self.updates += 1;
        self.since_refresh += 1;
        PairUpdate {
            delta_i,
            delta_j,
            degenerate,
        }
    }

    /// Dual objective `sum a - 1/2 a'Qa`, from the maintained gradient.
    pub fn dual_objective(&self) -> f64 {
        0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (1.0 - g))
            .sum::<f64>()
    }

    pub fn bias(&self) -> f64 {
        let margins: Vec<f64> = (0..self.alpha.len())
            .map(|t| self.y[t] * (self.grad[t] + 1.0))
            .collect();
        compute_bias(&self.alpha, self.data.labels(), &self.upper, &margins)
    }

    /// Runs pair updates until KKT holds within tolerance or `budget` updates
    /// have been spent in total. Returns whether it converged.
    pub fn run(&mut self, budget: usize) -> bool {
        let n = self.alpha.len();
        loop {
            match self.select_working_pair() {
                None if self.since_refresh == 0 => {
                    self.converged = true;
                    return true;
                }
                // Confirm against a drift-free gradient before stopping.
                None => self.refresh_gradient(),
                Some(_) if self.updates >= budget => {
                    self.refresh_gradient();
                    self.converged = self.select_working_pair().is_none();
                    return self.converged;
                }
                Some((i, j)) => {
                    let step = self.update_pair(i, j);
                    if step.delta_i == 0.0 && step.delta_j == 0.0 {
                        // Stalled on the most violating pair; only a fresh
                        // gradient can change the selection.
                        if self.since_refresh == 0 {
                            self.converged = false;
                            return false;
                        }
                        self.refresh_gradient();
                    } else if self.since_refresh >= n {
                        self.refresh_gradient();
                    }
                }
            }
        }
    }

    pub fn into_model(mut self) -> SvmModel {
        if self.since_refresh > 0 {
            self.refresh_gradient();
        }
        let bias = self.bias();
        let dual_objective = self.dual_objective();
        let sv_indices = (0..self.alpha.len()).filter(|&i| self.alpha[i] > 0.0).collect();
        SvmModel {
            alphas: self.alpha,
            bias,
            params: self.params,
            sv_indices,
            dual_objective,
            iterations_used: self.updates,
            converged: self.converged,
        }
    }
}

/// Bias from the KKT conditions.
///
/// `margins[t]` is `sum_k a_k y_k K(x_k, x_t)` (the decision value without
/// bias). Averages `y_t - margins[t]` over free support vectors; with none,
/// takes the midpoint of the interval the bound samples allow.
pub fn compute_bias(alphas: &[f64], labels: &[i8], upper: &[f64], margins: &[f64]) -> f64 {
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper_b = f64::INFINITY;
    for t in 0..alphas.len() {
        let y = f64::from(labels[t]);
        let r = y - margins[t];
        let (at_zero, at_cap) = (alphas[t] <= 0.0, alphas[t] >= upper[t]);
        if !at_zero && !at_cap {
            free_sum += r;
            free_count += 1;
        } else if (at_zero && y > 0.0) || (at_cap && y < 0.0) {
            // y f >= 1 (at zero) or y f <= 1 (at cap) both read b >= r here.
            lower = lower.max(r);
        } else {
            upper_b = upper_b.min(r);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        match (lower.is_finite(), upper_b.is_finite()) {
            (true, true) => 0.5 * (lower + upper_b),
            (true, false) => lower,
            (false, true) => upper_b,
            (false, false) => 0.0,
        }
    }
}
