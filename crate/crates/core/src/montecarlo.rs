//! Replicated experiments.
//!
//! Every experiment point `e` (an `eps`, a `delta_eps`, …) owns the seed
//! `derive_seed(master, id(kind, e))`, and replica `k` draws from stream `k` of that
//! seed. Replicas are evaluated in parallel and collected in index order, so results
//! do not depend on the number of threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{levy_tail_bound, martingale_tail_bound, q_eps, RateSchedule};
use crate::covariation::{
    discrete_covariation, drift_bound, gamma_bound, ito_fine_forward, residual_backward,
    residual_backward_via_beta, residual_forward, forward_sum,
};
use crate::error::{Error, Result};
use crate::paths::{
    beta_from_path, levy_modulus, normalized_sup, reconstruct_hat_w, sample_brownian, FineGrid,
    SamplePath, UniformPartition,
};
use crate::rng::derive_seed;
use crate::stats::{
    clopper_pearson, covariance_with_se, linear_fit, mean, mean_se, quantile_sorted,
    variance_with_se, RateFit,
};
use crate::sum::NeumaierSum;
use crate::testfuncs::{CertifiedFunction, TestFunction};

/// Confidence level of every reported binomial interval.
pub const CONFIDENCE: f64 = 0.95;

/// Minimum exceedance count for a point to enter a rate fit.
pub const MIN_FIT_COUNT: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    SupTail,
    LevyTail,
    BetaDiag,
    MartingaleBound,
    Consistency,
    SupNormalized,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::SupTail,
        Self::LevyTail,
        Self::BetaDiag,
        Self::MartingaleBound,
        Self::Consistency,
        Self::SupNormalized,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SupTail => "sup_tail",
            Self::LevyTail => "levy_tail",
            Self::BetaDiag => "beta_diag",
            Self::MartingaleBound => "martingale_bound",
            Self::Consistency => "consistency",
            Self::SupNormalized => "sup_normalized",
        }
    }

    fn code(&self) -> u64 {
        match self {
            Self::SupTail => 1,
            Self::LevyTail => 2,
            Self::BetaDiag => 3,
            Self::MartingaleBound => 4,
            Self::Consistency => 5,
            Self::SupNormalized => 6,
        }
    }

    /// Seed of point `point` of this kind of experiment.
    pub fn point_seed(&self, master: u64, point: usize) -> u64 {
        derive_seed(master, (self.code() << 32) | point as u64)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::parse(s, "unknown experiment kind"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub horizon: f64,
    pub function: TestFunction,
    pub schedule: RateSchedule,
    /// Strictly decreasing noise levels in `(0, 1)`.
    pub epsilons: Vec<f64>,
    /// Tail threshold `delta`.
    pub threshold: f64,
    pub replicas: usize,
    /// Fine steps per coarse cell.
    pub refinement: usize,
    pub seed: u64,
    /// Coarse cells for experiments that do not follow the schedule.
    pub cells: usize,
    /// Partition widths swept by the Lévy-modulus experiment.
    pub delta_eps: Vec<f64>,
    /// Thresholds of the martingale experiment, in units of `sqrt(r)`.
    pub threshold_multipliers: Vec<f64>,
}

impl ExperimentConfig {
    /// Desk-scale defaults: `T = 1`, Hölder-1/2 function, `mu = 0.4`, `gamma = 0.25`.
    pub fn desk(kind: ExperimentKind) -> Self {
        Self {
            name: kind.as_str().to_string(),
            kind,
            horizon: 1.0,
            function: TestFunction::HolderAbsPow { alpha: 0.5, cap: 1.0 },
            schedule: RateSchedule::Holder { alpha: 0.5, mu: 0.4, gamma: 0.25 },
            epsilons: vec![0.4, 0.2, 0.1, 0.05],
            threshold: 0.5,
            replicas: 2000,
            refinement: 64,
            seed: 20_240_601,
            cells: 4,
            delta_eps: vec![0.1, 0.03, 0.01],
            threshold_multipliers: vec![0.5, 1.0, 1.5],
        }
    }

    pub fn gamma(&self) -> f64 {
        self.schedule.gamma()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("horizon", "must be positive and finite"));
        }
        if self.replicas == 0 {
            return Err(Error::invalid("replicas", "need at least one replica"));
        }
        if self.refinement == 0 {
            return Err(Error::invalid("refinement", "must be at least 1"));
        }
        if self.cells == 0 {
            return Err(Error::invalid("cells", "must be at least 1"));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::invalid("threshold", "must be positive"));
        }
        let needs_eps = matches!(
            self.kind,
            ExperimentKind::SupTail | ExperimentKind::MartingaleBound | ExperimentKind::Consistency
        );
        if needs_eps && self.epsilons.is_empty() {
            return Err(Error::invalid("epsilons", "empty list"));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::invalid("epsilons", "values must lie in (0, 1)"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("epsilons", "must be strictly decreasing"));
        }
        if let Some(alpha) = self.schedule.alpha() {
            if self.gamma() >= alpha {
                return Err(Error::invalid("gamma", "must be below the schedule exponent"));
            }
        }
        if self.kind == ExperimentKind::LevyTail {
            if self.delta_eps.is_empty() {
                return Err(Error::invalid("delta_eps", "empty list"));
            }
            if self.delta_eps.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
                return Err(Error::invalid("delta_eps", "values must lie in (0, 1)"));
            }
        }
        if self.kind == ExperimentKind::MartingaleBound
            && (self.threshold_multipliers.is_empty()
                || self.threshold_multipliers.iter().any(|&c| c.is_nan() || c <= 0.0))
        {
            return Err(Error::invalid("threshold_multipliers", "need positive values"));
        }
        for eps in &self.epsilons {
            if matches!(self.kind, ExperimentKind::SupTail | ExperimentKind::Consistency) {
                self.schedule.partition(*eps, self.horizon)?;
            }
        }
        Ok(())
    }

    fn fixed_grid(&self) -> Result<FineGrid> {
        FineGrid::new(UniformPartition::new(self.horizon, self.cells)?, self.refinement)
    }
}

/// Exceedance frequency with its exact binomial interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub count: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(count: u64, trials: u64) -> Result<Self> {
        let (ci_low, ci_high) = clopper_pearson(count, trials, CONFIDENCE)?;
        Ok(Self {
            count,
            trials,
            p_hat: count as f64 / trials as f64,
            ci_low,
            ci_high,
        })
    }

    /// Binomial standard error `sqrt(p(1-p)/N)` at the estimate.
    pub fn se(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub epsilon: f64,
    /// Realized width `T/n`.
    pub delta_eps: f64,
    pub n_eps: usize,
    /// `q_eps` at the realized width; NaN when the width is not below one.
    pub q_eps: f64,
    pub threshold: f64,
    pub gamma: f64,
    pub count: u64,
    pub replicas: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// Runs `work` on replicas `0..count` in parallel, collected in replica order.
pub(crate) fn replicas<T: Send>(count: usize, work: impl Fn(u64) -> T + Sync) -> Vec<T> {
    #[allow(clippy::redundant_closure)]
    (0..count as u64).into_par_iter().map(|k| work(k)).collect()
}

fn q_or_nan(delta: f64) -> f64 {
    q_eps(delta).unwrap_or(f64::NAN)
}

/// `P{eps^{-(1+gamma)} sup_i |Q_{eps,P}(s_i)| > delta}` per `eps`, with `Q = eps L`.
pub fn estimate_sup_tail(cfg: &ExperimentConfig) -> Result<Vec<TailEstimate>> {
    cfg.validate()?;
    let gamma = cfg.gamma();
    cfg.epsilons
        .iter()
        .enumerate()
        .map(|(point, &eps)| {
            let partition = cfg.schedule.partition(eps, cfg.horizon)?;
            let grid = FineGrid::new(partition, cfg.refinement)?;
            let seed = ExperimentKind::SupTail.point_seed(cfg.seed, point);
            let scale = eps.powf(-gamma);
            let hits = replicas(cfg.replicas, |k| {
                let path = sample_brownian(grid, seed, k);
                scale * discrete_covariation(&path, &cfg.function, eps).sup_abs > cfg.threshold
            });
            let count = hits.iter().filter(|&&h| h).count() as u64;
            let prop = Proportion::new(count, cfg.replicas as u64)?;
            Ok(TailEstimate {
                epsilon: eps,
                delta_eps: partition.delta(),
                n_eps: partition.cells(),
                q_eps: q_or_nan(partition.delta()),
                threshold: cfg.threshold,
                gamma,
                count,
                replicas: prop.trials,
                p_hat: prop.p_hat,
                ci_low: prop.ci_low,
                ci_high: prop.ci_high,
                seed,
            })
        })
        .collect()
}

/// True when every step to a smaller `eps` either does not raise `p_hat` or stays
/// within the overlap of the two intervals.
pub fn nonincreasing_up_to_ci(estimates: &[TailEstimate]) -> bool {
    estimates
        .windows(2)
        .all(|w| w[1].p_hat <= w[0].p_hat || w[1].ci_low <= w[0].ci_high)
}

/// Least-squares slope of `log p_hat` on `log eps` over points with at least
/// [`MIN_FIT_COUNT`] exceedances.
pub fn fit_rate(estimates: &[TailEstimate]) -> Result<RateFit> {
    let used: Vec<&TailEstimate> = estimates
        .iter()
        .filter(|e| e.count >= MIN_FIT_COUNT && e.p_hat > 0.0)
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData {
            usable: used.len(),
            required: 3,
        });
    }
    let xs: Vec<f64> = used.iter().map(|e| e.epsilon.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|e| e.p_hat.ln()).collect();
    linear_fit(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyRow {
    /// Requested width.
    pub target_delta_eps: f64,
    /// Realized width `T/n`.
    pub delta_eps: f64,
    pub n_eps: usize,
    pub q_eps: f64,
    pub tail: Proportion,
    pub bound: f64,
    /// Same paths observed on a grid four times coarser (`m/4` per cell).
    pub p_hat_coarse: f64,
    pub coarse_refinement: usize,
    pub seed: u64,
}

impl LevyRow {
    /// `p_hat <= bound + 3 SE`.
    pub fn dominated(&self) -> bool {
        self.tail.p_hat <= self.bound + 3.0 * self.tail.se()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyReport {
    pub rows: Vec<LevyRow>,
    /// Smallest `K2` with `p_hat <= K2 delta_eps` at every point.
    pub k2: f64,
}

/// Frequency of `delta_{W,eps} > q_eps` over a sweep of partition widths.
pub fn estimate_levy_tail(cfg: &ExperimentConfig) -> Result<LevyReport> {
    cfg.validate()?;
    let factor = if cfg.refinement.is_multiple_of(4) { 4 } else { 1 };
    let rows = cfg
        .delta_eps
        .iter()
        .enumerate()
        .map(|(point, &target)| {
            let cells = ((cfg.horizon / target).ceil() as usize).max(1);
            let partition = UniformPartition::new(cfg.horizon, cells)?;
            let delta = partition.delta();
            let q = q_eps(delta)?;
            let grid = FineGrid::new(partition, cfg.refinement)?;
            let seed = ExperimentKind::LevyTail.point_seed(cfg.seed, point);
            let flags = replicas(cfg.replicas, |k| {
                let path = sample_brownian(grid, seed, k);
                let coarse = path.coarsen(factor).expect("factor divides refinement");
                (levy_modulus(&path) > q, levy_modulus(&coarse) > q)
            });
            let count = flags.iter().filter(|f| f.0).count() as u64;
            let coarse_count = flags.iter().filter(|f| f.1).count();
            Ok(LevyRow {
                target_delta_eps: target,
                delta_eps: delta,
                n_eps: cells,
                q_eps: q,
                tail: Proportion::new(count, cfg.replicas as u64)?,
                bound: levy_tail_bound(q, delta, cfg.horizon)?,
                p_hat_coarse: coarse_count as f64 / cfg.replicas as f64,
                coarse_refinement: cfg.refinement / factor,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k2 = rows
        .iter()
        .map(|r| r.tail.p_hat / r.delta_eps)
        .fold(0.0, f64::max);
    Ok(LevyReport { rows, k2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRow {
    pub t: f64,
    pub var: f64,
    pub var_se: f64,
    pub cov_terminal: f64,
    pub cov_se: f64,
    /// Mean of the discrete quadratic variation `sum (Δbeta)^2` up to `t`.
    pub qv_mean: f64,
    pub qv_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionRow {
    pub refinement: usize,
    /// Median over the panel of `max_j |reconstructed - hat W|`.
    pub median_max_error: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaReport {
    pub rows: Vec<BetaRow>,
    pub reconstruction: Vec<ReconstructionRow>,
    pub replicas: usize,
    pub seed: u64,
}

/// Panel size of the reconstruction check.
pub const RECONSTRUCTION_PANEL: usize = 100;

/// Moments of `beta` at `t in {0, T/4, T/2, 3T/4}` and the reconstruction error of
/// `hat W` from `beta` at refinements `m`, `m/2`, `m/4`.
pub fn beta_diagnostics(cfg: &ExperimentConfig) -> Result<BetaReport> {
    cfg.validate()?;
    let grid = cfg.fixed_grid()?;
    let steps = grid.fine_cells();
    if steps % 4 != 0 {
        return Err(Error::invalid("cells", "cells x refinement must be divisible by 4"));
    }
    let seed = ExperimentKind::BetaDiag.point_seed(cfg.seed, 0);
    let marks: Vec<usize> = (0..4).map(|i| i * steps / 4).collect();

    let samples = replicas(cfg.replicas, |k| -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let path = sample_brownian(grid, seed, k);
        let beta = beta_from_path(&path)?;
        let mut qv = NeumaierSum::new();
        let mut qv_at = Vec::with_capacity(marks.len());
        let mut next = 0;
        for j in 0..=steps {
            if j > 0 {
                let d = beta[j] - beta[j - 1];
                qv.add(d * d);
            }
            if next < marks.len() && marks[next] == j {
                qv_at.push(qv.value());
                next += 1;
            }
        }
        let at = marks.iter().map(|&j| beta[j]).collect();
        Ok((at, qv_at, path.terminal()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let terminal: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let rows = marks
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let b: Vec<f64> = samples.iter().map(|s| s.0[i]).collect();
            let qv: Vec<f64> = samples.iter().map(|s| s.1[i]).collect();
            let (var, var_se) = variance_with_se(&b);
            let (cov_terminal, cov_se) = covariance_with_se(&b, &terminal);
            BetaRow {
                t: grid.time(j),
                var,
                var_se,
                cov_terminal,
                cov_se,
                qv_mean: mean(&qv),
                qv_se: mean_se(&qv),
            }
        })
        .collect();

    let factors: Vec<usize> = [1, 2, 4]
        .into_iter()
        .filter(|f| cfg.refinement.is_multiple_of(*f) && steps / f >= 2)
        .collect();
    let panel = RECONSTRUCTION_PANEL.min(cfg.replicas);
    let errors = replicas(panel, |k| -> Result<Vec<f64>> {
        let fine = sample_brownian(grid, seed, k);
        factors
            .iter()
            .map(|&factor| {
                let path = fine.coarsen(factor)?;
                let beta = beta_from_path(&path)?;
                let rebuilt = reconstruct_hat_w(&beta, path.terminal(), path.grid())?;
                Ok(rebuilt
                    .iter()
                    .zip(path.hat())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max))
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let reconstruction = factors
        .iter()
        .enumerate()
        .map(|(i, &factor)| {
            let mut e: Vec<f64> = errors.iter().map(|row| row[i]).collect();
            e.sort_by(f64::total_cmp);
            ReconstructionRow {
                refinement: cfg.refinement / factor,
                median_max_error: quantile_sorted(&e, 0.5),
                q25: quantile_sorted(&e, 0.25),
                q75: quantile_sorted(&e, 0.75),
            }
        })
        .collect();
    Ok(BetaReport {
        rows,
        reconstruction,
        replicas: cfg.replicas,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleRow {
    pub epsilon: f64,
    pub delta: f64,
    /// Bound on the bracket: `cap^2 T`.
    pub r: f64,
    pub tail: Proportion,
    pub bound: f64,
    pub seed: u64,
}

impl MartingaleRow {
    pub fn dominated(&self) -> bool {
        self.tail.p_hat <= self.bound + 3.0 * self.tail.se()
    }
}

/// `max_k |sum_{l < k} f(eps W_l) ΔW_l|` over all fine nodes.
fn ito_sup_fine<F: CertifiedFunction + ?Sized>(path: &SamplePath, f: &F, eps: f64) -> f64 {
    let w = path.values();
    let mut acc = NeumaierSum::new();
    let mut sup: f64 = 0.0;
    for k in 0..w.len() - 1 {
        acc.add(f.eval(eps * w[k]) * (w[k + 1] - w[k]));
        sup = sup.max(acc.value().abs());
    }
    sup
}

/// Empirical `P{sup |S_eps| > delta}` against the bound with `r = cap^2 T`, for
/// `delta = c sqrt(r)` over the configured multipliers.
pub fn verify_martingale_bound(cfg: &ExperimentConfig) -> Result<Vec<MartingaleRow>> {
    cfg.validate()?;
    let grid = cfg.fixed_grid()?;
    let cap = cfg.function.cap();
    let r = cap * cap * cfg.horizon;
    let mut rows = Vec::new();
    for (point, &eps) in cfg.epsilons.iter().enumerate() {
        let seed = ExperimentKind::MartingaleBound.point_seed(cfg.seed, point);
        let sups = replicas(cfg.replicas, |k| {
            ito_sup_fine(&sample_brownian(grid, seed, k), &cfg.function, eps)
        });
        for &c in &cfg.threshold_multipliers {
            let delta = c * r.sqrt();
            let count = sups.iter().filter(|&&s| s > delta).count() as u64;
            let bound = if r > 0.0 {
                martingale_tail_bound(r, delta)?
            } else {
                0.0
            };
            rows.push(MartingaleRow {
                epsilon: eps,
                delta,
                r,
                tail: Proportion::new(count, cfg.replicas as u64)?,
                bound,
                seed,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupNormalizedReport {
    pub probabilities: Vec<f64>,
    pub quantiles: Vec<f64>,
    /// `(zeta, tail)` for `P{N > zeta}`.
    pub tails: Vec<(f64, Proportion)>,
    /// Slope of `log P{N > zeta}` on `zeta^2`; `None` when fewer than three levels
    /// have enough exceedances.
    pub tail_fit: Option<RateFit>,
    pub replicas: usize,
    pub seed: u64,
}

pub const SUP_NORMALIZED_LEVELS: [f64; 5] = [2.0, 2.5, 3.0, 3.5, 4.0];

/// Distribution of `N = max_{j >= 1} |W(t_j)| / sqrt(t_j)` over the fine nodes.
pub fn estimate_sup_normalized(cfg: &ExperimentConfig) -> Result<SupNormalizedReport> {
    cfg.validate()?;
    let grid = cfg.fixed_grid()?;
    let seed = ExperimentKind::SupNormalized.point_seed(cfg.seed, 0);
    let mut values = replicas(cfg.replicas, |k| normalized_sup(&sample_brownian(grid, seed, k)));
    values.sort_by(f64::total_cmp);
    let probabilities = vec![0.5, 0.9, 0.99];
    let quantiles = probabilities.iter().map(|&p| quantile_sorted(&values, p)).collect();
    let trials = cfg.replicas as u64;
    let tails = SUP_NORMALIZED_LEVELS
        .iter()
        .map(|&z| {
            let count = values.iter().filter(|&&v| v > z).count() as u64;
            Ok((z, Proportion::new(count, trials)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let usable: Vec<&(f64, Proportion)> =
        tails.iter().filter(|(_, p)| p.count >= MIN_FIT_COUNT).collect();
    let tail_fit = if usable.len() >= 3 {
        let xs: Vec<f64> = usable.iter().map(|(z, _)| z * z).collect();
        let ys: Vec<f64> = usable.iter().map(|(_, p)| p.p_hat.ln()).collect();
        Some(linear_fit(&xs, &ys)?)
    } else {
        None
    };
    Ok(SupNormalizedReport {
        probabilities,
        quantiles,
        tails,
        tail_fit,
        replicas: cfg.replicas,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyRow {
    pub epsilon: f64,
    pub n_eps: usize,
    pub replicas: usize,
    /// Worst `|M - (S - J)|` at coarse nodes.
    pub forward_residual_error: f64,
    /// Worst disagreement between the direct and `beta` routes to `hat M`.
    pub backward_route_error: f64,
    pub gamma_bound_holds: usize,
    /// Largest `Gamma(T) / bound` over paths with a positive bound.
    pub gamma_ratio_max: f64,
    pub drift_bound_holds: usize,
    pub drift_ratio_max: f64,
    pub seed: u64,
}

/// Per-path residual identities and the `Gamma` and `A` inequalities, per `eps`.
pub fn consistency(cfg: &ExperimentConfig) -> Result<Vec<ConsistencyRow>> {
    cfg.validate()?;
    let f = &cfg.function;
    cfg.epsilons
        .iter()
        .enumerate()
        .map(|(point, &eps)| {
            let partition = cfg.schedule.partition(eps, cfg.horizon)?;
            let grid = FineGrid::new(partition, cfg.refinement)?;
            let seed = ExperimentKind::Consistency.point_seed(cfg.seed, point);
            let per_path = replicas(cfg.replicas, |k| -> Result<[f64; 6]> {
                let path = sample_brownian(grid, seed, k);
                let s = ito_fine_forward(&path, f, eps);
                let j = forward_sum(&path, f, eps);
                let m = residual_forward(&path, f, eps);
                let forward = (0..m.values.len())
                    .map(|i| (m.values[i] - (s.values[i] - j.values[i])).abs())
                    .fold(0.0, f64::max);
                let beta = beta_from_path(&path)?;
                let direct = residual_backward(&path, f, eps);
                let via = residual_backward_via_beta(&path, f, eps, &beta)?;
                let backward = direct
                    .values
                    .iter()
                    .zip(&via.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let g = gamma_bound(&path, f, eps)?;
                let a = drift_bound(&path, f, eps)?;
                let ratio = |c: &crate::covariation::BoundCheck| {
                    if c.bound > 0.0 {
                        c.value / c.bound
                    } else {
                        0.0
                    }
                };
                Ok([
                    forward,
                    backward,
                    g.holds() as u8 as f64,
                    ratio(&g),
                    a.holds() as u8 as f64,
                    ratio(&a),
                ])
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let max_of = |i: usize| per_path.iter().map(|r| r[i]).fold(0.0, f64::max);
            let count_of = |i: usize| per_path.iter().filter(|r| r[i] == 1.0).count();
            Ok(ConsistencyRow {
                epsilon: eps,
                n_eps: partition.cells(),
                replicas: cfg.replicas,
                forward_residual_error: max_of(0),
                backward_route_error: max_of(1),
                gamma_bound_holds: count_of(2),
                gamma_ratio_max: max_of(3),
                drift_bound_holds: count_of(4),
                drift_ratio_max: max_of(5),
                seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            replicas: 200,
            refinement: 16,
            ..ExperimentConfig::desk(kind)
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("tails".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn point_seeds_are_distinct() {
        let mut seeds: Vec<u64> = ExperimentKind::ALL
            .iter()
            .flat_map(|k| (0..8).map(move |p| k.point_seed(7, p)))
            .collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 48);
    }

    #[test]
    fn validation() {
        let good = small(ExperimentKind::SupTail);
        assert!(good.validate().is_ok());
        let bad = |edit: fn(&mut ExperimentConfig)| {
            let mut c = good.clone();
            edit(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.replicas = 0));
        assert!(bad(|c| c.epsilons = vec![0.1, 0.2]));
        assert!(bad(|c| c.epsilons = vec![1.0]));
        assert!(bad(|c| c.epsilons.clear()));
        assert!(bad(|c| c.refinement = 0));
        assert!(bad(|c| c.threshold = f64::NAN));
        assert!(bad(|c| c.horizon = 0.0));
    }

    #[test]
    fn constant_function_never_exceeds() {
        let cfg = ExperimentConfig {
            function: TestFunction::Constant { c: 0.8 },
            ..small(ExperimentKind::SupTail)
        };
        let est = estimate_sup_tail(&cfg).unwrap();
        assert_eq!(est.len(), 4);
        assert!(est.iter().all(|e| e.count == 0 && e.p_hat == 0.0 && e.ci_low == 0.0));
        assert!(matches!(fit_rate(&est), Err(Error::InsufficientData { usable: 0, .. })));
    }

    #[test]
    fn infinite_threshold_never_exceeds() {
        let cfg = ExperimentConfig {
            threshold: f64::INFINITY,
            ..small(ExperimentKind::SupTail)
        };
        assert!(estimate_sup_tail(&cfg).unwrap().iter().all(|e| e.count == 0));
    }

    #[test]
    fn tail_estimates_are_consistent() {
        let est = estimate_sup_tail(&small(ExperimentKind::SupTail)).unwrap();
        for e in &est {
            assert_eq!(e.p_hat, e.count as f64 / e.replicas as f64);
            assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
            assert_eq!(e.delta_eps, 1.0 / e.n_eps as f64);
        }
        assert_eq!(est, estimate_sup_tail(&small(ExperimentKind::SupTail)).unwrap());
    }

    fn synthetic(points: &[(f64, f64)]) -> Vec<TailEstimate> {
        points
            .iter()
            .map(|&(eps, p)| TailEstimate {
                epsilon: eps,
                delta_eps: 0.1,
                n_eps: 10,
                q_eps: f64::NAN,
                threshold: 1.0,
                gamma: 0.25,
                count: (p * 1e6) as u64,
                replicas: 1_000_000,
                p_hat: p,
                ci_low: p,
                ci_high: p,
                seed: 0,
            })
            .collect()
    }

    #[test]
    fn fit_rate_synthetic() {
        let eps = [0.4f64, 0.2, 0.1, 0.05];
        let power: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 0.3 * e.powf(0.4))).collect();
        let fit = fit_rate(&synthetic(&power)).unwrap();
        assert!((fit.slope - 0.4).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.npoints, 4);
        let flat: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 0.2)).collect();
        assert!(fit_rate(&synthetic(&flat)).unwrap().slope.abs() < 1e-12);
        let sparse = synthetic(&[(0.4, 0.3), (0.2, 0.1), (0.1, 0.0), (0.05, 0.0)]);
        assert!(matches!(
            fit_rate(&sparse),
            Err(Error::InsufficientData { usable: 2, required: 3 })
        ));
    }

    #[test]
    fn monotone_check_allows_overlap() {
        let mut e = synthetic(&[(0.4, 0.3), (0.2, 0.31)]);
        e[0].ci_high = 0.33;
        e[1].ci_low = 0.29;
        assert!(nonincreasing_up_to_ci(&e));
        e[1].ci_low = 0.34;
        assert!(!nonincreasing_up_to_ci(&e));
    }

    #[test]
    fn levy_report_shape() {
        let report = estimate_levy_tail(&small(ExperimentKind::LevyTail)).unwrap();
        assert_eq!(report.rows.len(), 3);
        for r in &report.rows {
            assert!(r.delta_eps <= r.target_delta_eps);
            assert!(r.p_hat_coarse <= r.tail.p_hat);
            assert!(r.tail.p_hat <= report.k2 * r.delta_eps + 1e-15);
            assert_eq!(r.coarse_refinement, 4);
        }
    }

    #[test]
    fn beta_report_at_zero_is_zero() {
        let report = beta_diagnostics(&small(ExperimentKind::BetaDiag)).unwrap();
        let r0 = report.rows[0];
        assert_eq!((r0.t, r0.var, r0.var_se, r0.cov_terminal, r0.qv_mean), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.rows[2].t, 0.5);
        let ms: Vec<usize> = report.reconstruction.iter().map(|r| r.refinement).collect();
        assert_eq!(ms, vec![16, 8, 4]);
    }

    #[test]
    fn martingale_rows() {
        let cfg = ExperimentConfig {
            epsilons: vec![0.1],
            ..small(ExperimentKind::MartingaleBound)
        };
        let rows = verify_martingale_bound(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert_eq!(r.r, 1.0);
            assert!(r.dominated());
        }
        assert!(rows.windows(2).all(|w| w[1].tail.count <= w[0].tail.count));
    }

    #[test]
    fn sup_normalized_single_node_is_half_normal() {
        let cfg = ExperimentConfig {
            cells: 1,
            refinement: 1,
            replicas: 20_000,
            ..ExperimentConfig::desk(ExperimentKind::SupNormalized)
        };
        let report = estimate_sup_normalized(&cfg).unwrap();
        // half-normal quantiles: Phi^{-1}((1 + p)/2)
        let exact = [0.674_489_750_196_081_7, 1.644_853_626_951_472_2, 2.575_829_303_549_548];
        for (q, e) in report.quantiles.iter().zip(exact) {
            assert!((q - e).abs() < 0.06 * e, "{q} vs {e}");
        }
    }

    #[test]
    fn consistency_rows() {
        let rows = consistency(&small(ExperimentKind::Consistency)).unwrap();
        for r in &rows {
            assert!(r.forward_residual_error < 1e-12);
            assert!(r.backward_route_error < 1e-10);
            assert_eq!(r.gamma_bound_holds, r.replicas);
            assert_eq!(r.drift_bound_holds, r.replicas);
        }
    }
}
