//! Brownian paths on nested uniform grids and their time reversals.
//!
//! A [`UniformPartition`] is the coarse partition `0 = s_0 < … < s_n = T`. A
//! [`FineGrid`] subdivides every coarse cell into `m` equal steps so that suprema and
//! Itô integrals over continuous time can be emulated on the fine nodes. Fine node
//! `i·m` is coarse node `i`.
//!
//! For a path `X` on `[0, T]` the two reversal operators are
//!
//! ```text
//! bar X(t) = X(T - t) - X(T)        hat X(t) = X(T - t)
//! ```
//!
//! and, with `W(T)` added to the backward filtration at time zero,
//!
//! ```text
//! beta(t) = bar W(t) + ∫_0^t hat W(s) / (T - s) ds
//! ```
//!
//! is again a Brownian motion, from which `hat W` is recovered by
//!
//! ```text
//! hat W(t) = W(T) (1 - t/T) + (T - t) ∫_0^t dbeta(s) / (T - s).
//! ```
//!
//! Both integrals are singular at `s = T`. They are discretized with the left-endpoint
//! rule on the fine grid, so the last cell `[T - h, T]` uses the integrand at `T - h`
//! and the node `s = T` is never evaluated.

use crate::error::{ensure_positive, Error, Result};
use crate::rng::GaussianStream;
use crate::sum::NeumaierSum;

/// Coarse partition of `[0, T]` into `n` cells of width `T/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPartition {
    horizon: f64,
    cells: usize,
}

impl UniformPartition {
    pub fn new(horizon: f64, cells: usize) -> Result<Self> {
        ensure_positive("horizon", horizon)?;
        if cells == 0 {
            return Err(Error::invalid("cells", "need at least one cell"));
        }
        Ok(Self { horizon, cells })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn delta(&self) -> f64 {
        self.horizon / self.cells as f64
    }

    /// Node `s_i = i·delta`; `s_n` is pinned to `T`.
    pub fn node(&self, i: usize) -> f64 {
        assert!(i <= self.cells, "node index {i} beyond {} cells", self.cells);
        if i == self.cells {
            self.horizon
        } else {
            i as f64 * self.delta()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.node(i)).collect()
    }

    /// Backward node `t_i = T - s_{n-i}`.
    pub fn backward_node(&self, i: usize) -> f64 {
        assert!(i <= self.cells);
        if i == 0 {
            0.0
        } else {
            self.horizon - self.node(self.cells - i)
        }
    }
}

/// Coarse partition refined by a factor `m` in every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineGrid {
    coarse: UniformPartition,
    refinement: usize,
}

impl FineGrid {
    pub fn new(coarse: UniformPartition, refinement: usize) -> Result<Self> {
        if refinement == 0 {
            return Err(Error::invalid("refinement", "must be at least 1"));
        }
        Ok(Self { coarse, refinement })
    }

    pub fn coarse(&self) -> &UniformPartition {
        &self.coarse
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn horizon(&self) -> f64 {
        self.coarse.horizon
    }

    /// Fine step `h = delta / m`.
    pub fn step(&self) -> f64 {
        self.coarse.delta() / self.refinement as f64
    }

    /// Number of fine steps `n·m`.
    pub fn fine_cells(&self) -> usize {
        self.coarse.cells * self.refinement
    }

    /// Number of fine nodes `n·m + 1`.
    pub fn len(&self) -> usize {
        self.fine_cells() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of fine node `j`; coarse nodes are reproduced exactly.
    pub fn time(&self, j: usize) -> f64 {
        let (cell, offset) = (j / self.refinement, j % self.refinement);
        if offset == 0 {
            self.coarse.node(cell)
        } else {
            self.coarse.node(cell) + offset as f64 * self.step()
        }
    }

    /// `T - time(j)`, computed as `(n·m - j)·h` so that no cancellation occurs near `T`.
    pub fn remaining(&self, j: usize) -> f64 {
        (self.fine_cells() - j) as f64 * self.step()
    }

    pub fn coarse_index(&self, i: usize) -> usize {
        i * self.refinement
    }

    /// Same fine nodes grouped into `cells` coarse cells.
    pub fn regroup(&self, cells: usize) -> Result<Self> {
        let total = self.fine_cells();
        if cells == 0 || !total.is_multiple_of(cells) {
            return Err(Error::invalid(
                "cells",
                format!("{cells} does not divide {total} fine steps"),
            ));
        }
        FineGrid::new(UniformPartition::new(self.horizon(), cells)?, total / cells)
    }

    /// Same coarse partition with refinement `m / factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.refinement.is_multiple_of(factor) {
            return Err(Error::invalid(
                "factor",
                format!("{factor} does not divide refinement {}", self.refinement),
            ));
        }
        FineGrid::new(self.coarse, self.refinement / factor)
    }
}

/// One Brownian trajectory on a fine grid together with its seed provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: FineGrid,
    values: Vec<f64>,
    seed: u64,
    replica: u64,
}

impl SamplePath {
    /// Wraps externally supplied values; `values[0]` must be `0`.
    pub fn from_values(grid: FineGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        if values[0] != 0.0 {
            return Err(Error::invalid("values", "path must start at 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "path values must be finite"));
        }
        Ok(Self {
            grid,
            values,
            seed: 0,
            replica: 0,
        })
    }

    pub fn grid(&self) -> &FineGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    /// `W(s_i)` for `i = 0..=n`.
    pub fn coarse_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .step_by(self.grid.refinement)
            .copied()
            .collect()
    }

    pub fn bar(&self) -> Vec<f64> {
        time_reverse_bar(&self.values)
    }

    pub fn hat(&self) -> Vec<f64> {
        time_reverse_hat(&self.values)
    }

    /// The same trajectory viewed through a different coarse partition.
    pub fn regroup(&self, cells: usize) -> Result<Self> {
        Ok(Self {
            grid: self.grid.regroup(cells)?,
            ..self.clone()
        })
    }

    /// The same trajectory observed on every `factor`-th fine node.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Ok(Self {
            grid,
            values,
            seed: self.seed,
            replica: self.replica,
        })
    }
}

/// Brownian motion on `grid`: `values[0] = 0` plus `n·m` independent `N(0, h)` steps.
///
/// The result depends only on `(grid, seed, replica)`.
pub fn sample_brownian(grid: FineGrid, seed: u64, replica: u64) -> SamplePath {
    let mut stream = GaussianStream::new(seed, replica);
    let scale = grid.step().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(w);
    for _ in 0..grid.fine_cells() {
        w += scale * stream.standard_normal();
        values.push(w);
    }
    SamplePath {
        grid,
        values,
        seed,
        replica,
    }
}

/// `out[j] = x[J - j] - x[J]`.
pub fn time_reverse_bar(values: &[f64]) -> Vec<f64> {
    let Some(&last) = values.last() else {
        return Vec::new();
    };
    values.iter().rev().map(|v| v - last).collect()
}

/// `out[j] = x[J - j]`.
pub fn time_reverse_hat(values: &[f64]) -> Vec<f64> {
    values.iter().rev().copied().collect()
}

/// The backward Brownian motion `beta` on the fine nodes.
pub fn beta_from_path(path: &SamplePath) -> Result<Vec<f64>> {
    let grid = path.grid;
    let steps = grid.fine_cells();
    if steps < 2 {
        return Err(Error::DegenerateGrid(
            "beta needs at least two fine steps".into(),
        ));
    }
    let h = grid.step();
    let hat = path.hat();
    let start = hat[0];
    let mut drift = NeumaierSum::new();
    let mut beta = Vec::with_capacity(grid.len());
    beta.push(0.0);
    for q in 0..steps {
        drift.add(hat[q] * h / grid.remaining(q));
        beta.push((hat[q + 1] - start) + drift.value());
    }
    Ok(beta)
}

/// Recovers `hat W` from `beta` and `W(T)` by the variation-of-constants formula.
pub fn reconstruct_hat_w(beta: &[f64], terminal: f64, grid: &FineGrid) -> Result<Vec<f64>> {
    if beta.len() != grid.len() {
        return Err(Error::MissingBeta(format!(
            "expected {} values, got {}",
            grid.len(),
            beta.len()
        )));
    }
    let steps = grid.fine_cells();
    if steps < 2 {
        return Err(Error::DegenerateGrid(
            "reconstruction needs at least two fine steps".into(),
        ));
    }
    let horizon = grid.horizon();
    let mut integral = NeumaierSum::new();
    let mut out = Vec::with_capacity(grid.len());
    out.push(terminal);
    for j in 1..=steps {
        integral.add((beta[j] - beta[j - 1]) / grid.remaining(j - 1));
        if j == steps {
            out.push(0.0);
        } else {
            out.push(grid.remaining(j) * (terminal / horizon + integral.value()));
        }
    }
    Ok(out)
}

/// Partition-wise modulus `max_i max_{s in cell i} |X(s) - X(s_{i-1})|` over fine nodes.
pub fn partition_modulus(values: &[f64], grid: &FineGrid) -> f64 {
    assert_eq!(values.len(), grid.len(), "values do not match grid");
    let m = grid.refinement;
    let mut modulus: f64 = 0.0;
    for cell in values.windows(m + 1).step_by(m) {
        let start = cell[0];
        for v in &cell[1..] {
            modulus = modulus.max((v - start).abs());
        }
    }
    modulus
}

/// Lévy modulus `delta_{W,eps}` of a path with respect to its coarse partition.
///
/// The continuous supremum inside each cell is replaced by the maximum over fine
/// nodes, which can only underestimate it; the gap shrinks as `m` grows.
pub fn levy_modulus(path: &SamplePath) -> f64 {
    partition_modulus(&path.values, &path.grid)
}

/// Lévy modulus of `hat W` with respect to the backward partition: in-cell increments
/// are measured from the right end of each original cell.
pub fn backward_levy_modulus(path: &SamplePath) -> f64 {
    partition_modulus(&path.hat(), &path.grid)
}

/// `max_{j >= 1} |W(t_j)| / sqrt(t_j)` over fine nodes; the node `t = 0` is skipped.
pub fn normalized_sup(path: &SamplePath) -> f64 {
    (1..path.grid.len())
        .map(|j| path.values[j].abs() / path.grid.time(j).sqrt())
        .fold(0.0, f64::max)
}
