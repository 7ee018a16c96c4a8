//! Deterministic panels of paths used to check the discrete identities and the
//! behaviour of the estimators under refinement.

use crate::covariation::{
    discrete_covariation, exact_identities, ito_pair_covariation, representation_l,
    smooth_reference,
};
use crate::error::{Error, Result};
use crate::montecarlo::replicas as panel;
use crate::paths::{beta_from_path, sample_brownian, FineGrid, SamplePath, UniformPartition};
use crate::rng::derive_seed;
use crate::stats::median;
use crate::testfuncs::{CertifiedFunction, TestFunction};

const IDENTITY_CODE: u64 = 16;
const SMOOTH_CODE: u64 = 17;
const REFINEMENT_CODE: u64 = 18;

fn suite_seed(master: u64, code: u64, point: usize) -> u64 {
    derive_seed(master, (code << 32) | point as u64)
}

/// Worst identity errors over a panel of paths at one partition size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityPanelRow {
    pub cells: usize,
    pub replicas: usize,
    pub seed: u64,
    pub covariation_error: f64,
    pub covariation_replica: u64,
    pub covariation_node: usize,
    pub reorder_error: f64,
    pub reorder_replica: u64,
    pub reorder_node: usize,
}

/// `hat J - J = L_{eps,P}` and the backward reordering of `hat J` on `replicas`
/// paths for every partition size in `cells`.
pub fn identity_panel<F: CertifiedFunction + ?Sized>(
    f: &F,
    eps: f64,
    horizon: f64,
    cells: &[usize],
    refinement: usize,
    replicas: usize,
    master: u64,
) -> Result<Vec<IdentityPanelRow>> {
    cells
        .iter()
        .enumerate()
        .map(|(point, &n)| {
            let grid = FineGrid::new(UniformPartition::new(horizon, n)?, refinement)?;
            let seed = suite_seed(master, IDENTITY_CODE, point);
            let reports = panel(replicas, |k| exact_identities(&sample_brownian(grid, seed, k), f, eps));
            let mut row = IdentityPanelRow {
                cells: n,
                replicas,
                seed,
                covariation_error: 0.0,
                covariation_replica: 0,
                covariation_node: 0,
                reorder_error: 0.0,
                reorder_replica: 0,
                reorder_node: 0,
            };
            for (k, r) in reports.iter().enumerate() {
                if r.covariation_rel_error > row.covariation_error {
                    row.covariation_error = r.covariation_rel_error;
                    row.covariation_replica = k as u64;
                    row.covariation_node = r.covariation_node;
                }
                if r.reorder_rel_error > row.reorder_error {
                    row.reorder_error = r.reorder_rel_error;
                    row.reorder_replica = k as u64;
                    row.reorder_node = r.reorder_node;
                }
            }
            Ok(row)
        })
        .collect()
}

/// Median over a panel of some per-path error, at one rung of a refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow {
    /// Cells or refinement factor, depending on the ladder.
    pub level: usize,
    pub median: f64,
}

/// `true` when the medians fall strictly at every rung.
pub fn strictly_decreasing(rows: &[LadderRow]) -> bool {
    rows.windows(2).all(|w| w[1].median < w[0].median)
}

pub fn nonincreasing(rows: &[LadderRow]) -> bool {
    rows.windows(2).all(|w| w[1].median <= w[0].median)
}

fn ladder(levels: &[usize], errors: &[Vec<f64>]) -> Vec<LadderRow> {
    levels
        .iter()
        .enumerate()
        .map(|(i, &level)| LadderRow {
            level,
            median: median(&errors.iter().map(|e| e[i]).collect::<Vec<_>>()),
        })
        .collect()
}

/// Smallest grid on which every size in `cells` is a regrouping: `max(cells)` cells
/// of `refinement` steps each.
fn common_grid(horizon: f64, cells: &[usize], refinement: usize) -> Result<FineGrid> {
    let finest = *cells
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("cells", "empty ladder"))?;
    let grid = FineGrid::new(UniformPartition::new(horizon, finest)?, refinement)?;
    for &n in cells {
        grid.regroup(n)?;
    }
    Ok(grid)
}

/// `|eps L_{eps,P}(T) - eps^2 ∫ f'(eps W) ds|` for smooth `f`, per partition size, all
/// sizes sharing the same fine path.
pub fn smooth_sanity<F: CertifiedFunction + ?Sized>(
    f: &F,
    eps: f64,
    horizon: f64,
    cells: &[usize],
    refinement: usize,
    replicas: usize,
    master: u64,
) -> Result<Vec<LadderRow>> {
    if !f.is_differentiable() {
        return Err(Error::Unsupported("smooth sanity needs a differentiable function".into()));
    }
    let grid = common_grid(horizon, cells, refinement)?;
    let seed = suite_seed(master, SMOOTH_CODE, 0);
    let errors = panel(replicas, |k| -> Result<Vec<f64>> {
        let path = sample_brownian(grid, seed, k);
        let reference = smooth_reference(&path, f, eps)?.terminal();
        cells
            .iter()
            .map(|&n| {
                let l = discrete_covariation(&path.regroup(n)?, f, eps).terminal();
                Ok((eps * l - reference).abs())
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ladder(cells, &errors))
}

/// Refinement behaviour of the three estimators of `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub seed: u64,
    /// `sup_i |L_rep - (-S - hat S)|(s_i)` as the fine step shrinks (`level` = `m`).
    pub representation: Vec<LadderRow>,
    /// `|L_{eps,P}(T) - (-S - hat S)(T)|` as the coarse partition grows on a fixed
    /// fine path (`level` = `n`).
    pub partition: Vec<LadderRow>,
    /// `|L_rep(T) - L_{eps,P}(T)|` for a constant function (`level` = `m`).
    pub constant: Vec<LadderRow>,
}

impl RefinementReport {
    pub fn passes(&self) -> bool {
        strictly_decreasing(&self.representation)
            && strictly_decreasing(&self.partition)
            && strictly_decreasing(&self.constant)
    }
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs the three refinement ladders on one panel.
///
/// The fine path has `cells[last]` cells of `refinement` steps; the representation
/// ladders observe it at `refinement / factor` steps per cell of `cells[0]`-cell
/// partitions, for every factor in `factors` (descending).
#[allow(clippy::too_many_arguments)]
pub fn refinement_suite(
    f: &TestFunction,
    eps: f64,
    horizon: f64,
    cells: &[usize],
    refinement: usize,
    factors: &[usize],
    replicas: usize,
    master: u64,
) -> Result<RefinementReport> {
    let grid = common_grid(horizon, cells, refinement)?;
    let base = cells[0];
    let constant = TestFunction::constant(1.0)?;
    let seed = suite_seed(master, REFINEMENT_CODE, 0);
    let rows = panel(replicas, |k| -> Result<[Vec<f64>; 3]> {
        let fine = sample_brownian(grid, seed, k);
        let pair = ito_pair_covariation(&fine, f, eps);
        let partition = cells
            .iter()
            .map(|&n| {
                let p = fine.regroup(n)?;
                Ok((discrete_covariation(&p, f, eps).terminal() - pair.terminal()).abs())
            })
            .collect::<Result<Vec<_>>>()?;
        let coarse = fine.regroup(base)?;
        let mut representation = Vec::new();
        let mut constant_gap = Vec::new();
        for &factor in factors {
            let p: SamplePath = coarse.coarsen(factor)?;
            let beta = beta_from_path(&p)?;
            let rep = representation_l(&p, f, eps, &beta)?;
            representation.push(sup_gap(&rep.values, &ito_pair_covariation(&p, f, eps).values));
            let rep_c = representation_l(&p, &constant, eps, &beta)?.terminal();
            let disc_c = discrete_covariation(&p, &constant, eps).terminal();
            constant_gap.push((rep_c - disc_c).abs());
        }
        Ok([representation, partition, constant_gap])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let per = |i: usize| rows.iter().map(|r| r[i].clone()).collect::<Vec<_>>();
    let ms: Vec<usize> = factors.iter().map(|f| refinement * grid.coarse().cells() / base / f).collect();
    Ok(RefinementReport {
        seed,
        representation: ladder(&ms, &per(0)),
        partition: ladder(cells, &per(1)),
        constant: ladder(&ms, &per(2)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_panel_is_exact() {
        let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        let rows = identity_panel(&f, 0.1, 1.0, &[8, 64], 4, 20, 3).unwrap();
        for r in &rows {
            assert!(r.covariation_error <= 1e-12);
            assert!(r.reorder_error <= 1e-12);
        }
    }

    #[test]
    fn smooth_sanity_requires_derivative() {
        let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        assert!(matches!(
            smooth_sanity(&f, 0.1, 1.0, &[4, 8], 4, 5, 1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn ladder_predicates() {
        let r = |v: &[f64]| -> Vec<LadderRow> {
            v.iter().enumerate().map(|(i, &m)| LadderRow { level: i, median: m }).collect()
        };
        assert!(strictly_decreasing(&r(&[3.0, 2.0, 1.0])));
        assert!(!strictly_decreasing(&r(&[3.0, 3.0, 1.0])));
        assert!(nonincreasing(&r(&[3.0, 3.0, 1.0])));
    }

    #[test]
    fn constant_gap_is_deterministic() {
        // For constant f the gap is |W(T)| h / T, so halving h halves every path's gap.
        let f = TestFunction::lipschitz_clip(1.0, 1.0).unwrap();
        let report = refinement_suite(&f, 0.3, 1.0, &[4, 16], 16, &[4, 2, 1], 30, 9).unwrap();
        let c = &report.constant;
        assert_eq!(c.iter().map(|r| r.level).collect::<Vec<_>>(), vec![16, 32, 64]);
        assert!((c[0].median / c[1].median - 2.0).abs() < 1e-9);
        assert!((c[1].median / c[2].median - 2.0).abs() < 1e-9);
    }
}
