//! Monte Carlo checks of distributional facts, each against an exact value.

use qcov_core::covariation::{discrete_covariation, ito_fine_forward, residual_forward};
use qcov_core::montecarlo::{beta_diagnostics, ExperimentConfig, ExperimentKind};
use qcov_core::paths::{beta_from_path, sample_brownian};
use qcov_core::stats::{ks_statistic_normal, mean, mean_se, variance_with_se};
use qcov_core::suites::{nonincreasing, refinement_suite, LadderRow};
use qcov_core::{FineGrid, TestFunction, UniformPartition};
use rayon::prelude::*;

fn grid(horizon: f64, n: usize, m: usize) -> FineGrid {
    FineGrid::new(UniformPartition::new(horizon, n).unwrap(), m).unwrap()
}

#[allow(clippy::redundant_closure)]
fn panel<T: Send>(count: u64, work: impl Fn(u64) -> T + Sync) -> Vec<T> {
    (0..count).into_par_iter().map(|k| work(k)).collect()
}

#[test]
fn terminal_variance_matches_horizon() {
    let g = grid(1.7, 4, 8);
    let terminal = panel(100_000, |k| sample_brownian(g, 11, k).terminal());
    let (var, se) = variance_with_se(&terminal);
    assert!((var - 1.7).abs() < 3.0 * se, "{var} ± {se}");
    assert!(mean(&terminal).abs() < 3.0 * mean_se(&terminal));
}

#[test]
fn increments_are_independent_across_cells() {
    let g = grid(1.0, 2, 16);
    let pairs = panel(50_000, |k| {
        let w = sample_brownian(g, 12, k).coarse_values();
        (w[1] - w[0], w[2] - w[1])
    });
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (cov, se) = qcov_core::stats::covariance_with_se(&a, &b);
    assert!(cov.abs() < 3.0 * se, "{cov} ± {se}");
}

#[test]
fn beta_moments() {
    let cfg = ExperimentConfig {
        replicas: 10_000,
        ..ExperimentConfig::desk(ExperimentKind::BetaDiag)
    };
    let report = beta_diagnostics(&cfg).unwrap();
    let g = grid(cfg.horizon, cfg.cells, cfg.refinement);
    let h = g.step();
    for (i, row) in report.rows.iter().enumerate().skip(1) {
        assert!((row.var - row.t).abs() < 3.0 * row.var_se, "{row:?}");
        assert!(row.cov_terminal.abs() < 3.0 * row.cov_se, "{row:?}");
        // E (Δbeta_q)^2 = h - h^2 / (T - t_q) exactly on the grid
        let steps = i * g.fine_cells() / 4;
        let expected: f64 = (0..steps).map(|q| h - h * h / g.remaining(q)).sum();
        assert!((row.qv_mean - expected).abs() < 3.0 * row.qv_se, "{row:?} vs {expected}");
    }
}

#[test]
fn beta_is_gaussian_at_midpoint() {
    let g = grid(1.0, 4, 64);
    let mid = g.fine_cells() / 2;
    let values = panel(10_000, |k| beta_from_path(&sample_brownian(g, 13, k)).unwrap()[mid]);
    let ks = ks_statistic_normal(&values, 0.5f64.sqrt());
    // 1% critical value of the one-sample KS statistic
    assert!(ks < 1.63 / (values.len() as f64).sqrt(), "KS = {ks}");
}

#[test]
fn beta_increments_are_gaussian_and_uncorrelated_with_terminal() {
    let g = grid(1.0, 4, 64);
    let j = 3 * g.fine_cells() / 4;
    let h = g.step();
    let pairs = panel(10_000, |k| {
        let p = sample_brownian(g, 14, k);
        let b = beta_from_path(&p).unwrap();
        (b[j + 1] - b[j], p.terminal())
    });
    let inc: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let term: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ks = ks_statistic_normal(&inc, h.sqrt());
    assert!(ks < 1.63 / 100.0, "KS = {ks}");
    let (cov, se) = qcov_core::stats::covariance_with_se(&inc, &term);
    assert!(cov.abs() < 3.0 * se);
}

#[test]
fn ito_integrals_are_centred() {
    let g = grid(1.0, 8, 16);
    let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
    let eps = 0.3;
    let vals = panel(20_000, |k| {
        let p = sample_brownian(g, 15, k);
        (ito_fine_forward(&p, &f, eps).terminal(), residual_forward(&p, &f, eps).terminal())
    });
    let s: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let m: Vec<f64> = vals.iter().map(|v| v.1).collect();
    assert!(mean(&s).abs() < 3.0 * mean_se(&s));
    assert!(mean(&m).abs() < 3.0 * mean_se(&m));
}

#[test]
fn identity_function_covariation_has_mean_eps_t() {
    // f(x) = x: L_{eps,P}(T) = eps sum (ΔW)^2, whose mean is eps T on any partition.
    let f = TestFunction::lipschitz_clip(1.0, 1e9).unwrap();
    let g = grid(2.0, 16, 1);
    let eps = 0.2;
    let l = panel(20_000, |k| discrete_covariation(&sample_brownian(g, 16, k), &f, eps).terminal());
    assert!((mean(&l) - eps * 2.0).abs() < 3.0 * mean_se(&l));
}

#[test]
fn reconstruction_improves_with_refinement() {
    let cfg = ExperimentConfig {
        replicas: 1000,
        ..ExperimentConfig::desk(ExperimentKind::BetaDiag)
    };
    let report = beta_diagnostics(&cfg).unwrap();
    let rows: Vec<LadderRow> = report
        .reconstruction
        .iter()
        .rev()
        .map(|r| LadderRow { level: r.refinement, median: r.median_max_error })
        .collect();
    assert_eq!(rows.iter().map(|r| r.level).collect::<Vec<_>>(), vec![16, 32, 64]);
    assert!(nonincreasing(&rows), "{rows:?}");
}

#[test]
fn refinement_ladders_shrink() {
    for f in [
        TestFunction::holder_abs_pow(0.5, 1.0).unwrap(),
        TestFunction::lipschitz_clip(2.0, 1.0).unwrap(),
        TestFunction::smooth_sin(3.0).unwrap(),
    ] {
        let report = refinement_suite(&f, 0.2, 1.0, &[4, 16, 64], 16, &[4, 2, 1], 200, 17).unwrap();
        assert!(report.passes(), "{f}: {report:?}");
    }
}
