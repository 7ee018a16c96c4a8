//! One function per subcommand. Each returns the files it produced and the list of
//! failed assertions; writing and exit codes are handled by the caller.

use qcov_core::bounds::{eta, levy_tail_bound, martingale_tail_bound, q_eps, theorem_bound};
use qcov_core::montecarlo::{
    beta_diagnostics, consistency, estimate_levy_tail, estimate_sup_normalized, estimate_sup_tail,
    fit_rate, nonincreasing_up_to_ci, verify_martingale_bound, ExperimentConfig, ExperimentKind,
    TailEstimate,
};
use qcov_core::suites::{identity_panel, refinement_suite, smooth_sanity, LadderRow};
use qcov_core::{CertifiedFunction, Error};

use crate::config::Config;
use crate::output::{num, Table};
use crate::svg::{tails_plot, Series};
use crate::CliError;

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl Outcome {
    fn table(&mut self, table: Table) -> Result<(), CliError> {
        let name = table.file_name();
        self.files.push((name, table.into_bytes()?));
        Ok(())
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn merge(&mut self, other: Outcome) {
        self.files.extend(other.files);
        self.failures.extend(other.failures);
        self.notes.extend(other.notes);
    }
}

fn flag(b: bool) -> String {
    b.to_string()
}

fn selected(cfg: &Config, kind: ExperimentKind) -> Result<Vec<&ExperimentConfig>, CliError> {
    let found: Vec<_> = cfg.experiments_of(kind).collect();
    if found.is_empty() {
        return Err(CliError::Config(format!("no experiment of kind `{kind}` in config")));
    }
    Ok(found)
}

fn ladder_rows(
    table: &mut Table,
    out: &mut Outcome,
    suite: &str,
    rows: &[LadderRow],
    seed: u64,
) -> Result<(), CliError> {
    for (i, r) in rows.iter().enumerate() {
        let prev = if i == 0 { f64::NAN } else { rows[i - 1].median };
        let pass = i == 0 || r.median < prev;
        out.check(pass, || {
            format!(
                "{suite}: median {} at level {} does not fall below {} (seed {seed})",
                r.median, r.level, prev
            )
        });
        table.row([
            suite.to_string(),
            r.level.to_string(),
            "median".into(),
            num(r.median),
            num(prev),
            flag(pass),
            seed.to_string(),
            String::new(),
            String::new(),
        ])?;
    }
    Ok(())
}

/// Exact discrete identities on a random panel, then the refinement ladders.
pub fn verify(cfg: &Config) -> Result<Outcome, CliError> {
    let v = &cfg.verify;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "verify",
        &["suite", "level", "metric", "value", "limit", "pass", "seed", "replica", "node"],
    )?;
    let rows = identity_panel(&v.function, v.epsilon, v.horizon, &v.cells, v.refinement, v.replicas, v.seed)?;
    for r in &rows {
        for (metric, value, replica, node) in [
            ("covariation", r.covariation_error, r.covariation_replica, r.covariation_node),
            ("reorder", r.reorder_error, r.reorder_replica, r.reorder_node),
        ] {
            let pass = value < v.tolerance;
            out.check(pass, || {
                format!(
                    "identity {metric}: relative error {value:e} >= {:e} at n={} (seed {}, replica {replica}, node {node})",
                    v.tolerance, r.cells, r.seed
                )
            });
            table.row([
                "identity".to_string(),
                r.cells.to_string(),
                metric.into(),
                num(value),
                num(v.tolerance),
                flag(pass),
                r.seed.to_string(),
                replica.to_string(),
                node.to_string(),
            ])?;
        }
    }
    let ladders = refinement_suite(
        &v.function,
        v.epsilon,
        v.horizon,
        &v.ladder_cells,
        v.ladder_refinement,
        &v.ladder_factors,
        v.ladder_replicas,
        v.seed,
    )?;
    ladder_rows(&mut table, &mut out, "representation", &ladders.representation, ladders.seed)?;
    ladder_rows(&mut table, &mut out, "partition", &ladders.partition, ladders.seed)?;
    ladder_rows(&mut table, &mut out, "constant", &ladders.constant, ladders.seed)?;
    let smooth = smooth_sanity(
        &v.smooth_function,
        v.smooth_epsilon,
        v.horizon,
        &v.smooth_cells,
        v.smooth_refinement,
        v.smooth_replicas,
        v.seed,
    )?;
    ladder_rows(&mut table, &mut out, "smooth", &smooth, v.seed)?;
    out.table(table)?;
    Ok(out)
}

pub fn tails(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut table = Table::new(
        "tails",
        &[
            "experiment", "epsilon", "delta_eps", "n_eps", "q_eps", "threshold", "gamma", "N",
            "count", "p_hat", "ci_low", "ci_high", "seed",
        ],
    )?;
    let mut fits = Table::new("ratefit", &["slope", "intercept", "r_squared", "npoints"])?;
    let mut plotted: Vec<(&ExperimentConfig, Vec<TailEstimate>)> = Vec::new();
    for exp in selected(cfg, ExperimentKind::SupTail)? {
        let est = estimate_sup_tail(exp)?;
        for e in &est {
            table.row([
                exp.name.clone(),
                num(e.epsilon),
                num(e.delta_eps),
                e.n_eps.to_string(),
                num(e.q_eps),
                num(e.threshold),
                num(e.gamma),
                e.replicas.to_string(),
                e.count.to_string(),
                num(e.p_hat),
                num(e.ci_low),
                num(e.ci_high),
                e.seed.to_string(),
            ])?;
        }
        out.check(nonincreasing_up_to_ci(&est), || {
            format!("{}: p_hat rises beyond interval overlap as eps decreases", exp.name)
        });
        match fit_rate(&est) {
            Ok(fit) => {
                fits.row([num(fit.slope), num(fit.intercept), num(fit.r_squared), fit.npoints.to_string()])?;
                out.check(fit.slope >= 0.0, || format!("{}: fitted slope {} is negative", exp.name, fit.slope));
                let reference = exp.schedule.shape_exponent();
                out.notes.push(match reference {
                    Some(r) => format!("{}: fitted slope {:.3} (bound exponent {r})", exp.name, fit.slope),
                    None => format!("{}: fitted slope {:.3}", exp.name, fit.slope),
                });
            }
            Err(Error::InsufficientData { usable, required }) => {
                fits.row(["NaN", "NaN", "NaN", &usable.to_string()])?;
                out.notes.push(format!(
                    "{}: insufficient data for a rate fit ({usable} usable points, need {required})",
                    exp.name
                ));
            }
            Err(e) => return Err(e.into()),
        }
        plotted.push((exp, est));
    }
    let series = plotted
        .iter()
        .map(|(exp, est)| {
            let shape = est
                .iter()
                .map(|e| exp.schedule.shape(e.epsilon, exp.horizon).unwrap_or(f64::NAN))
                .collect();
            Series { name: &exp.name, estimates: est, shape }
        })
        .collect::<Vec<_>>();
    let svg = tails_plot(&series);
    out.table(table)?;
    out.table(fits)?;
    out.files.push(("tails.svg".into(), svg.into_bytes()));
    Ok(out)
}

pub fn levy(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut table = Table::new(
        "levy",
        &[
            "experiment", "target_delta_eps", "delta_eps", "n_eps", "refinement", "q_eps", "N",
            "count", "p_hat", "ci_low", "ci_high", "bound", "dominated", "p_hat_coarse",
            "coarse_refinement", "k2", "seed",
        ],
    )?;
    for exp in selected(cfg, ExperimentKind::LevyTail)? {
        let report = estimate_levy_tail(exp)?;
        for r in &report.rows {
            out.check(r.dominated(), || {
                format!(
                    "{}: P(modulus > q) = {} exceeds bound {} + 3 SE at delta_eps={}",
                    exp.name, r.tail.p_hat, r.bound, r.delta_eps
                )
            });
            table.row([
                exp.name.clone(),
                num(r.target_delta_eps),
                num(r.delta_eps),
                r.n_eps.to_string(),
                exp.refinement.to_string(),
                num(r.q_eps),
                r.tail.trials.to_string(),
                r.tail.count.to_string(),
                num(r.tail.p_hat),
                num(r.tail.ci_low),
                num(r.tail.ci_high),
                num(r.bound),
                flag(r.dominated()),
                num(r.p_hat_coarse),
                r.coarse_refinement.to_string(),
                num(report.k2),
                r.seed.to_string(),
            ])?;
        }
        out.notes.push(format!("{}: fitted K2 = {:.4}", exp.name, report.k2));
    }
    out.table(table)?;
    Ok(out)
}

pub fn beta(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut table = Table::new(
        "beta",
        &["experiment", "t", "var", "var_se", "cov_terminal", "cov_se", "qv_mean", "qv_se", "N", "seed"],
    )?;
    let mut recon = Table::new(
        "beta_reconstruction",
        &["experiment", "refinement", "median_max_error", "q25", "q75", "panel"],
    )?;
    for exp in selected(cfg, ExperimentKind::BetaDiag)? {
        let report = beta_diagnostics(exp)?;
        for r in &report.rows {
            if r.t > 0.0 {
                out.check((r.var - r.t).abs() <= 3.0 * r.var_se, || {
                    format!("{}: var beta({}) = {} not within 3 SE ({})", exp.name, r.t, r.var, r.var_se)
                });
                out.check(r.cov_terminal.abs() <= 3.0 * r.cov_se, || {
                    format!("{}: cov(beta({}), W(T)) = {} not within 3 SE ({})", exp.name, r.t, r.cov_terminal, r.cov_se)
                });
            }
            table.row([
                exp.name.clone(),
                num(r.t),
                num(r.var),
                num(r.var_se),
                num(r.cov_terminal),
                num(r.cov_se),
                num(r.qv_mean),
                num(r.qv_se),
                report.replicas.to_string(),
                report.seed.to_string(),
            ])?;
        }
        let panel = qcov_core::montecarlo::RECONSTRUCTION_PANEL.min(exp.replicas);
        for r in &report.reconstruction {
            recon.row([
                exp.name.clone(),
                r.refinement.to_string(),
                num(r.median_max_error),
                num(r.q25),
                num(r.q75),
                panel.to_string(),
            ])?;
        }
        // rows run from the finest grid to the coarsest
        let medians_fall = report
            .reconstruction
            .windows(2)
            .all(|w| w[0].median_max_error <= w[1].median_max_error);
        out.check(medians_fall, || format!("{}: reconstruction error grows with refinement", exp.name));
    }
    out.table(table)?;
    out.table(recon)?;
    Ok(out)
}

pub fn mart(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut table = Table::new(
        "mart",
        &["experiment", "epsilon", "delta", "r", "N", "count", "p_hat", "ci_low", "ci_high", "bound", "dominated", "seed"],
    )?;
    for exp in selected(cfg, ExperimentKind::MartingaleBound)? {
        for r in verify_martingale_bound(exp)? {
            out.check(r.dominated(), || {
                format!(
                    "{}: P(sup|S| > {}) = {} exceeds bound {} + 3 SE at eps={}",
                    exp.name, r.delta, r.tail.p_hat, r.bound, r.epsilon
                )
            });
            table.row([
                exp.name.clone(),
                num(r.epsilon),
                num(r.delta),
                num(r.r),
                r.tail.trials.to_string(),
                r.tail.count.to_string(),
                num(r.tail.p_hat),
                num(r.tail.ci_low),
                num(r.tail.ci_high),
                num(r.bound),
                flag(r.dominated()),
                r.seed.to_string(),
            ])?;
        }
    }
    out.table(table)?;
    Ok(out)
}

pub fn consistency_table(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut table = Table::new(
        "consistency",
        &[
            "experiment", "epsilon", "n_eps", "N", "forward_residual_error", "backward_route_error",
            "gamma_bound_holds", "gamma_ratio_max", "drift_bound_holds", "drift_ratio_max", "seed",
        ],
    )?;
    for exp in selected(cfg, ExperimentKind::Consistency)? {
        for r in consistency(exp)? {
            out.check(r.forward_residual_error <= 1e-10 && r.backward_route_error <= 1e-10, || {
                format!("{}: residual identities off by {:e} / {:e} at eps={}", exp.name, r.forward_residual_error, r.backward_route_error, r.epsilon)
            });
            out.check(r.gamma_bound_holds == r.replicas && r.drift_bound_holds == r.replicas, || {
                format!(
                    "{}: per-path bounds hold on {}/{} (Gamma) and {}/{} (A) paths at eps={}",
                    exp.name, r.gamma_bound_holds, r.replicas, r.drift_bound_holds, r.replicas, r.epsilon
                )
            });
            table.row([
                exp.name.clone(),
                num(r.epsilon),
                r.n_eps.to_string(),
                r.replicas.to_string(),
                num(r.forward_residual_error),
                num(r.backward_route_error),
                r.gamma_bound_holds.to_string(),
                num(r.gamma_ratio_max),
                r.drift_bound_holds.to_string(),
                num(r.drift_ratio_max),
                r.seed.to_string(),
            ])?;
        }
    }
    out.table(table)?;
    Ok(out)
}

pub fn supnorm(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut table = Table::new(
        "supnorm",
        &["experiment", "statistic", "level", "value", "count", "N", "ci_low", "ci_high", "seed"],
    )?;
    for exp in selected(cfg, ExperimentKind::SupNormalized)? {
        let r = estimate_sup_normalized(exp)?;
        let n = r.replicas.to_string();
        for (p, q) in r.probabilities.iter().zip(&r.quantiles) {
            table.row([exp.name.clone(), "quantile".into(), num(*p), num(*q), String::new(), n.clone(), String::new(), String::new(), r.seed.to_string()])?;
        }
        for (z, t) in &r.tails {
            table.row([
                exp.name.clone(),
                "tail".into(),
                num(*z),
                num(t.p_hat),
                t.count.to_string(),
                n.clone(),
                num(t.ci_low),
                num(t.ci_high),
                r.seed.to_string(),
            ])?;
        }
        if let Some(fit) = r.tail_fit {
            out.check(fit.slope < 0.0, || format!("{}: tail does not decay in zeta^2 (slope {})", exp.name, fit.slope));
            table.row([exp.name.clone(), "tail_slope".into(), "NaN".into(), num(fit.slope), String::new(), n.clone(), String::new(), String::new(), r.seed.to_string()])?;
        }
    }
    out.table(table)?;
    Ok(out)
}

/// Closed-form bound table over the configured `eps` list.
///
/// `delta_eps` is the schedule value; the other columns use the realized width
/// `T/n`. The martingale column evaluates the bound at `r = T osc_f(eps q_eps)^2`
/// and `delta = threshold eps^gamma`.
pub fn bounds(cfg: &Config) -> Result<Outcome, CliError> {
    let b = &cfg.bounds;
    if b.epsilons.is_empty() {
        return Err(CliError::Config("[bounds] epsilons: empty list".into()));
    }
    let gamma = b.schedule.gamma();
    let mut table = Table::new(
        "bounds",
        &["epsilon", "delta_eps", "n_eps", "q_eps", "eta", "martingale_bound", "levy_bound", "theorem_shape"],
    )?;
    for &eps in &b.epsilons {
        let target = b.schedule.delta_eps(eps, b.horizon)?;
        let partition = b.schedule.partition(eps, b.horizon)?;
        let delta = partition.delta();
        let q = q_eps(delta).map_err(|_| {
            CliError::Config(format!(
                "[bounds] eps={eps}: realized delta_eps = {delta} is not below 1 after rounding to {} cells",
                partition.cells()
            ))
        })?;
        let gamma_eps = eps.powf(gamma);
        let osc = b.function.osc_bound(eps * q)?;
        let r = b.horizon * osc * osc;
        let mart = if r > 0.0 {
            martingale_tail_bound(r, b.threshold * gamma_eps)?
        } else {
            0.0
        };
        table.row([
            num(eps),
            num(target),
            partition.cells().to_string(),
            num(q),
            num(eta(&b.function, delta, eps, gamma_eps)?),
            num(mart),
            num(levy_tail_bound(q, delta, b.horizon)?),
            num(theorem_bound(&b.schedule, eps, b.horizon, b.prefactor)?),
        ])?;
    }
    let mut out = Outcome::default();
    out.table(table)?;
    Ok(out)
}

type Runner = fn(&Config) -> Result<Outcome, CliError>;

/// Every suite and every experiment in the configuration.
pub fn report(cfg: &Config) -> Result<Outcome, CliError> {
    let mut out = verify(cfg)?;
    let runs: [(ExperimentKind, Runner); 6] = [
        (ExperimentKind::SupTail, tails),
        (ExperimentKind::LevyTail, levy),
        (ExperimentKind::BetaDiag, beta),
        (ExperimentKind::MartingaleBound, mart),
        (ExperimentKind::Consistency, consistency_table),
        (ExperimentKind::SupNormalized, supnorm),
    ];
    for (kind, run) in runs {
        if cfg.experiments_of(kind).next().is_some() {
            out.merge(run(cfg)?);
        }
    }
    out.merge(bounds(cfg)?);
    Ok(out)
}
