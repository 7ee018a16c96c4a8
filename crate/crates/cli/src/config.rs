//! INI run configuration.
//!
//! ```ini
//! [defaults]            ; inherited by every other section
//! function = holder_abs_pow:alpha=0.5,cap=1
//! schedule = holder:alpha=0.5,mu=0.4
//! gamma = 0.25
//!
//! [tails]               ; any other name is an experiment
//! kind = sup_tail
//! replicas = 2000
//!
//! [verify]              ; identity and refinement suites
//! [bounds]              ; closed-form bound table
//! ```
//!
//! A loaded configuration is rendered back with every key spelled out
//! ([`Config::canonical`]); that text is what the run manifest stores.

use std::fmt::Write as _;
use std::str::FromStr;

use ini::{Ini, Properties};
use qcov_core::bounds::RateSchedule;
use qcov_core::montecarlo::{ExperimentConfig, ExperimentKind};
use qcov_core::{CertifiedFunction, TestFunction};

use crate::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.ini");

const EXPERIMENT_KEYS: &[&str] = &[
    "kind",
    "horizon",
    "function",
    "schedule",
    "gamma",
    "epsilons",
    "threshold",
    "replicas",
    "refinement",
    "seed",
    "cells",
    "delta_eps",
    "threshold_multipliers",
];

const VERIFY_KEYS: &[&str] = &[
    "horizon",
    "function",
    "seed",
    "epsilon",
    "cells",
    "refinement",
    "replicas",
    "tolerance",
    "ladder_cells",
    "ladder_refinement",
    "ladder_factors",
    "ladder_replicas",
    "smooth_function",
    "smooth_epsilon",
    "smooth_cells",
    "smooth_refinement",
    "smooth_replicas",
];

const BOUNDS_KEYS: &[&str] = &[
    "horizon",
    "function",
    "schedule",
    "gamma",
    "epsilons",
    "threshold",
    "prefactor",
];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub horizon: f64,
    pub function: TestFunction,
    pub seed: u64,
    pub epsilon: f64,
    pub cells: Vec<usize>,
    pub refinement: usize,
    pub replicas: usize,
    pub tolerance: f64,
    pub ladder_cells: Vec<usize>,
    pub ladder_refinement: usize,
    pub ladder_factors: Vec<usize>,
    pub ladder_replicas: usize,
    pub smooth_function: TestFunction,
    pub smooth_epsilon: f64,
    pub smooth_cells: Vec<usize>,
    pub smooth_refinement: usize,
    pub smooth_replicas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsConfig {
    pub horizon: f64,
    pub function: TestFunction,
    pub schedule: RateSchedule,
    pub epsilons: Vec<f64>,
    pub threshold: f64,
    pub prefactor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiments: Vec<ExperimentConfig>,
    pub verify: VerifyConfig,
    pub bounds: BoundsConfig,
}

/// Command-line overrides applied on top of every section.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilons: Option<Vec<f64>>,
    pub replicas: Option<usize>,
}

struct Lookup<'a> {
    section: &'a str,
    own: Option<&'a Properties>,
    defaults: Option<&'a Properties>,
    /// Keys taken from `[defaults]`; `None` inherits all of them.
    inherit: Option<&'a [&'a str]>,
}

impl<'a> Lookup<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        let inherited = self.inherit.is_none_or(|keys| keys.contains(&key));
        self.own
            .and_then(|p| p.get(key))
            .or_else(|| self.defaults.filter(|_| inherited).and_then(|p| p.get(key)))
            .map(str::trim)
    }

    fn err(&self, key: &str, reason: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("[{}] {key}: {reason}", self.section))
    }

    fn parse<T: FromStr>(&self, key: &str, fallback: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|e| self.err(key, e)),
            None => Ok(fallback),
        }
    }

    fn list<T: FromStr>(&self, key: &str, fallback: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some(v) => parse_list(v).map_err(|e| self.err(key, e)),
            None => Ok(fallback),
        }
    }

    fn schedule(&self, gamma: f64, fallback: &RateSchedule) -> Result<RateSchedule, CliError> {
        match self.raw("schedule") {
            Some(v) => RateSchedule::parse(v, gamma).map_err(|e| self.err("schedule", e)),
            None => RateSchedule::parse(&fallback.to_string(), gamma).map_err(|e| self.err("gamma", e)),
        }
    }
}

pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

fn check_keys(section: &str, props: &Properties, allowed: &[&str]) -> Result<(), CliError> {
    for (key, _) in props.iter() {
        if !allowed.contains(&key) {
            return Err(CliError::Config(format!("[{section}] unknown key `{key}`")));
        }
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let ini = Ini::load_from_str_noescape(text)
            .map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
        let defaults = ini.section(Some("defaults"));
        if let Some(d) = defaults {
            let mut all: Vec<&str> = EXPERIMENT_KEYS.to_vec();
            all.extend(VERIFY_KEYS);
            all.extend(BOUNDS_KEYS);
            check_keys("defaults", d, &all)?;
        }
        let desk = ExperimentConfig::desk(ExperimentKind::SupTail);

        let mut experiments = Vec::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if !props.is_empty() {
                    return Err(CliError::Config("keys outside any section".into()));
                }
                continue;
            };
            if matches!(name, "defaults" | "verify" | "bounds") {
                continue;
            }
            check_keys(name, props, EXPERIMENT_KEYS)?;
            let l = Lookup { section: name, own: Some(props), defaults, inherit: None };
            let kind: ExperimentKind = match props.get("kind") {
                Some(k) => k.parse().map_err(|e| l.err("kind", e))?,
                None => return Err(l.err("kind", "missing")),
            };
            let gamma = l.parse("gamma", desk.gamma())?;
            let mut cfg = ExperimentConfig {
                name: name.to_string(),
                kind,
                horizon: l.parse("horizon", desk.horizon)?,
                function: l.parse("function", desk.function)?,
                schedule: l.schedule(gamma, &desk.schedule)?,
                epsilons: l.list("epsilons", desk.epsilons.clone())?,
                threshold: l.parse("threshold", desk.threshold)?,
                replicas: l.parse("replicas", desk.replicas)?,
                refinement: l.parse("refinement", desk.refinement)?,
                seed: l.parse("seed", desk.seed)?,
                cells: l.parse("cells", desk.cells)?,
                delta_eps: l.list("delta_eps", desk.delta_eps.clone())?,
                threshold_multipliers: l.list("threshold_multipliers", desk.threshold_multipliers.clone())?,
            };
            if let Some(s) = overrides.seed {
                cfg.seed = s;
            }
            if let Some(e) = &overrides.epsilons {
                cfg.epsilons = e.clone();
            }
            if let Some(r) = overrides.replicas {
                cfg.replicas = r;
            }
            cfg.validate().map_err(|e| CliError::Config(format!("[{name}] {e}")))?;
            experiments.push(cfg);
        }

        let v = Lookup {
            section: "verify",
            own: ini.section(Some("verify")),
            defaults,
            inherit: Some(&["horizon", "function", "seed"]),
        };
        if let Some(p) = v.own {
            check_keys("verify", p, VERIFY_KEYS)?;
        }
        let mut verify = VerifyConfig {
            horizon: v.parse("horizon", 1.0)?,
            function: v.parse("function", desk.function)?,
            seed: v.parse("seed", desk.seed)?,
            epsilon: v.parse("epsilon", 0.1)?,
            cells: v.list("cells", vec![8, 64, 512])?,
            refinement: v.parse("refinement", 64)?,
            replicas: v.parse("replicas", 1000)?,
            tolerance: v.parse("tolerance", 1e-12)?,
            ladder_cells: v.list("ladder_cells", vec![4, 16, 64])?,
            ladder_refinement: v.parse("ladder_refinement", 16)?,
            ladder_factors: v.list("ladder_factors", vec![4, 2, 1])?,
            ladder_replicas: v.parse("ladder_replicas", 200)?,
            smooth_function: v.parse("smooth_function", TestFunction::SmoothSin { frequency: 1.0 })?,
            smooth_epsilon: v.parse("smooth_epsilon", 0.1)?,
            smooth_cells: v.list("smooth_cells", vec![16, 64, 256])?,
            smooth_refinement: v.parse("smooth_refinement", 4)?,
            smooth_replicas: v.parse("smooth_replicas", 500)?,
        };
        if let Some(s) = overrides.seed {
            verify.seed = s;
        }
        if let Some(r) = overrides.replicas {
            verify.replicas = r;
        }
        verify.validate()?;

        let b = Lookup {
            section: "bounds",
            own: ini.section(Some("bounds")),
            defaults,
            inherit: Some(&["horizon", "function", "schedule", "gamma", "epsilons", "threshold"]),
        };
        if let Some(p) = b.own {
            check_keys("bounds", p, BOUNDS_KEYS)?;
        }
        let gamma = b.parse("gamma", desk.gamma())?;
        let mut bounds = BoundsConfig {
            horizon: b.parse("horizon", desk.horizon)?,
            function: b.parse("function", desk.function)?,
            schedule: b.schedule(gamma, &desk.schedule)?,
            epsilons: b.list("epsilons", desk.epsilons.clone())?,
            threshold: b.parse("threshold", desk.threshold)?,
            prefactor: b.parse("prefactor", 1.0)?,
        };
        if let Some(e) = &overrides.epsilons {
            bounds.epsilons = e.clone();
        }
        Ok(Config { experiments, verify, bounds })
    }

    pub fn experiments_of(&self, kind: ExperimentKind) -> impl Iterator<Item = &ExperimentConfig> {
        self.experiments.iter().filter(move |e| e.kind == kind)
    }

    /// Fully expanded configuration text; parsing it yields `self` again.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let ulist = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        for e in &self.experiments {
            let _ = writeln!(out, "[{}]", e.name);
            let _ = writeln!(out, "kind = {}", e.kind);
            let _ = writeln!(out, "horizon = {}", e.horizon);
            let _ = writeln!(out, "function = {}", e.function);
            let _ = writeln!(out, "schedule = {}", e.schedule);
            let _ = writeln!(out, "gamma = {}", e.gamma());
            let _ = writeln!(out, "epsilons = {}", list(&e.epsilons));
            let _ = writeln!(out, "threshold = {}", e.threshold);
            let _ = writeln!(out, "replicas = {}", e.replicas);
            let _ = writeln!(out, "refinement = {}", e.refinement);
            let _ = writeln!(out, "seed = {}", e.seed);
            let _ = writeln!(out, "cells = {}", e.cells);
            let _ = writeln!(out, "delta_eps = {}", list(&e.delta_eps));
            let _ = writeln!(out, "threshold_multipliers = {}", list(&e.threshold_multipliers));
            out.push('\n');
        }
        let v = &self.verify;
        let _ = writeln!(out, "[verify]");
        let _ = writeln!(out, "horizon = {}", v.horizon);
        let _ = writeln!(out, "function = {}", v.function);
        let _ = writeln!(out, "seed = {}", v.seed);
        let _ = writeln!(out, "epsilon = {}", v.epsilon);
        let _ = writeln!(out, "cells = {}", ulist(&v.cells));
        let _ = writeln!(out, "refinement = {}", v.refinement);
        let _ = writeln!(out, "replicas = {}", v.replicas);
        let _ = writeln!(out, "tolerance = {:e}", v.tolerance);
        let _ = writeln!(out, "ladder_cells = {}", ulist(&v.ladder_cells));
        let _ = writeln!(out, "ladder_refinement = {}", v.ladder_refinement);
        let _ = writeln!(out, "ladder_factors = {}", ulist(&v.ladder_factors));
        let _ = writeln!(out, "ladder_replicas = {}", v.ladder_replicas);
        let _ = writeln!(out, "smooth_function = {}", v.smooth_function);
        let _ = writeln!(out, "smooth_epsilon = {}", v.smooth_epsilon);
        let _ = writeln!(out, "smooth_cells = {}", ulist(&v.smooth_cells));
        let _ = writeln!(out, "smooth_refinement = {}", v.smooth_refinement);
        let _ = writeln!(out, "smooth_replicas = {}", v.smooth_replicas);
        out.push('\n');
        let b = &self.bounds;
        let _ = writeln!(out, "[bounds]");
        let _ = writeln!(out, "horizon = {}", b.horizon);
        let _ = writeln!(out, "function = {}", b.function);
        let _ = writeln!(out, "schedule = {}", b.schedule);
        let _ = writeln!(out, "gamma = {}", b.schedule.gamma());
        let _ = writeln!(out, "epsilons = {}", list(&b.epsilons));
        let _ = writeln!(out, "threshold = {}", b.threshold);
        let _ = writeln!(out, "prefactor = {}", b.prefactor);
        out
    }
}

impl VerifyConfig {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Config(format!("[verify] {key}: {why}")));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) || !(self.smooth_epsilon > 0.0 && self.smooth_epsilon < 1.0) {
            return bad("epsilon", "must lie in (0, 1)");
        }
        if self.cells.is_empty() || self.ladder_cells.len() < 2 || self.smooth_cells.len() < 2 {
            return bad("cells", "need a non-empty panel and ladders of at least two sizes");
        }
        if self.ladder_factors.len() < 2 || self.ladder_factors.contains(&0) {
            return bad("ladder_factors", "need at least two positive factors");
        }
        if self.replicas == 0 || self.ladder_replicas == 0 || self.smooth_replicas == 0 {
            return bad("replicas", "must be positive");
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad("tolerance", "must be nonnegative");
        }
        if !self.smooth_function.is_differentiable() {
            return bad("smooth_function", "must be differentiable");
        }
        Ok(())
    }
}
