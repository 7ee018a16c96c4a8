//! Closed-form tail bounds and the `eps`-schedules that couple the partition to the
//! noise level.
//!
//! The constants in the asymptotic statements are existential. Where the proof
//! gives one explicitly it is used (the Lévy bound counts `n = T/delta_eps` cells, so
//! its constant is `T sqrt(8/pi)`); everything else is a caller-supplied prefactor.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_positive, Error, Result};
use crate::paths::UniformPartition;
use crate::testfuncs::{parse_spec, take_param, CertifiedFunction};

/// `q_eps = 2 sqrt(delta_eps |log delta_eps|)`, defined for `delta_eps` in `(0, 1)`.
pub fn q_eps(delta_eps: f64) -> Result<f64> {
    if !(delta_eps > 0.0 && delta_eps < 1.0) {
        return Err(Error::invalid(
            "delta_eps",
            format!("must lie in (0, 1), got {delta_eps}"),
        ));
    }
    Ok(2.0 * (delta_eps * delta_eps.ln().abs()).sqrt())
}

/// Tail bound for a continuous martingale with `<M>(T) <= r`:
/// `P{sup |M| > delta} < sqrt(8r / (pi delta^2)) exp(-delta^2 / 2r)`.
pub fn martingale_tail_bound(r: f64, delta: f64) -> Result<f64> {
    ensure_positive("r", r)?;
    ensure_positive("delta", delta)?;
    Ok((8.0 * r / (PI * delta * delta)).sqrt() * (-delta * delta / (2.0 * r)).exp())
}

/// Union bound over `T/delta_eps` cells for the partition modulus of Brownian motion:
/// `(T/delta_eps) (1/delta) sqrt(8 delta_eps/pi) exp(-delta^2 / 2 delta_eps)`.
pub fn levy_tail_bound(delta: f64, delta_eps: f64, horizon: f64) -> Result<f64> {
    ensure_positive("delta", delta)?;
    ensure_positive("horizon", horizon)?;
    if !(delta_eps > 0.0 && delta_eps < 1.0) {
        return Err(Error::invalid(
            "delta_eps",
            format!("must lie in (0, 1), got {delta_eps}"),
        ));
    }
    Ok((horizon / delta_eps)
        * (8.0 * delta_eps / PI).sqrt()
        * (-delta * delta / (2.0 * delta_eps)).exp()
        / delta)
}

/// Coupling between the noise level `eps` and the partition width `delta_eps`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSchedule {
    /// `delta_eps = eps^{2(alpha - mu)/(1 - alpha)}`, with `0 < gamma < mu < alpha < 1`.
    Holder { alpha: f64, mu: f64, gamma: f64 },
    /// `delta_eps = exp(-eps^{-(1 - mu)})`, with `0 < gamma < mu < 1`.
    Lipschitz { mu: f64, gamma: f64 },
    /// Cell counts given per `eps`; `delta_eps = T/n`.
    Explicit { table: Vec<(f64, usize)>, gamma: f64 },
}

impl RateSchedule {
    pub fn holder(alpha: f64, mu: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if !(gamma > 0.0 && gamma < mu && mu < alpha) {
            return Err(Error::invalid(
                "mu",
                format!("need 0 < gamma < mu < alpha, got gamma={gamma}, mu={mu}, alpha={alpha}"),
            ));
        }
        Ok(Self::Holder { alpha, mu, gamma })
    }

    pub fn lipschitz(mu: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < mu && mu < 1.0) {
            return Err(Error::invalid(
                "mu",
                format!("need 0 < gamma < mu < 1, got gamma={gamma}, mu={mu}"),
            ));
        }
        Ok(Self::Lipschitz { mu, gamma })
    }

    pub fn explicit(table: Vec<(f64, usize)>, gamma: f64) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::invalid("table", "empty"));
        }
        if table.iter().any(|&(e, n)| !(e > 0.0 && e < 1.0) || n == 0) {
            return Err(Error::invalid("table", "entries need eps in (0, 1) and n >= 1"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid("gamma", format!("must lie in (0, 1), got {gamma}")));
        }
        Ok(Self::Explicit { table, gamma })
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Holder { gamma, .. } | Self::Lipschitz { gamma, .. } | Self::Explicit { gamma, .. } => {
                gamma
            }
        }
    }

    /// Hölder exponent the schedule is built for (`1` for the Lipschitz case).
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Self::Holder { alpha, .. } => Some(alpha),
            Self::Lipschitz { .. } => Some(1.0),
            Self::Explicit { .. } => None,
        }
    }

    /// Exponent of the polynomial bound `eps^{2(alpha - mu)/(1 - alpha)}`.
    pub fn shape_exponent(&self) -> Option<f64> {
        match *self {
            Self::Holder { alpha, mu, .. } => Some(2.0 * (alpha - mu) / (1.0 - alpha)),
            _ => None,
        }
    }

    /// Schedule value of `delta_eps` before rounding to a whole number of cells.
    pub fn delta_eps(&self, eps: f64, horizon: f64) -> Result<f64> {
        check_eps(eps)?;
        ensure_positive("horizon", horizon)?;
        match self {
            Self::Holder { alpha, mu, .. } => Ok(eps.powf(2.0 * (alpha - mu) / (1.0 - alpha))),
            Self::Lipschitz { mu, .. } => Ok((-eps.powf(-(1.0 - mu))).exp()),
            Self::Explicit { table, .. } => {
                let n = lookup(table, eps)?;
                Ok(horizon / n as f64)
            }
        }
    }

    /// Partition with `n = ceil(T / delta_eps)` cells, so the realized width `T/n`
    /// never exceeds the schedule value.
    pub fn partition(&self, eps: f64, horizon: f64) -> Result<UniformPartition> {
        if let Self::Explicit { table, .. } = self {
            check_eps(eps)?;
            return UniformPartition::new(horizon, lookup(table, eps)?);
        }
        let delta = self.delta_eps(eps, horizon)?;
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::invalid(
                "eps",
                format!("schedule width underflows at eps={eps}"),
            ));
        }
        let cells = (horizon / delta).ceil();
        if !(cells.is_finite() && cells <= 1e9) {
            return Err(Error::invalid(
                "eps",
                format!("schedule needs {cells} cells at eps={eps}"),
            ));
        }
        UniformPartition::new(horizon, (cells as usize).max(1))
    }

    /// `eps`-shape of the tail bound: `eps^{2(alpha-mu)/(1-alpha)}`,
    /// `exp(-eps^{-(1-mu)})`, or `delta_eps` for explicit tables.
    pub fn shape(&self, eps: f64, horizon: f64) -> Result<f64> {
        self.delta_eps(eps, horizon)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("eps", format!("must lie in (0, 1), got {eps}")))
    }
}

fn lookup(table: &[(f64, usize)], eps: f64) -> Result<usize> {
    table
        .iter()
        .find(|(e, _)| (e - eps).abs() <= 1e-12 * e.abs().max(1.0))
        .map(|&(_, n)| n)
        .ok_or_else(|| Error::invalid("eps", format!("{eps} not in explicit schedule")))
}

impl fmt::Display for RateSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Holder { alpha, mu, .. } => write!(f, "holder:alpha={alpha},mu={mu}"),
            Self::Lipschitz { mu, .. } => write!(f, "lipschitz:mu={mu}"),
            Self::Explicit { table, .. } => {
                write!(f, "explicit:")?;
                for (i, (e, n)) in table.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}={n}")?;
                }
                Ok(())
            }
        }
    }
}

impl RateSchedule {
    /// Parses `holder:alpha=..,mu=..`, `lipschitz:mu=..` or `explicit:eps=n,eps=n`.
    pub fn parse(spec: &str, gamma: f64) -> Result<Self> {
        let (name, mut params) = parse_spec(spec)?;
        let p = &mut params;
        let sched = match name {
            "holder" => Self::holder(
                take_param(spec, p, &["alpha"], None)?,
                take_param(spec, p, &["mu"], None)?,
                gamma,
            )?,
            "lipschitz" => Self::lipschitz(take_param(spec, p, &["mu"], None)?, gamma)?,
            "explicit" => {
                let mut table = Vec::new();
                for (key, n) in params.drain(..) {
                    let eps: f64 = key
                        .parse()
                        .map_err(|_| Error::parse(spec, format!("`{key}` is not an eps value")))?;
                    if n.fract() != 0.0 || n < 1.0 {
                        return Err(Error::parse(spec, format!("cell count {n} is not a positive integer")));
                    }
                    table.push((eps, n as usize));
                }
                Self::explicit(table, gamma)?
            }
            other => return Err(Error::parse(spec, format!("unknown schedule `{other}`"))),
        };
        if let Some((key, _)) = params.first() {
            return Err(Error::parse(spec, format!("unexpected parameter `{key}`")));
        }
        Ok(sched)
    }
}

impl FromStr for RateSchedule {
    type Err = Error;

    /// Parses a schedule whose `gamma` is given inline as `gamma=..`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut gamma = None;
        let kept: Vec<&str> = rest
            .split(',')
            .filter(|item| match item.trim().strip_prefix("gamma=") {
                Some(v) => {
                    gamma = v.trim().parse().ok();
                    false
                }
                None => true,
            })
            .collect();
        let gamma = gamma.ok_or_else(|| Error::parse(s, "missing parameter `gamma`"))?;
        Self::parse(&format!("{head}:{}", kept.join(",")), gamma)
    }
}

/// `eta = |log delta_eps| osc_f(eps q_eps) / (q_eps gamma_eps)`.
pub fn eta<F: CertifiedFunction + ?Sized>(
    f: &F,
    delta_eps: f64,
    eps: f64,
    gamma_eps: f64,
) -> Result<f64> {
    ensure_positive("eps", eps)?;
    ensure_positive("gamma_eps", gamma_eps)?;
    let q = q_eps(delta_eps)?;
    Ok(delta_eps.ln().abs() * f.osc_bound(eps * q)? / (q * gamma_eps))
}

/// `eta` at the schedule's realized partition, with `gamma_eps = eps^gamma` unless given.
pub fn eta_condition<F: CertifiedFunction + ?Sized>(
    f: &F,
    schedule: &RateSchedule,
    eps: f64,
    horizon: f64,
    gamma_eps: Option<f64>,
) -> Result<f64> {
    let delta = schedule.partition(eps, horizon)?.delta();
    let gamma_eps = gamma_eps.unwrap_or_else(|| eps.powf(schedule.gamma()));
    eta(f, delta, eps, gamma_eps)
}

/// `prefactor × shape(eps)` for overlaying on empirical tails.
pub fn theorem_bound(schedule: &RateSchedule, eps: f64, horizon: f64, prefactor: f64) -> Result<f64> {
    if !(prefactor >= 0.0 && prefactor.is_finite()) {
        return Err(Error::invalid("prefactor", "must be finite and nonnegative"));
    }
    Ok(prefactor * schedule.shape(eps, horizon)?)
}
