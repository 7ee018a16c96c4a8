//! Bounded test functions with certified moduli of continuity.
//!
//! Every function used by the estimators implements [`CertifiedFunction`]: besides
//! evaluation it reports an upper bound on
//!
//! ```text
//! osc_f(d) = sup_{|x - y| < d} |f(x) - f(y)|
//! ```
//!
//! of the Hölder form `min(C_f d^alpha, 2 cap)`. The catalog [`TestFunction`] is closed;
//! other functions enter through the trait.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_positive, Error, Result};

pub trait CertifiedFunction: Send + Sync {
    fn eval(&self, x: f64) -> f64;

    /// Upper bound on `osc_f(d)`; `d` must be positive.
    fn osc_bound(&self, d: f64) -> Result<f64>;

    /// Analytic derivative, for differentiable functions only.
    fn derivative(&self, x: f64) -> Result<f64>;

    /// `sup |f|`.
    fn cap(&self) -> f64;

    fn holder_exponent(&self) -> f64;

    fn holder_constant(&self) -> f64;

    fn is_differentiable(&self) -> bool;
}

/// `osc_bound` extended by `0` at `d = 0`, for moduli measured on constant paths.
pub(crate) fn osc_bound_or_zero<F: CertifiedFunction + ?Sized>(f: &F, d: f64) -> Result<f64> {
    if d == 0.0 {
        Ok(0.0)
    } else {
        f.osc_bound(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `min(|x|^alpha, cap)` with `alpha` in `(0, 1)`.
    HolderAbsPow { alpha: f64, cap: f64 },
    /// `clamp(slope·x, -cap, cap)`.
    LipschitzClip { slope: f64, cap: f64 },
    /// `sin(frequency·x)`.
    SmoothSin { frequency: f64 },
    Constant { c: f64 },
}

impl TestFunction {
    pub fn holder_abs_pow(alpha: f64, cap: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        ensure_positive("cap", cap)?;
        Ok(Self::HolderAbsPow { alpha, cap })
    }

    pub fn lipschitz_clip(slope: f64, cap: f64) -> Result<Self> {
        ensure_positive("slope", slope)?;
        ensure_positive("cap", cap)?;
        Ok(Self::LipschitzClip { slope, cap })
    }

    pub fn smooth_sin(frequency: f64) -> Result<Self> {
        ensure_positive("frequency", frequency)?;
        Ok(Self::SmoothSin { frequency })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::invalid("c", "must be finite"));
        }
        Ok(Self::Constant { c })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::HolderAbsPow { .. } => "holder_abs_pow",
            Self::LipschitzClip { .. } => "lipschitz_clip",
            Self::SmoothSin { .. } => "smooth_sin",
            Self::Constant { .. } => "constant",
        }
    }
}

impl CertifiedFunction for TestFunction {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::HolderAbsPow { alpha, cap } => x.abs().powf(alpha).min(cap),
            Self::LipschitzClip { slope, cap } => (slope * x).clamp(-cap, cap),
            Self::SmoothSin { frequency } => (frequency * x).sin(),
            Self::Constant { c } => c,
        }
    }

    fn osc_bound(&self, d: f64) -> Result<f64> {
        ensure_positive("d", d)?;
        Ok(match *self {
            Self::HolderAbsPow { alpha, cap } => d.powf(alpha).min(2.0 * cap),
            Self::LipschitzClip { slope, cap } => (slope * d).min(2.0 * cap),
            Self::SmoothSin { frequency } => (frequency * d).min(2.0),
            Self::Constant { .. } => 0.0,
        })
    }

    fn derivative(&self, x: f64) -> Result<f64> {
        match *self {
            Self::SmoothSin { frequency } => Ok(frequency * (frequency * x).cos()),
            Self::Constant { .. } => Ok(0.0),
            _ => Err(Error::Unsupported(format!(
                "{} is not differentiable",
                self.kind_name()
            ))),
        }
    }

    fn cap(&self) -> f64 {
        match *self {
            Self::HolderAbsPow { cap, .. } | Self::LipschitzClip { cap, .. } => cap,
            Self::SmoothSin { .. } => 1.0,
            Self::Constant { c } => c.abs(),
        }
    }

    fn holder_exponent(&self) -> f64 {
        match *self {
            Self::HolderAbsPow { alpha, .. } => alpha,
            _ => 1.0,
        }
    }

    fn holder_constant(&self) -> f64 {
        match *self {
            Self::HolderAbsPow { .. } => 1.0,
            Self::LipschitzClip { slope, .. } => slope,
            Self::SmoothSin { frequency } => frequency,
            Self::Constant { .. } => 0.0,
        }
    }

    fn is_differentiable(&self) -> bool {
        matches!(self, Self::SmoothSin { .. } | Self::Constant { .. })
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::HolderAbsPow { alpha, cap } => {
                write!(f, "holder_abs_pow:alpha={alpha},cap={cap}")
            }
            Self::LipschitzClip { slope, cap } => {
                write!(f, "lipschitz_clip:slope={slope},cap={cap}")
            }
            Self::SmoothSin { frequency } => write!(f, "smooth_sin:frequency={frequency}"),
            Self::Constant { c } => write!(f, "constant:c={c}"),
        }
    }
}

/// Splits `name:key=value,key=value` into the name and its parameters.
pub(crate) fn parse_spec(input: &str) -> Result<(&str, Vec<(&str, f64)>)> {
    let (name, rest) = match input.split_once(':') {
        Some((name, rest)) => (name.trim(), rest.trim()),
        None => (input.trim(), ""),
    };
    let mut params = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::parse(input, format!("expected key=value, got `{item}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(input, format!("`{value}` is not a number")))?;
        params.push((key.trim(), value));
    }
    Ok((name, params))
}

pub(crate) fn take_param(
    input: &str,
    params: &mut Vec<(&str, f64)>,
    keys: &[&str],
    default: Option<f64>,
) -> Result<f64> {
    if let Some(pos) = params.iter().position(|(k, _)| keys.contains(k)) {
        return Ok(params.remove(pos).1);
    }
    default.ok_or_else(|| Error::parse(input, format!("missing parameter `{}`", keys[0])))
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, mut params) = parse_spec(s)?;
        let p = &mut params;
        let f = match name {
            "holder_abs_pow" => Self::holder_abs_pow(
                take_param(s, p, &["alpha"], None)?,
                take_param(s, p, &["cap"], Some(1.0))?,
            )?,
            "lipschitz_clip" => Self::lipschitz_clip(
                take_param(s, p, &["slope"], Some(1.0))?,
                take_param(s, p, &["cap"], Some(1.0))?,
            )?,
            "smooth_sin" => Self::smooth_sin(take_param(s, p, &["frequency", "freq"], Some(1.0))?)?,
            "constant" => Self::constant(take_param(s, p, &["c"], None)?)?,
            other => return Err(Error::parse(s, format!("unknown function `{other}`"))),
        };
        if let Some((key, _)) = params.first() {
            return Err(Error::parse(s, format!("unexpected parameter `{key}`")));
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        assert_eq!(TestFunction::constant(2.0).unwrap().eval(-13.5), 2.0);
        let h = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        assert_eq!(h.eval(0.25), 0.5);
        assert_eq!(h.eval(-9.0), 1.0);
        assert_eq!(TestFunction::smooth_sin(1.0).unwrap().eval(0.0), 0.0);
        let l = TestFunction::lipschitz_clip(2.0, 1.0).unwrap();
        assert_eq!(l.eval(0.25), 0.5);
        assert_eq!(l.eval(-3.0), -1.0);
    }

    #[test]
    fn osc_bound_examples() {
        let c = TestFunction::constant(3.0).unwrap();
        for d in [1e-6, 0.5, 10.0] {
            assert_eq!(c.osc_bound(d).unwrap(), 0.0);
        }
        let h = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        assert!((h.osc_bound(0.04).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(h.osc_bound(100.0).unwrap(), 2.0);
        let l = TestFunction::lipschitz_clip(3.0, 0.5).unwrap();
        assert_eq!(l.osc_bound(0.1).unwrap(), 3.0 * 0.1);
        assert_eq!(l.osc_bound(1.0).unwrap(), 1.0);
        assert!(h.osc_bound(0.0).is_err());
        assert!(h.osc_bound(-1.0).is_err());
    }

    #[test]
    fn derivative_examples() {
        let s1 = TestFunction::smooth_sin(1.0).unwrap();
        assert_eq!(s1.derivative(0.0).unwrap(), 1.0);
        assert_eq!(TestFunction::constant(4.0).unwrap().derivative(1.0).unwrap(), 0.0);
        let s2 = TestFunction::smooth_sin(2.0).unwrap();
        // centered finite-difference oracle
        let x = 0.3;
        let step = 1e-5;
        let fd = (s2.eval(x + step) - s2.eval(x - step)) / (2.0 * step);
        let analytic = s2.derivative(x).unwrap();
        assert!(((analytic - fd) / fd).abs() < 1e-6);
        assert!((analytic - 1.650_671_229_819_356_6).abs() < 1e-14);
        let h = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        assert!(matches!(h.derivative(0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constructors_validate() {
        assert!(TestFunction::holder_abs_pow(1.0, 1.0).is_err());
        assert!(TestFunction::holder_abs_pow(0.0, 1.0).is_err());
        assert!(TestFunction::holder_abs_pow(0.5, 0.0).is_err());
        assert!(TestFunction::lipschitz_clip(-1.0, 1.0).is_err());
        assert!(TestFunction::smooth_sin(0.0).is_err());
        assert!(TestFunction::constant(f64::INFINITY).is_err());
    }

    #[test]
    fn parses_specs() {
        let f: TestFunction = "holder_abs_pow:alpha=0.5,cap=1".parse().unwrap();
        assert_eq!(f, TestFunction::HolderAbsPow { alpha: 0.5, cap: 1.0 });
        let f: TestFunction = "smooth_sin:freq=2".parse().unwrap();
        assert_eq!(f, TestFunction::SmoothSin { frequency: 2.0 });
        let f: TestFunction = "constant:c=-1.5".parse().unwrap();
        assert_eq!(f.to_string(), "constant:c=-1.5");
        assert!("holder_abs_pow:alpha=0.5,beta=1".parse::<TestFunction>().is_err());
        assert!("bump:a=1".parse::<TestFunction>().is_err());
        assert!("holder_abs_pow:cap=1".parse::<TestFunction>().is_err());
        assert!("holder_abs_pow:alpha=x".parse::<TestFunction>().is_err());
    }

    fn any_function() -> impl Strategy<Value = TestFunction> {
        prop_oneof![
            (0.05f64..0.95, 0.1f64..5.0).prop_map(|(a, c)| TestFunction::holder_abs_pow(a, c).unwrap()),
            (0.1f64..5.0, 0.1f64..5.0).prop_map(|(s, c)| TestFunction::lipschitz_clip(s, c).unwrap()),
            (0.1f64..5.0).prop_map(|w| TestFunction::smooth_sin(w).unwrap()),
            (-5.0f64..5.0).prop_map(|c| TestFunction::constant(c).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn display_round_trips(f in any_function()) {
            let back: TestFunction = f.to_string().parse().unwrap();
            prop_assert_eq!(back, f);
        }

        #[test]
        fn bounded_by_cap(f in any_function(), x in -1e3f64..1e3) {
            prop_assert!(f.eval(x).abs() <= f.cap());
        }

        // Brute-force pair sampling: |f(x) - f(y)| <= osc_bound(f, d) whenever |x - y| < d.
        #[test]
        fn holder_certificate(
            f in any_function(),
            x in -3.0f64..3.0,
            d in 1e-6f64..2.0,
            frac in 0.0f64..1.0,
        ) {
            let y = x + frac * d;
            let gap = (f.eval(x) - f.eval(y)).abs();
            prop_assert!(gap <= f.osc_bound(d).unwrap() * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn holder_certificate_dense_pairs() {
        let f = TestFunction::holder_abs_pow(0.3, 0.7).unwrap();
        let d = 0.01;
        let bound = f.osc_bound(d).unwrap();
        for i in 0..10_000 {
            let x = -0.05 + 1e-5 * i as f64;
            let y = x + 0.999 * d;
            assert!((f.eval(x) - f.eval(y)).abs() <= bound * (1.0 + 1e-12));
        }
    }
}
