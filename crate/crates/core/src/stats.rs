//! Summary statistics for Monte Carlo output.

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Exact (Clopper–Pearson) binomial confidence interval for `count` successes in
/// `trials` trials.
pub fn clopper_pearson(count: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid("trials", "need at least one trial"));
    }
    if count > trials {
        return Err(Error::invalid("count", format!("{count} exceeds {trials} trials")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid("confidence", format!("must lie in (0, 1), got {confidence}")));
    }
    let tail = (1.0 - confidence) / 2.0;
    let (x, n) = (count as f64, trials as f64);
    // lower: P(X >= x | p) = I_p(x, n - x + 1) = tail
    let lo = if count == 0 {
        0.0
    } else {
        bisect(|p| beta_reg(x, n - x + 1.0, p) - tail)
    };
    // upper: P(X <= x | p) = 1 - I_p(x + 1, n - x) = tail
    let hi = if count == trials {
        1.0
    } else {
        bisect(|p| beta_reg(x + 1.0, n - x, p) - (1.0 - tail))
    };
    Ok((lo, hi))
}

/// Root of an increasing function on `[0, 1]`.
fn bisect(g: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Least-squares fit of `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub npoints: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("ys", "length differs from xs"));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData { usable: n, required: 2 });
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = NeumaierSum::new();
    let mut sxy = NeumaierSum::new();
    let mut syy = NeumaierSum::new();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let (sxx, sxy, syy) = (sxx.value(), sxy.value(), syy.value());
    if sxx == 0.0 {
        return Err(Error::invalid("xs", "all abscissae coincide"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        npoints: n,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value() / xs.len() as f64
}

/// Sample variance (divisor `N - 1`) and its standard error from the fourth central moment.
pub fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).collect::<NeumaierSum>().value() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).collect::<NeumaierSum>().value() / n;
    let var = m2 * n / (n - 1.0);
    let se = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    (var, se)
}

/// Sample covariance (divisor `N - 1`) and its standard error.
pub fn covariance_with_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let c = mean(&prods);
    let spread = prods.iter().map(|p| (p - c).powi(2)).collect::<NeumaierSum>().value() / n;
    (c * n / (n - 1.0), (spread / n).sqrt())
}

/// Standard error of a sample mean.
pub fn mean_se(xs: &[f64]) -> f64 {
    (variance_with_se(xs).0 / xs.len() as f64).sqrt()
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p)
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// `P{Z > z}` for a standard normal `Z`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and `N(0, sigma^2)`.
pub fn ks_statistic_normal(xs: &[f64], sigma: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = normal_cdf(x / sigma);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}
