//! Approximating processes for `L_eps = [f(eps W), W]` and its decompositions.
//!
//! All series are reported at the coarse nodes `s_0 .. s_n` and start at `0`. Coarse
//! sums use the coarse increments `W(s_i) - W(s_{i-1})`; stochastic integrals use
//! left-point sums over the fine grid. Integrals in reversed time are left-point sums
//! over the reversed fine nodes, so that the backward sum over the cells `t_i` is a
//! plain forward sum for `hat W`.
//!
//! Every running sum is compensated ([`NeumaierSum`]).

use crate::error::{Error, Result};
use crate::paths::{backward_levy_modulus, levy_modulus, normalized_sup, SamplePath, UniformPartition};
use crate::sum::NeumaierSum;
use crate::testfuncs::{osc_bound_or_zero, CertifiedFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesLabel {
    /// `sum Δf(eps W) ΔW` over the coarse partition.
    LDiscrete,
    JForward,
    JBackward,
    SForward,
    SBackward,
    MForward,
    MBackward,
    ADrift,
    Gamma,
    /// Martingale plus time-reversed martingale plus drift representation.
    LRepresentation,
    /// `-S - hat S` on the fine grid.
    LItoPair,
    QSmoothRef,
}

impl SeriesLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LDiscrete => "L_discrete",
            Self::JForward => "J_forward",
            Self::JBackward => "J_backward",
            Self::SForward => "S_forward",
            Self::SBackward => "S_backward",
            Self::MForward => "M_forward",
            Self::MBackward => "M_backward",
            Self::ADrift => "A_drift",
            Self::Gamma => "Gamma",
            Self::LRepresentation => "L_representation",
            Self::LItoPair => "L_ito_pair",
            Self::QSmoothRef => "Q_smooth_ref",
        }
    }
}

/// Values of one estimator at the coarse nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariationSeries {
    pub label: SeriesLabel,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub sup_abs: f64,
}

impl CovariationSeries {
    fn new(label: SeriesLabel, partition: &UniformPartition, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), partition.cells() + 1);
        let sup_abs = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        Self {
            label,
            nodes: partition.nodes(),
            values,
            sup_abs,
        }
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("series has n + 1 values")
    }

    /// `factor·self`, e.g. `Q = eps·L`.
    pub fn scaled(&self, factor: f64) -> Vec<f64> {
        self.values.iter().map(|v| factor * v).collect()
    }
}

/// `i(t) = min { j : s_j >= t }`.
pub fn index_of_t(partition: &UniformPartition, t: f64) -> Result<usize> {
    let horizon = partition.horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::invalid("t", format!("{t} outside [0, {horizon}]")));
    }
    let guess = ((t / partition.delta()).ceil() as usize).min(partition.cells());
    // the float guess can be off by one in either direction
    let mut j = guess.saturating_sub(1);
    while partition.node(j) < t {
        j += 1;
    }
    Ok(j)
}

fn f_along<F: CertifiedFunction + ?Sized>(values: &[f64], f: &F, eps: f64) -> Vec<f64> {
    values.iter().map(|&w| f.eval(eps * w)).collect()
}

/// Running compensated sum of `term(k)` for `k = 0..n`, recorded after every term.
fn running<G: FnMut(usize) -> f64>(n: usize, mut term: G) -> Vec<f64> {
    let mut acc = NeumaierSum::new();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for k in 0..n {
        acc.add(term(k));
        out.push(acc.value());
    }
    out
}

/// Running sum over fine steps `k = 0..n·m`, recorded at coarse nodes.
fn running_fine<G: FnMut(usize) -> f64>(path: &SamplePath, mut term: G) -> Vec<f64> {
    let grid = path.grid();
    let m = grid.refinement();
    let mut acc = NeumaierSum::new();
    let mut out = Vec::with_capacity(grid.coarse().cells() + 1);
    out.push(0.0);
    for k in 0..grid.fine_cells() {
        acc.add(term(k));
        if (k + 1) % m == 0 {
            out.push(acc.value());
        }
    }
    out
}

/// Running sum over reversed fine steps `q = n·m - 1, …, 0`, recorded at coarse nodes.
///
/// Entry `i` of the result is `sum_{q >= n·m - i·m} term(q)`: the reversed-time integral
/// over `[T - s_i, T]`, which covers original times `[0, s_i]`.
fn running_reversed<G: FnMut(usize) -> f64>(path: &SamplePath, mut term: G) -> Vec<f64> {
    let grid = path.grid();
    let m = grid.refinement();
    let steps = grid.fine_cells();
    let mut acc = NeumaierSum::new();
    let mut out = Vec::with_capacity(grid.coarse().cells() + 1);
    out.push(0.0);
    for (count, q) in (0..steps).rev().enumerate() {
        acc.add(term(q));
        if (count + 1) % m == 0 {
            out.push(acc.value());
        }
    }
    out
}

/// `J_eps(s_i) = sum_{k <= i} f(eps W(s_{k-1})) ΔW_k`.
pub fn forward_sum<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let w = path.coarse_values();
    let fw = f_along(&w, f, eps);
    let values = running(w.len() - 1, |k| fw[k] * (w[k + 1] - w[k]));
    CovariationSeries::new(SeriesLabel::JForward, path.grid().coarse(), values)
}

/// `hat J_eps(s_i) = sum_{k <= i} f(eps W(s_k)) ΔW_k`.
pub fn backward_sum<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let w = path.coarse_values();
    let fw = f_along(&w, f, eps);
    let values = running(w.len() - 1, |k| fw[k + 1] * (w[k + 1] - w[k]));
    CovariationSeries::new(SeriesLabel::JBackward, path.grid().coarse(), values)
}

/// `hat J_eps` rebuilt from the backward nodes:
/// `-sum_{l = n - i}^{n - 1} f(eps hat W(t_l)) (hat W(t_{l+1}) - hat W(t_l))`,
/// each node summed in increasing backward time.
pub fn backward_sum_reordered<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let what = path.hat().into_iter().step_by(path.grid().refinement()).collect::<Vec<_>>();
    let fhat = f_along(&what, f, eps);
    let n = what.len() - 1;
    let mut values = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut acc = NeumaierSum::new();
        for l in (n - i)..n {
            acc.add(fhat[l] * (what[l + 1] - what[l]));
        }
        values.push(-acc.value());
    }
    CovariationSeries::new(SeriesLabel::JBackward, path.grid().coarse(), values)
}

/// `L_{eps,P}(s_i) = sum_{k <= i} Δf(eps W)_k ΔW_k`.
pub fn discrete_covariation<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let w = path.coarse_values();
    let fw = f_along(&w, f, eps);
    let values = running(w.len() - 1, |k| (fw[k + 1] - fw[k]) * (w[k + 1] - w[k]));
    CovariationSeries::new(SeriesLabel::LDiscrete, path.grid().coarse(), values)
}

/// Worst relative errors of the two exact identities of the coarse sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `|(hat J - J) - L_{eps,P}|` relative to the absolute mass of the summed terms.
    pub covariation_rel_error: f64,
    pub covariation_node: usize,
    /// `|hat J - hat J_reordered|` relative to the absolute mass of `hat J`'s terms.
    pub reorder_rel_error: f64,
    pub reorder_node: usize,
}

pub fn exact_identities<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> IdentityReport {
    let j = forward_sum(path, f, eps);
    let jh = backward_sum(path, f, eps);
    let jr = backward_sum_reordered(path, f, eps);
    let l = discrete_covariation(path, f, eps);

    let w = path.coarse_values();
    let fw = f_along(&w, f, eps);
    let n = w.len() - 1;
    let fwd_mass = running(n, |k| (fw[k] * (w[k + 1] - w[k])).abs());
    let bwd_mass = running(n, |k| (fw[k + 1] * (w[k + 1] - w[k])).abs());

    let relative = |diff: f64, scale: f64| if scale > 0.0 { diff / scale } else { diff };
    let mut report = IdentityReport {
        covariation_rel_error: 0.0,
        covariation_node: 0,
        reorder_rel_error: 0.0,
        reorder_node: 0,
    };
    for i in 0..=n {
        let cov = relative(
            ((jh.values[i] - j.values[i]) - l.values[i]).abs(),
            fwd_mass[i] + bwd_mass[i],
        );
        if cov > report.covariation_rel_error {
            report.covariation_rel_error = cov;
            report.covariation_node = i;
        }
        let reo = relative((jh.values[i] - jr.values[i]).abs(), bwd_mass[i]);
        if reo > report.reorder_rel_error {
            report.reorder_rel_error = reo;
            report.reorder_node = i;
        }
    }
    report
}

/// `S_eps(t) = ∫_0^t f(eps W) dW`, left-point sum on the fine grid.
pub fn ito_fine_forward<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let w = path.values();
    let fw = f_along(w, f, eps);
    let values = running_fine(path, |k| fw[k] * (w[k + 1] - w[k]));
    CovariationSeries::new(SeriesLabel::SForward, path.grid().coarse(), values)
}

/// `hat S_eps(t) = ∫_{T-t}^T f(eps hat W) d hat W`, left-point sum in reversed time.
pub fn ito_fine_backward<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let what = path.hat();
    let fhat = f_along(&what, f, eps);
    let values = running_reversed(path, |q| fhat[q] * (what[q + 1] - what[q]));
    CovariationSeries::new(SeriesLabel::SBackward, path.grid().coarse(), values)
}

/// `-S_eps - hat S_eps`, the fine-grid counterpart of `L_{eps,P}`.
pub fn ito_pair_covariation<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let s = ito_fine_forward(path, f, eps);
    let sh = ito_fine_backward(path, f, eps);
    let values = s.values.iter().zip(&sh.values).map(|(a, b)| -a - b).collect();
    CovariationSeries::new(SeriesLabel::LItoPair, path.grid().coarse(), values)
}

/// `M_eps(t) = sum_i ∫_{s_{i-1} ∧ t}^{s_i ∧ t} (f(eps W(s)) - f(eps W(s_{i-1}))) dW(s)`.
pub fn residual_forward<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let w = path.values();
    let fw = f_along(w, f, eps);
    let m = path.grid().refinement();
    let values = running_fine(path, |k| (fw[k] - fw[k - k % m]) * (w[k + 1] - w[k]));
    CovariationSeries::new(SeriesLabel::MForward, path.grid().coarse(), values)
}

/// `Gamma_eps(t)`, the quadratic variation of `M_eps`.
pub fn gamma<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let w = path.values();
    let fw = f_along(w, f, eps);
    let m = path.grid().refinement();
    let h = path.grid().step();
    let values = running_fine(path, |k| {
        let d = fw[k] - fw[k - k % m];
        d * d * h
    });
    CovariationSeries::new(SeriesLabel::Gamma, path.grid().coarse(), values)
}

/// `hat M_eps(t) = sum_i ∫ (f(eps hat W(s)) - f(eps hat W(t_i))) d hat W(s)` over the
/// backward cells met by `[T - t, T]`.
///
/// At coarse nodes the partial-cell boundary term vanishes, so this equals
/// `hat S_eps + hat J_eps` there.
pub fn residual_backward<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let what = path.hat();
    let fhat = f_along(&what, f, eps);
    let m = path.grid().refinement();
    let values = running_reversed(path, |q| (fhat[q] - fhat[q - q % m]) * (what[q + 1] - what[q]));
    CovariationSeries::new(SeriesLabel::MBackward, path.grid().coarse(), values)
}

fn check_beta(path: &SamplePath, beta: &[f64]) -> Result<()> {
    if beta.len() != path.grid().len() {
        return Err(Error::MissingBeta(format!(
            "expected {} values on the path grid, got {}",
            path.grid().len(),
            beta.len()
        )));
    }
    Ok(())
}

/// `A_eps(t) = sum_i ∫ (f(eps hat W(s)) - f(eps hat W(t_i))) hat W(s) / (T - s) ds`.
///
/// Same singular-endpoint rule as `beta`: the last reversed cell uses `s = T - h`.
pub fn drift_a<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> CovariationSeries {
    let grid = *path.grid();
    let what = path.hat();
    let fhat = f_along(&what, f, eps);
    let m = grid.refinement();
    let h = grid.step();
    let values = running_reversed(path, |q| {
        (fhat[q] - fhat[q - q % m]) * what[q] * h / grid.remaining(q)
    });
    CovariationSeries::new(SeriesLabel::ADrift, grid.coarse(), values)
}

/// `hat M_eps` through the `beta` decomposition: `sum ∫ Δf dbeta - A_eps`.
pub fn residual_backward_via_beta<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
    beta: &[f64],
) -> Result<CovariationSeries> {
    check_beta(path, beta)?;
    let what = path.hat();
    let fhat = f_along(&what, f, eps);
    let m = path.grid().refinement();
    let martingale = running_reversed(path, |q| (fhat[q] - fhat[q - q % m]) * (beta[q + 1] - beta[q]));
    let a = drift_a(path, f, eps);
    let values = martingale.iter().zip(&a.values).map(|(x, y)| x - y).collect();
    Ok(CovariationSeries::new(
        SeriesLabel::MBackward,
        path.grid().coarse(),
        values,
    ))
}

/// `L(t) = -∫_0^t f(eps W) dW - ∫_{T-t}^T f(eps hat W) dbeta + ∫_0^t f(eps W(s)) W(s)/s ds`.
///
/// The drift integral is a left-point sum starting at the first fine node; `s = 0` is
/// never evaluated.
pub fn representation_l<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
    beta: &[f64],
) -> Result<CovariationSeries> {
    check_beta(path, beta)?;
    let grid = *path.grid();
    let w = path.values();
    let fw = f_along(w, f, eps);
    let h = grid.step();
    let s = ito_fine_forward(path, f, eps);
    let fhat: Vec<f64> = fw.iter().rev().copied().collect();
    let reversed = running_reversed(path, |q| fhat[q] * (beta[q + 1] - beta[q]));
    let drift = running_fine(path, |k| {
        if k == 0 {
            0.0
        } else {
            fw[k] * w[k] / grid.time(k) * h
        }
    });
    let values = (0..s.values.len())
        .map(|i| -s.values[i] - reversed[i] + drift[i])
        .collect();
    Ok(CovariationSeries::new(
        SeriesLabel::LRepresentation,
        grid.coarse(),
        values,
    ))
}

/// `eps^2 ∫_0^t f'(eps W(s)) ds`, left Riemann sum on the fine grid.
pub fn smooth_reference<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> Result<CovariationSeries> {
    if !f.is_differentiable() {
        return Err(Error::Unsupported(
            "smooth reference needs a differentiable function".into(),
        ));
    }
    let w = path.values();
    let h = path.grid().step();
    let derivs = w
        .iter()
        .map(|&x| f.derivative(eps * x))
        .collect::<Result<Vec<_>>>()?;
    let values = running_fine(path, |k| eps * eps * derivs[k] * h);
    Ok(CovariationSeries::new(
        SeriesLabel::QSmoothRef,
        path.grid().coarse(),
        values,
    ))
}

/// A per-path inequality `value <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

/// `Gamma(T) <= T osc_f(eps delta_{W,eps})^2` with the fine-grid Lévy modulus.
pub fn gamma_bound<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> Result<BoundCheck> {
    let osc = osc_bound_or_zero(f, eps * levy_modulus(path))?;
    Ok(BoundCheck {
        value: gamma(path, f, eps).terminal(),
        bound: path.grid().horizon() * osc * osc,
    })
}

/// `sup |A| <= 2 sqrt(T) osc_f(eps delta) sup_s |W(s)|/sqrt(s)`.
///
/// `A` measures `hat W` from the start of each backward cell, so `delta` is the
/// modulus of `hat W` on the backward partition.
pub fn drift_bound<F: CertifiedFunction + ?Sized>(
    path: &SamplePath,
    f: &F,
    eps: f64,
) -> Result<BoundCheck> {
    let osc = osc_bound_or_zero(f, eps * backward_levy_modulus(path))?;
    Ok(BoundCheck {
        value: drift_a(path, f, eps).sup_abs,
        bound: 2.0 * path.grid().horizon().sqrt() * osc * normalized_sup(path),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{beta_from_path, sample_brownian, FineGrid};
    use crate::testfuncs::TestFunction;

    fn grid(n: usize, m: usize) -> FineGrid {
        FineGrid::new(UniformPartition::new(1.0, n).unwrap(), m).unwrap()
    }

    /// `f(x) = x` on the relevant range.
    fn identity() -> TestFunction {
        TestFunction::lipschitz_clip(1.0, 1e6).unwrap()
    }

    fn example_path() -> SamplePath {
        SamplePath::from_values(grid(3, 1), vec![0.0, 1.0, 0.5, 1.5]).unwrap()
    }

    #[test]
    fn index_of_t_examples() {
        let p = UniformPartition::new(1.0, 4).unwrap();
        assert_eq!(index_of_t(&p, 0.0).unwrap(), 0);
        assert_eq!(index_of_t(&p, 0.25).unwrap(), 1);
        assert_eq!(index_of_t(&p, 0.3).unwrap(), 2);
        assert_eq!(index_of_t(&p, 1.0).unwrap(), 4);
        assert!(index_of_t(&p, 1.0 + 1e-9).is_err());
        assert!(index_of_t(&p, -0.1).is_err());
        let p = UniformPartition::new(0.3, 3).unwrap();
        for i in 0..=3 {
            assert_eq!(index_of_t(&p, p.node(i)).unwrap(), i);
        }
    }

    #[test]
    fn coarse_sum_examples() {
        let p = example_path();
        let f = identity();
        assert_eq!(forward_sum(&p, &f, 1.0).terminal(), 0.0);
        assert_eq!(backward_sum(&p, &f, 1.0).terminal(), 2.25);
        assert_eq!(discrete_covariation(&p, &f, 1.0).terminal(), 2.25);
        assert_eq!(backward_sum_reordered(&p, &f, 1.0).terminal(), 2.25);
    }

    #[test]
    fn constant_function_telescopes() {
        let p = sample_brownian(grid(8, 4), 1, 0);
        let c = TestFunction::constant(1.7).unwrap();
        let w = p.coarse_values();
        let j = forward_sum(&p, &c, 0.3);
        let jh = backward_sum(&p, &c, 0.3);
        for (i, wi) in w.iter().enumerate() {
            assert!((j.values[i] - 1.7 * wi).abs() < 1e-14);
            assert!((jh.values[i] - 1.7 * wi).abs() < 1e-14);
        }
        assert!(discrete_covariation(&p, &c, 0.3).values.iter().all(|&v| v == 0.0));
        let s = ito_fine_forward(&p, &c, 0.3);
        let sh = ito_fine_backward(&p, &c, 0.3);
        for (i, wi) in w.iter().enumerate() {
            assert!((s.values[i] - 1.7 * wi).abs() < 1e-14);
            // hat S(s_i) = c (hat W(T) - hat W(T - s_i)) = -c W(s_i)
            assert!((sh.values[i] + 1.7 * wi).abs() < 1e-14);
        }
    }

    #[test]
    fn series_start_at_zero_and_sup_is_consistent() {
        let p = sample_brownian(grid(6, 5), 2, 3);
        let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        let beta = beta_from_path(&p).unwrap();
        let all = [
            forward_sum(&p, &f, 0.2),
            backward_sum(&p, &f, 0.2),
            discrete_covariation(&p, &f, 0.2),
            ito_fine_forward(&p, &f, 0.2),
            ito_fine_backward(&p, &f, 0.2),
            residual_forward(&p, &f, 0.2),
            residual_backward(&p, &f, 0.2),
            drift_a(&p, &f, 0.2),
            gamma(&p, &f, 0.2),
            representation_l(&p, &f, 0.2, &beta).unwrap(),
        ];
        for s in &all {
            assert_eq!(s.values.len(), 7, "{}", s.label.as_str());
            assert_eq!(s.values[0], 0.0, "{}", s.label.as_str());
            let sup = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert_eq!(sup, s.sup_abs);
        }
    }

    #[test]
    fn single_refinement_coincidences() {
        let p = sample_brownian(grid(16, 1), 4, 0);
        let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        let j = forward_sum(&p, &f, 0.5);
        let s = ito_fine_forward(&p, &f, 0.5);
        assert_eq!(j.values, s.values);
        let jh = backward_sum(&p, &f, 0.5);
        let sh = ito_fine_backward(&p, &f, 0.5);
        assert!((jh.terminal() + sh.terminal()).abs() < 1e-14);
    }

    #[test]
    fn identities_hold_at_machine_precision() {
        let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        for replica in 0..20 {
            let p = sample_brownian(grid(64, 4), 9, replica);
            let r = exact_identities(&p, &f, 0.7);
            assert!(r.covariation_rel_error <= 1e-12, "{r:?}");
            assert!(r.reorder_rel_error <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn residuals_match_their_definitions() {
        let f = TestFunction::holder_abs_pow(0.4, 1.0).unwrap();
        let p = sample_brownian(grid(8, 16), 21, 5);
        let eps = 0.3;
        let m = residual_forward(&p, &f, eps);
        let s = ito_fine_forward(&p, &f, eps);
        let j = forward_sum(&p, &f, eps);
        let mh = residual_backward(&p, &f, eps);
        let sh = ito_fine_backward(&p, &f, eps);
        let jh = backward_sum(&p, &f, eps);
        let beta = beta_from_path(&p).unwrap();
        let via_beta = residual_backward_via_beta(&p, &f, eps, &beta).unwrap();
        for i in 0..m.values.len() {
            assert!((m.values[i] - (s.values[i] - j.values[i])).abs() < 1e-12);
            assert!((mh.values[i] - (sh.values[i] + jh.values[i])).abs() < 1e-12);
            assert!((mh.values[i] - via_beta.values[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn gamma_is_nondecreasing_and_bounded() {
        let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        for replica in 0..50 {
            let p = sample_brownian(grid(10, 32), 77, replica);
            let g = gamma(&p, &f, 0.1);
            assert!(g.values.windows(2).all(|w| w[1] >= w[0]));
            assert!(gamma_bound(&p, &f, 0.1).unwrap().holds());
            assert!(drift_bound(&p, &f, 0.1).unwrap().holds());
        }
    }

    #[test]
    fn constant_function_residuals_vanish() {
        let c = TestFunction::constant(-2.0).unwrap();
        let p = sample_brownian(grid(5, 8), 3, 3);
        assert!(residual_forward(&p, &c, 0.2).values.iter().all(|&v| v == 0.0));
        assert!(gamma(&p, &c, 0.2).values.iter().all(|&v| v == 0.0));
        assert!(residual_backward(&p, &c, 0.2).values.iter().all(|&v| v == 0.0));
        assert!(drift_a(&p, &c, 0.2).values.iter().all(|&v| v == 0.0));
        let beta = beta_from_path(&p).unwrap();
        let via = residual_backward_via_beta(&p, &c, 0.2, &beta).unwrap();
        assert!(via.values.iter().all(|&v| v == 0.0));
        assert!(smooth_reference(&p, &c, 0.2).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_beta_is_an_error() {
        let f = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        let p = sample_brownian(grid(4, 4), 1, 1);
        assert!(matches!(
            residual_backward_via_beta(&p, &f, 0.1, &[]),
            Err(Error::MissingBeta(_))
        ));
        assert!(matches!(
            representation_l(&p, &f, 0.1, &[0.0; 3]),
            Err(Error::MissingBeta(_))
        ));
    }

    #[test]
    fn smooth_reference_requires_derivative() {
        let p = sample_brownian(grid(4, 4), 1, 1);
        let h = TestFunction::holder_abs_pow(0.5, 1.0).unwrap();
        assert!(matches!(smooth_reference(&p, &h, 0.1), Err(Error::Unsupported(_))));
    }

    /// A linear function exposed through the certified interface, for the smooth reference.
    struct Linear;

    impl CertifiedFunction for Linear {
        fn eval(&self, x: f64) -> f64 {
            x
        }
        fn osc_bound(&self, d: f64) -> Result<f64> {
            Ok(d)
        }
        fn derivative(&self, _x: f64) -> Result<f64> {
            Ok(1.0)
        }
        fn cap(&self) -> f64 {
            f64::INFINITY
        }
        fn holder_exponent(&self) -> f64 {
            1.0
        }
        fn holder_constant(&self) -> f64 {
            1.0
        }
        fn is_differentiable(&self) -> bool {
            true
        }
    }

    #[test]
    fn smooth_reference_of_linear_function() {
        let p = sample_brownian(grid(8, 8), 1, 1);
        let eps = 0.3;
        let q = smooth_reference(&p, &Linear, eps).unwrap();
        for (t, v) in q.nodes.iter().zip(&q.values) {
            assert!((v - eps * eps * t).abs() < 1e-14);
        }
    }

    #[test]
    fn representation_at_zero() {
        let f = TestFunction::smooth_sin(1.0).unwrap();
        let p = sample_brownian(grid(4, 8), 5, 5);
        let beta = beta_from_path(&p).unwrap();
        assert_eq!(representation_l(&p, &f, 0.5, &beta).unwrap().values[0], 0.0);
    }
}
