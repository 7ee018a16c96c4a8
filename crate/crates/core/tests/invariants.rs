use proptest::prelude::*;

use qcov_core::bounds::{levy_tail_bound, martingale_tail_bound, RateSchedule};
use qcov_core::covariation::{
    backward_sum, discrete_covariation, drift_bound, exact_identities, forward_sum, gamma_bound,
    ito_pair_covariation,
};
use qcov_core::paths::{
    beta_from_path, levy_modulus, reconstruct_hat_w, sample_brownian, time_reverse_bar,
    time_reverse_hat,
};
use qcov_core::stats::clopper_pearson;
use qcov_core::{FineGrid, SamplePath, TestFunction, UniformPartition};

fn function() -> impl Strategy<Value = TestFunction> {
    prop_oneof![
        (0.05f64..0.95, 0.1f64..5.0).prop_map(|(a, c)| TestFunction::holder_abs_pow(a, c).unwrap()),
        (0.1f64..10.0, 0.1f64..5.0).prop_map(|(s, c)| TestFunction::lipschitz_clip(s, c).unwrap()),
        (0.1f64..20.0).prop_map(|w| TestFunction::smooth_sin(w).unwrap()),
        (-3.0f64..3.0).prop_map(|c| TestFunction::constant(c).unwrap()),
    ]
}

fn path() -> impl Strategy<Value = SamplePath> {
    (0.1f64..5.0, 1usize..40, 1usize..9, any::<u64>(), 0u64..1000).prop_map(|(t, n, m, seed, k)| {
        let grid = FineGrid::new(UniformPartition::new(t, n).unwrap(), m).unwrap();
        sample_brownian(grid, seed, k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reversals_are_involutions(values in prop::collection::vec(-10.0f64..10.0, 1..50)) {
        let mut x = values;
        x[0] = 0.0;
        prop_assert_eq!(time_reverse_hat(&time_reverse_hat(&x)), x.clone());
        let back = time_reverse_bar(&time_reverse_bar(&x));
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn discrete_identities_hold(p in path(), f in function(), eps in 0.01f64..0.99) {
        let r = exact_identities(&p, &f, eps);
        prop_assert!(r.covariation_rel_error <= 1e-12);
        prop_assert!(r.reorder_rel_error <= 1e-12);
        let gap = backward_sum(&p, &f, eps).terminal() - forward_sum(&p, &f, eps).terminal();
        let l = discrete_covariation(&p, &f, eps).terminal();
        prop_assert!((gap - l).abs() <= 1e-9 * (1.0 + l.abs()));
    }

    #[test]
    fn constant_function_has_no_covariation(p in path(), c in -3.0f64..3.0, eps in 0.01f64..0.99) {
        let f = TestFunction::constant(c).unwrap();
        prop_assert!(discrete_covariation(&p, &f, eps).values.iter().all(|&v| v == 0.0));
        prop_assert!(ito_pair_covariation(&p, &f, eps).sup_abs <= 1e-12 * (1.0 + p.terminal().abs()));
    }

    #[test]
    fn series_share_the_partition(p in path(), f in function(), eps in 0.01f64..0.99) {
        let l = discrete_covariation(&p, &f, eps);
        prop_assert_eq!(l.nodes.len(), p.grid().coarse().cells() + 1);
        prop_assert_eq!(l.values[0], 0.0);
        let sup = l.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert_eq!(l.sup_abs, sup);
    }

    #[test]
    fn per_path_bounds_hold(p in path(), f in function(), eps in 0.01f64..0.99) {
        prop_assert!(gamma_bound(&p, &f, eps).unwrap().holds());
        if p.grid().fine_cells() >= 2 {
            let a = drift_bound(&p, &f, eps).unwrap();
            prop_assert!(a.value <= a.bound * (1.0 + 1e-12), "{:?}", a);
        }
    }

    #[test]
    fn beta_round_trip_endpoints(p in path()) {
        prop_assume!(p.grid().fine_cells() >= 2);
        let beta = beta_from_path(&p).unwrap();
        prop_assert_eq!(beta[0], 0.0);
        let rebuilt = reconstruct_hat_w(&beta, p.terminal(), p.grid()).unwrap();
        prop_assert_eq!(rebuilt[0], p.terminal());
        prop_assert_eq!(*rebuilt.last().unwrap(), 0.0);
    }

    #[test]
    fn coarsening_never_raises_the_modulus(p in path()) {
        let m = p.grid().refinement();
        for factor in (1..=m).filter(|d| m % d == 0) {
            prop_assert!(levy_modulus(&p.coarsen(factor).unwrap()) <= levy_modulus(&p));
        }
    }

    #[test]
    fn regrouping_keeps_the_trajectory(p in path()) {
        let total = p.grid().fine_cells();
        for cells in (1..=total).filter(|d| total % d == 0) {
            let q = p.regroup(cells).unwrap();
            prop_assert_eq!(q.values(), p.values());
            prop_assert_eq!(q.grid().coarse().cells(), cells);
        }
    }

    #[test]
    fn martingale_bound_positive_and_monotone(r in 0.01f64..10.0, d in 0.01f64..10.0, s in 1.01f64..3.0) {
        let b = martingale_tail_bound(r, d).unwrap();
        prop_assert!(b > 0.0 || d * d / r > 1400.0);
        prop_assert!(martingale_tail_bound(r, d * s).unwrap() <= b);
        prop_assert!(martingale_tail_bound(r * s, d).unwrap() >= b);
    }

    #[test]
    fn levy_bound_decreasing_in_threshold(d in 0.01f64..2.0, de in 0.001f64..0.5, s in 1.01f64..3.0) {
        prop_assert!(levy_tail_bound(d * s, de, 1.0).unwrap() <= levy_tail_bound(d, de, 1.0).unwrap());
    }

    #[test]
    fn schedule_rounding(alpha in 0.1f64..0.95, frac_mu in 0.05f64..0.95, frac_gamma in 0.05f64..0.95,
                         eps in 0.01f64..0.99, t in 0.1f64..10.0) {
        let mu = alpha * frac_mu;
        let gamma = mu * frac_gamma;
        let s = RateSchedule::holder(alpha, mu, gamma).unwrap();
        let target = s.delta_eps(eps, t).unwrap();
        prop_assume!(t / target < 1e7);
        let realized = s.partition(eps, t).unwrap().delta();
        prop_assert!(realized <= target * (1.0 + 1e-12));
        prop_assert!(target - realized <= target * target / t + 1e-12 * target);
        let parsed = RateSchedule::parse(&s.to_string(), gamma).unwrap();
        prop_assert_eq!(parsed, s);
    }

    #[test]
    fn binomial_interval_contains_estimate(n in 1u64..3000, frac in 0.0f64..=1.0) {
        let x = ((n as f64) * frac).round() as u64;
        let (lo, hi) = clopper_pearson(x, n, 0.95).unwrap();
        let p = x as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}
