use lyapunov_lab::analytics::{
    analytic_gle_gaussian, convex_hull_values, eta0, gaussian_diagonal_cgf, gle_shift, is_convex, legendre_transform,
};
use lyapunov_lab::estimators::{gle_from_samples, log_sum_exp_with_ess, simulate_log_d, GleOptions, HorizonSamples};
use lyapunov_lab::evolution::{det_residual, split_generator, step, EvolutionState, SchemeKind};
use lyapunov_lab::linalg::Matrix;
use lyapunov_lab::processes::{IsotropicKernel, ProcessSpec};
use proptest::prelude::*;

fn square(max_dim: usize, scale: f64) -> impl Strategy<Value = Matrix> {
    (2..=max_dim).prop_flat_map(move |d| {
        prop::collection::vec(-scale..scale, d * d).prop_map(move |v| Matrix::from_row_major(d, v).unwrap())
    })
}

fn scheme() -> impl Strategy<Value = SchemeKind> {
    prop::sample::select(SchemeKind::ALL.to_vec())
}

fn sorted_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect()
}

proptest! {
    #[test]
    fn eta0_is_antisymmetric_and_centered(d in 1usize..30) {
        let e = eta0(d).values;
        prop_assert!(e.iter().sum::<f64>().abs() < 1e-12);
        for k in 0..d {
            prop_assert_eq!(e[k], -e[d - 1 - k]);
        }
        for k in 1..d {
            prop_assert_eq!(e[k - 1] - e[k], 1.0);
        }
    }

    #[test]
    fn split_has_iwasawa_structure(x in square(6, 3.0)) {
        let d = x.dim();
        let g = split_generator(&x);
        for i in 0..d {
            for j in 0..d {
                prop_assert_eq!(g.theta[i * d + j], -g.theta[j * d + i]);
                if i >= j {
                    prop_assert_eq!(g.zeta[i * d + j], 0.0);
                }
            }
        }
        prop_assert!(g.recombine().max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn stepping_keeps_orthogonality_and_factor_consistency(a in square(5, 2.0), s in scheme(), n in 1usize..60) {
        let d = a.dim();
        let dt = 0.01;
        let mut state = EvolutionState::identity_with_z(d, true);
        for _ in 0..n {
            state = step(&state, &a, dt, s).unwrap();
        }
        prop_assert!(state.orthogonality_residual() < 1e-12);
        prop_assert!(state.is_finite());
        prop_assert!((state.t - n as f64 * dt).abs() < 1e-12);
        // reassembling one step at a time equals factorizing the product
        let q = state.reassemble().unwrap();
        let refactored = EvolutionState::from_matrix(&q, true).unwrap();
        for (x, y) in refactored.log_d.iter().zip(&state.log_d) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn traceless_midpoint_preserves_volume(v in prop::collection::vec(-2.0f64..2.0, 3), n in 1usize..200) {
        let a = Matrix::from_row_major(2, vec![v[0], v[1], v[2], -v[0]]).unwrap();
        let mut state = EvolutionState::identity(2);
        for _ in 0..n {
            state = step(&state, &a, 0.01, SchemeKind::Midpoint).unwrap();
        }
        prop_assert!(det_residual(&state, 0.0) < 1e-12);
    }

    #[test]
    fn log_sum_exp_is_shift_equivariant(x in prop::collection::vec(-50.0f64..50.0, 1..200), c in -100.0f64..100.0) {
        let (v, ess) = log_sum_exp_with_ess(&x);
        let shifted: Vec<f64> = x.iter().map(|a| a + c).collect();
        let (vs, ess_s) = log_sum_exp_with_ess(&shifted);
        prop_assert!((vs - v - c).abs() < 1e-9 * (1.0 + v.abs() + c.abs()));
        prop_assert!(ess >= 1.0 - 1e-12 && ess <= x.len() as f64 + 1e-9);
        prop_assert!((ess - ess_s).abs() < 1e-9 * ess);
    }

    #[test]
    fn fixed_horizon_cgf_is_convex(samples in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..80)) {
        let s = HorizonSamples::from_rows(2, vec![1.0], samples).unwrap();
        let etas = sorted_grid(21);
        for dir in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
            let grid: Vec<Vec<f64>> = etas.iter().map(|e| vec![e * dir[0], e * dir[1]]).collect();
            let opts = GleOptions { bootstrap_resamples: 0, extrapolate: false, ..GleOptions::default() };
            let g = gle_from_samples(&s, &grid, &opts).unwrap();
            let scale = g.w.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!(is_convex(&etas, &g.w, 1e-12 * scale));
            prop_assert_eq!(g.w[10], 0.0);
        }
    }

    #[test]
    fn hull_is_a_convex_minorant(fs in prop::collection::vec(-3.0f64..3.0, 3..40)) {
        let xs = sorted_grid(fs.len());
        let h = convex_hull_values(&xs, &fs);
        prop_assert!(is_convex(&xs, &h, 1e-9));
        for (a, b) in h.iter().zip(&fs) {
            prop_assert!(a <= &(b + 1e-12));
        }
        // the hull of a hull is itself
        let hh = convex_hull_values(&xs, &h);
        for (a, b) in h.iter().zip(&hh) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_of_hull_equals_legendre_of_function(fs in prop::collection::vec(-3.0f64..3.0, 3..40)) {
        let xs = sorted_grid(fs.len());
        let q = sorted_grid(17).into_iter().map(|v| 3.0 * v).collect::<Vec<_>>();
        let a = legendre_transform(&xs, &fs, &q).unwrap();
        let b = legendre_transform(&xs, &convex_hull_values(&xs, &fs), &q).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!(is_convex(&q, &a.values, 1e-9));
    }

    #[test]
    fn traceless_gaussian_gle_ignores_uniform_shifts(b in 0.05f64..2.0, c in 0.0f64..2.0, d in 2usize..6, s in -2.0f64..2.0,
                                                     eta in prop::collection::vec(-2.0f64..2.0, 6)) {
        let k = IsotropicKernel::traceless(b, c, d);
        let eta = &eta[..d];
        let shifted: Vec<f64> = eta.iter().map(|e| e + s).collect();
        let w = analytic_gle_gaussian(&k, d, eta);
        prop_assert!((analytic_gle_gaussian(&k, d, &shifted) - w).abs() < 1e-10 * (1.0 + w.abs()));
        let via_shift = gle_shift(&gaussian_diagonal_cgf(&k, d), d).unwrap().eval(eta).unwrap();
        prop_assert!((via_shift - w).abs() < 1e-10 * (1.0 + w.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn ensembles_do_not_depend_on_worker_count(seed in any::<u64>(), s in scheme(), workers in 2usize..5) {
        let spec = ProcessSpec::gaussian(3, IsotropicKernel::traceless(0.5, 0.5, 3), 0.1, seed);
        let one = simulate_log_d(&spec, s, 0.01, &[0.5, 1.0], 5, Some(1)).unwrap();
        let many = simulate_log_d(&spec, s, 0.01, &[0.5, 1.0], 5, Some(workers)).unwrap();
        let auto = simulate_log_d(&spec, s, 0.01, &[0.5, 1.0], 5, None).unwrap();
        prop_assert_eq!(&one, &many);
        prop_assert_eq!(&one, &auto);
    }
}
