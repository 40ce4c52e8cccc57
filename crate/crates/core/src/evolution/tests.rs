use super::*;
use crate::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..d * d).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
    Matrix::from_row_major(d, data).unwrap()
}

fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = random_matrix(d, 1.0, rng);
    for i in 0..d {
        m[(i, i)] += 2.0;
    }
    reorthonormalize(&m).unwrap()
}

/// Independent propagators, built without the stepper.
fn cayley(a: &Matrix, dt: f64) -> Matrix {
    let d = a.dim();
    let mut lhs = Matrix::identity(d);
    let mut rhs = Matrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            lhs[(i, j)] -= 0.5 * dt * a[(i, j)];
            rhs[(i, j)] += 0.5 * dt * a[(i, j)];
        }
    }
    let mut l = lhs.into_vec();
    let mut r = rhs.into_vec();
    crate::linalg::solve_in_place(&mut l, &mut r, d).unwrap();
    Matrix::from_row_major(d, r).unwrap()
}

fn taylor2(a: &Matrix, dt: f64) -> Matrix {
    let a2 = a.matmul(a);
    let mut p = Matrix::identity(a.dim());
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            p[(i, j)] += dt * a[(i, j)] + 0.5 * dt * dt * a2[(i, j)];
        }
    }
    p
}

fn relative_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.max_abs_diff(b) / b.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn zero_generator_only_advances_time() {
    for scheme in SchemeKind::ALL {
        let s0 = EvolutionState::identity(3);
        let s1 = step(&s0, &Matrix::zeros(3), 0.25, scheme).unwrap();
        assert_eq!(s1.r, s0.r);
        assert_eq!(s1.log_d, s0.log_d);
        assert_eq!(s1.z, s0.z);
        assert_eq!(s1.t, 0.25);
    }
}

#[test]
fn constant_diagonal_flow() {
    let mu = [0.7, -0.2, 1.3];
    let a = Matrix::from_diagonal(&mu);
    let (dt, n) = (0.01, 300);
    let horizon = dt * n as f64;
    for scheme in SchemeKind::ALL {
        let mut state = EvolutionState::identity(3);
        let mut stepper = Stepper::new(3, scheme);
        for _ in 0..n {
            stepper.step(&mut state, a.as_slice(), dt).unwrap();
        }
        // starting from the identity frame the factors stay diagonal
        assert!(Matrix::from_row_major(3, state.r.clone()).unwrap().max_abs_diff(&Matrix::identity(3)) < 1e-15);
        let tol = if scheme == SchemeKind::IwasawaDirect { 1e-12 } else { 1e-3 };
        for k in 0..3 {
            assert!((state.log_d[k] - mu[k] * horizon).abs() < tol, "{scheme:?} {k}: {}", state.log_d[k]);
        }
    }
}

#[test]
fn constant_diagonal_flow_sorts_from_generic_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mu = [0.2, -0.5, 1.0];
    let a = Matrix::from_diagonal(&mu);
    let mut state = EvolutionState::from_matrix(&random_rotation(3, &mut rng), true).unwrap();
    let mut stepper = Stepper::new(3, SchemeKind::IwasawaDirect);
    let (dt, n) = (0.01, 6000);
    let mut early = Vec::new();
    for i in 0..n {
        stepper.step(&mut state, a.as_slice(), dt).unwrap();
        if i + 1 == n / 2 {
            early = state.log_d.clone();
        }
    }
    // increments over the second half remove the O(1/T) frame transient
    let span = dt * (n / 2) as f64;
    let rates: Vec<f64> = state.log_d.iter().zip(&early).map(|(l, e)| (l - e) / span).collect();
    let sorted = [1.0, 0.2, -0.5];
    for k in 0..3 {
        assert!((rates[k] - sorted[k]).abs() < 1e-6, "{rates:?}");
    }
    // R approaches a signed permutation
    for v in &state.r {
        let a = v.abs();
        assert!(a < 1e-6 || (a - 1.0).abs() < 1e-6, "{:?}", state.r);
    }
}

#[test]
fn piecewise_constant_product_matches_direct_multiplication() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dt = 0.1;
    let gens: Vec<Matrix> = (0..3).map(|_| random_matrix(2, 1.5, &mut rng)).collect();
    for (scheme, prop) in [(SchemeKind::Midpoint, cayley as fn(&Matrix, f64) -> Matrix), (SchemeKind::Ito, taylor2)] {
        let mut state = EvolutionState::identity(2);
        let mut q = Matrix::identity(2);
        for a in &gens {
            state = step(&state, a, dt, scheme).unwrap();
            q = prop(a, dt).matmul(&q);
        }
        let back = state.reassemble().unwrap();
        assert!(back.max_abs_diff(&q) < 1e-12, "{scheme:?}: {:?} vs {:?}", back, q);
    }
}

#[test]
fn singular_midpoint_step_is_rejected() {
    let a = Matrix::from_diagonal(&[4.0, 0.0]);
    let err = step(&EvolutionState::identity(2), &a, 0.5, SchemeKind::Midpoint).unwrap_err();
    assert!(matches!(err, Error::SingularStep { .. }));
}

#[test]
fn wedge_norms_are_cumulative_sums() {
    let mut s = EvolutionState::identity(3);
    assert_eq!(wedge_norms(&s).log_e, vec![0.0; 3]);
    s.log_d = vec![2.0, 0.0, -2.0];
    s.t = 1.0;
    assert_eq!(wedge_norms(&s).log_e, vec![2.0, 2.0, 0.0]);
}

#[test]
fn wedge_norms_agree_with_gram_determinants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = EvolutionState::identity(3);
    let mut stepper = Stepper::new(3, SchemeKind::Midpoint);
    for _ in 0..100 {
        let a = random_matrix(3, 2.0, &mut rng);
        stepper.step(&mut state, a.as_slice(), 0.01).unwrap();
    }
    let direct = wedge_norms(&state).log_e;
    let gram = wedge_norms_gram(&state).unwrap().log_e;
    for (x, y) in direct.iter().zip(&gram) {
        assert!((x - y).abs() < 1e-8, "{direct:?} vs {gram:?}");
    }
}

#[test]
fn reorthonormalize_cases() {
    let eye = Matrix::identity(3);
    assert!(reorthonormalize(&eye).unwrap().max_abs_diff(&eye) < 1e-16);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let rot = random_rotation(4, &mut rng);
        assert!(reorthonormalize(&rot).unwrap().max_abs_diff(&rot) < 1e-14);
    }
    let noise = random_matrix(3, 1e-6, &mut rng);
    let mut perturbed = Matrix::identity(3);
    for (p, n) in perturbed.as_mut_slice().iter_mut().zip(noise.as_slice()) {
        *p += n;
    }
    let q = reorthonormalize(&perturbed).unwrap();
    assert!(crate::linalg::orthogonality_residual(q.as_slice(), 3) < 1e-15);
    assert!(q.max_abs_diff(&perturbed) < 2e-6);
    let singular = Matrix::from_row_major(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(matches!(reorthonormalize(&singular), Err(Error::RankDeficient { .. })));
}

#[test]
fn generator_split_has_the_required_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for d in 1..=5 {
        let a = random_matrix(d, 3.0, &mut rng);
        let r = random_rotation(d, &mut rng);
        let x = r.transpose().matmul(&a).matmul(&r);
        let g = split_generator(&x);
        // ζ_ij = X_ij + X_ji cancels against θ_ij = -X_ji up to one rounding
        assert!(g.recombine().max_abs_diff(&x) <= 4.0 * f64::EPSILON * 3.0, "recombination");
        for i in 0..d {
            assert_eq!(g.xi[i], x[(i, i)]);
            for j in 0..i {
                assert_eq!(g.theta[i * d + j], x[(i, j)]);
            }
        }
        for i in 0..d {
            assert_eq!(g.theta[i * d + i], 0.0);
            assert_eq!(g.zeta[i * d + i], 0.0);
            for j in 0..d {
                assert_eq!(g.theta[i * d + j], -g.theta[j * d + i]);
                if j < i {
                    assert_eq!(g.zeta[i * d + j], 0.0);
                }
            }
        }
    }
}

#[test]
fn state_invariants_hold_along_random_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for scheme in SchemeKind::ALL {
        let mut state = EvolutionState::identity(4);
        let mut stepper = Stepper::new(4, scheme);
        for _ in 0..2000 {
            let a = random_matrix(4, 3.0, &mut rng);
            stepper.step(&mut state, a.as_slice(), 0.01).unwrap();
            assert!(state.orthogonality_residual() <= 1e-10);
            let z = state.z.as_ref().unwrap();
            for i in 0..4 {
                assert_eq!(z[i * 4 + i], 1.0);
                for j in 0..i {
                    assert_eq!(z[i * 4 + j], 0.0);
                }
            }
        }
        assert!(state.is_finite());
    }
}

#[test]
fn factor_consistency_for_propagator_schemes() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (scheme, prop) in [(SchemeKind::Midpoint, cayley as fn(&Matrix, f64) -> Matrix), (SchemeKind::Ito, taylor2)] {
        let mut state = EvolutionState::identity(3);
        let mut q = Matrix::identity(3);
        let dt = 0.005;
        for _ in 0..1000 {
            let a = random_matrix(3, 1.5, &mut rng);
            state = step(&state, &a, dt, scheme).unwrap();
            q = prop(&a, dt).matmul(&q);
        }
        assert!(relative_diff(&state.reassemble().unwrap(), &q) < 1e-8, "{scheme:?}");
    }
}

#[test]
fn factor_consistency_for_direct_scheme() {
    // smooth deterministic generator; reference is a fine midpoint product
    let gen = |t: f64| {
        Matrix::from_row_major(
            3,
            vec![
                0.3 * t.sin(),
                1.0,
                -0.4 * t,
                -0.8 + 0.2 * t.cos(),
                0.1,
                0.5,
                0.2 * t,
                -0.6 * (2.0 * t).sin(),
                -0.4,
            ],
        )
        .unwrap()
    };
    let horizon = 2.0;
    let run = |scheme: SchemeKind, n: usize| {
        let dt = horizon / n as f64;
        let mut state = EvolutionState::identity(3);
        let mut stepper = Stepper::new(3, scheme);
        for i in 0..n {
            let a = gen((i as f64 + 0.5) * dt);
            stepper.step(&mut state, a.as_slice(), dt).unwrap();
        }
        state.reassemble().unwrap()
    };
    let reference = run(SchemeKind::Midpoint, 400_000);
    let direct = run(SchemeKind::IwasawaDirect, 40_000);
    assert!(relative_diff(&direct, &reference) < 1e-8, "{}", relative_diff(&direct, &reference));
}

#[test]
fn traceless_two_by_two_cayley_preserves_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut state = EvolutionState::identity(2);
    let mut stepper = Stepper::new(2, SchemeKind::Midpoint);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut a = random_matrix(2, 2.0, &mut rng);
        a[(1, 1)] = -a[(0, 0)];
        let before = det_residual(&state, 0.0);
        stepper.step(&mut state, a.as_slice(), 0.01).unwrap();
        worst = worst.max((det_residual(&state, 0.0) - before).abs());
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn scalar_flow_det_residual_is_second_order() {
    let mu = 0.8;
    let residual = |dt: f64| {
        let n = (2.0 / dt).round() as usize;
        let a = Matrix::from_diagonal(&[mu, mu]);
        let mut state = EvolutionState::identity(2);
        let mut stepper = Stepper::new(2, SchemeKind::Midpoint);
        for _ in 0..n {
            stepper.step(&mut state, a.as_slice(), dt).unwrap();
        }
        det_residual(&state, 2.0 * mu * n as f64 * dt).abs()
    };
    let (r1, r2) = (residual(0.02), residual(0.01));
    assert!(r1 > 0.0 && (r1 / r2 - 4.0).abs() < 0.05, "{r1} {r2}");
}
