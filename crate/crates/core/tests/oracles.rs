//! Cross-checks against nalgebra's dense linear algebra.

use approx::assert_abs_diff_eq;
use lyapunov_lab::evolution::{step, wedge_norms, EvolutionState, SchemeKind};
use lyapunov_lab::linalg::Matrix;
use nalgebra::DMatrix;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

fn generic_generator(d: usize) -> Matrix {
    let data = (0..d * d).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.45).collect();
    Matrix::from_row_major(d, data).unwrap()
}

/// Positive-diagonal QR from nalgebra.
fn iwasawa_diag(q: &DMatrix<f64>) -> Vec<f64> {
    let qr = q.clone().qr();
    qr.r().diagonal().iter().map(|v| v.abs().ln()).collect()
}

#[test]
fn factorization_matches_nalgebra_qr() {
    for d in 2..6 {
        let q = generic_generator(d).matmul(&generic_generator(d)).transpose();
        let mut q = q;
        for i in 0..d {
            q[(i, i)] += 2.0;
        }
        let state = EvolutionState::from_matrix(&q, true).unwrap();
        let expect = iwasawa_diag(&to_na(&q));
        for (a, b) in state.log_d.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let back = state.reassemble().unwrap();
        assert!(back.max_abs_diff(&q) < 1e-12);
    }
}

#[test]
fn constant_generator_converges_to_matrix_exponential() {
    let d = 3;
    let a = generic_generator(d);
    let t_end = 2.0;
    let exact = iwasawa_diag(&(to_na(&a) * t_end).exp());
    let mut errors = Vec::new();
    for n in [200usize, 400] {
        let dt = t_end / n as f64;
        for scheme in SchemeKind::ALL {
            let mut s = EvolutionState::identity(d);
            for _ in 0..n {
                s = step(&s, &a, dt, scheme).unwrap();
            }
            let err = s.log_d.iter().zip(&exact).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err < 1e-3, "{scheme:?} n={n}: {err}");
            if scheme == SchemeKind::Midpoint {
                errors.push(err);
            }
        }
    }
    assert!(errors[0] / errors[1] > 3.5, "{errors:?}");
}

#[test]
fn wedge_norms_match_gram_determinants() {
    let d = 4;
    let mut q = generic_generator(d);
    for i in 0..d {
        q[(i, i)] += 1.5;
    }
    let state = EvolutionState::from_matrix(&q, true).unwrap();
    let log_e = wedge_norms(&state).log_e;
    let qn = to_na(&q);
    for k in 1..=d {
        let cols = qn.columns(0, k).into_owned();
        let gram = cols.transpose() * &cols;
        assert_abs_diff_eq!(log_e[k - 1], 0.5 * gram.determinant().ln(), epsilon = 1e-11);
    }
}
