//! Closed-form predictions and convex-analysis tools.
//!
//! The central identity: with `w_α` the scaled cumulant-generating function
//! of the diagonal noise entries, the generalized Lyapunov exponent is
//! `w(η) = w_α(η + η₀) - w_α(η₀)` with `(η₀)_k = (d+1)/2 - k`.

mod cgf;
mod convex;
mod delta;
mod fn_check;

pub use cgf::{gle_shift, CgfModel, CgfTable, ShiftedCgf};
pub use convex::{
    convex_hull_values, is_convex, legendre_transform, legendre_transform_product, lower_hull_vertices, secant_bound,
    LegendreTable,
};
pub use delta::{effective_delta_model, DeltaOrder, EffectiveDeltaModel, OrderSource, StratonovichLimit};
pub use fn_check::{fn_delta_scalar_check, FnCheckOptions, FnCheckReport};

use crate::processes::IsotropicKernel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eta0 {
    pub dim: usize,
    pub values: Vec<f64>,
}

/// `(η₀)_k = (d+1)/2 - k`, `k = 1 … d`.
pub fn eta0(d: usize) -> Eta0 {
    let mid = 0.5 * (d as f64 + 1.0);
    Eta0 {
        dim: d,
        values: (1..=d).map(|k| mid - k as f64).collect(),
    }
}

/// `w_α` of the diagonal entries of an isotropic Gaussian process:
/// `½ Σ_kp ((b+c) δ_kp - a) η_k η_p`.
pub fn gaussian_diagonal_cgf(kernel: &IsotropicKernel, d: usize) -> CgfModel {
    let bc = kernel.b_plus_c();
    let hessian = (0..d * d)
        .map(|i| if i / d == i % d { bc - kernel.a } else { -kernel.a })
        .collect();
    CgfModel::Quadratic {
        linear: vec![0.0; d],
        hessian,
    }
}

/// `w(η) = (b+c) Σ_k η₀_k η_k + ½ Σ_kp ((b+c) δ_kp - a) η_k η_p`.
pub fn analytic_gle_gaussian(kernel: &IsotropicKernel, d: usize, eta: &[f64]) -> f64 {
    let bc = kernel.b_plus_c();
    let e0 = eta0(d).values;
    let linear: f64 = e0.iter().zip(eta).map(|(a, b)| a * b).sum();
    let sq: f64 = eta.iter().map(|e| e * e).sum();
    let total: f64 = eta.iter().sum();
    bc * linear + 0.5 * (bc * sq - kernel.a * total * total)
}

/// Gradient of [`analytic_gle_gaussian`] at `η = 0`: `λ_k = (b+c)((d+1)/2 - k)`.
pub fn analytic_lyapunov_gaussian(kernel: &IsotropicKernel, d: usize) -> Vec<f64> {
    let bc = kernel.b_plus_c();
    eta0(d).values.into_iter().map(|e| bc * e).collect()
}
