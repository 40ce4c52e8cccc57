//! Browser bindings: closed-form GLE surfaces, the telegraph CGF and its
//! rate function, and a small Lyapunov-spectrum Monte Carlo.
//!
//! Each export returns a flat `Float64Array`; the layout is given on the
//! function. The plain-Rust functions underneath are what the tests call.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use lyapunov_lab::analytics::{analytic_gle_gaussian, analytic_lyapunov_gaussian, legendre_transform};
use lyapunov_lab::estimators::{estimate_le, LeOptions};
use lyapunov_lab::evolution::SchemeKind;
use lyapunov_lab::processes::{kernel_validate, telegraph_cgf_oracle, IsotropicKernel, ProcessSpec};
use wasm_bindgen::prelude::*;

fn kernel(b: f64, c: f64, traceless: bool, a: f64, d: usize) -> IsotropicKernel {
    if traceless {
        IsotropicKernel::traceless(b, c, d)
    } else {
        IsotropicKernel::new(a, b, c)
    }
}

/// `[λ_1..λ_d, w(η) row-major over an n×n grid on [-r, r]²]` for d = 2.
pub fn gaussian_surface(a: f64, b: f64, c: f64, traceless: bool, n: usize, r: f64) -> Result<Vec<f64>, String> {
    let k = kernel(b, c, traceless, a, 2);
    let report = kernel_validate(&k, 2);
    if !report.valid() {
        return Err(report.describe_failure());
    }
    if n < 2 || !(r > 0.0) {
        return Err("need n >= 2 and r > 0".into());
    }
    let mut out = analytic_lyapunov_gaussian(&k, 2);
    let step = 2.0 * r / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            let eta = [-r + i as f64 * step, -r + j as f64 * step];
            out.push(analytic_gle_gaussian(&k, 2, &eta));
        }
    }
    Ok(out)
}

/// `[η (n), w(η) (n), a (n), J(a) (n)]` with η on [-3, 3] and a on
/// `[-0.99 σ, 0.99 σ]`.
pub fn telegraph_rate(sigma: f64, nu: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(sigma > 0.0 && nu > 0.0) || n < 3 {
        return Err("need sigma > 0, nu > 0 and n >= 3".into());
    }
    let n_eta = 8 * (n - 1) + 1;
    let eta: Vec<f64> = (0..n_eta).map(|i| -3.0 + 6.0 * i as f64 / (n_eta - 1) as f64).collect();
    let w: Vec<f64> = eta.iter().map(|e| telegraph_cgf_oracle(sigma, nu, *e)).collect();
    let a: Vec<f64> = (0..n).map(|i| sigma * (-0.99 + 1.98 * i as f64 / (n - 1) as f64)).collect();
    let j = legendre_transform(&eta, &w, &a).map_err(|e| e.to_string())?;
    let coarse = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| v[i * 8]).collect() };
    Ok([coarse(&eta), coarse(&w), a, j.values].concat())
}

/// `[λ_1..λ_d, stderr_1..stderr_d]` from `n` realizations of length `t`
/// with `dt = ε / 10`.
pub fn lyapunov_mc(d: usize, b: f64, c: f64, epsilon: f64, t: f64, n: usize, seed: u64) -> Result<Vec<f64>, String> {
    if !(2..=6).contains(&d) || !(2..=500).contains(&n) || !(t > 0.0 && t <= 200.0) {
        return Err("need 2 <= d <= 6, 2 <= n <= 500 and 0 < T <= 200".into());
    }
    let spec = ProcessSpec::gaussian(d, IsotropicKernel::traceless(b, c, d), epsilon, seed);
    let opts = LeOptions {
        workers: Some(1),
        ..LeOptions::default()
    };
    let est = estimate_le(&spec, SchemeKind::Midpoint, epsilon / 10.0, t, n, &opts).map_err(|e| e.to_string())?;
    Ok([est.lambda, est.stderr].concat())
}

#[wasm_bindgen(js_name = gaussianSurface)]
pub fn gaussian_surface_js(a: f64, b: f64, c: f64, traceless: bool, n: usize, r: f64) -> Result<Vec<f64>, JsValue> {
    gaussian_surface(a, b, c, traceless, n, r).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = telegraphRate)]
pub fn telegraph_rate_js(sigma: f64, nu: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    telegraph_rate(sigma, nu, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lyapunovMc)]
pub fn lyapunov_mc_js(d: usize, b: f64, c: f64, epsilon: f64, t: f64, n: usize, seed: u32) -> Result<Vec<f64>, JsValue> {
    lyapunov_mc(d, b, c, epsilon, t, n, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_layout_and_values() {
        let s = gaussian_surface(0.0, 0.5, 0.5, true, 3, 1.0).unwrap();
        assert_eq!(s.len(), 2 + 9);
        assert!((s[0] - 0.5).abs() < 1e-12 && (s[1] + 0.5).abs() < 1e-12);
        // grid point (1, 0) is row 2, column 1
        assert!((s[2 + 2 * 3 + 1] - 0.75).abs() < 1e-12);
        assert_eq!(s[2 + 4], 0.0);
        assert!(gaussian_surface(0.0, -1.0, 0.0, false, 3, 1.0).is_err());
    }

    #[test]
    fn telegraph_rate_is_zero_at_the_mean() {
        let n = 21;
        let v = telegraph_rate(1.0, 1.0, n).unwrap();
        let (a, j) = (&v[2 * n..3 * n], &v[3 * n..]);
        assert!(a[10].abs() < 1e-12);
        assert!(j[10].abs() < 1e-9);
        assert!(j.iter().all(|x| *x >= -1e-12));
    }

    #[test]
    fn small_monte_carlo_sums_to_zero() {
        let v = lyapunov_mc(2, 0.5, 0.5, 0.1, 5.0, 4, 3).unwrap();
        assert_eq!(v.len(), 4);
        assert!((v[0] + v[1]).abs() < 1e-8);
        assert!(lyapunov_mc(9, 0.5, 0.5, 0.1, 5.0, 4, 3).is_err());
    }
}
