use super::{ProcessKind, ProcessSpec};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Time-integrated connected correlator of order `n` over the flattened
/// entries of the process (`(ij) -> i*d + j`; a single index for scalars).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantTensor {
    pub order: usize,
    pub index_dim: usize,
    /// Row-major over `order` indices, each in `0..index_dim`.
    pub values: Vec<f64>,
}

impl CumulantTensor {
    pub fn zeros(order: usize, index_dim: usize) -> Self {
        Self {
            order,
            index_dim,
            values: vec![0.0; index_dim.pow(order as u32)],
        }
    }

    pub fn scalar(order: usize, value: f64) -> Self {
        Self {
            order,
            index_dim: 1,
            values: vec![value],
        }
    }

    pub fn get(&self, indices: &[usize]) -> f64 {
        self.values[self.offset(indices)]
    }

    fn offset(&self, indices: &[usize]) -> usize {
        debug_assert_eq!(indices.len(), self.order);
        indices.iter().fold(0, |acc, &i| acc * self.index_dim + i)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CumulantIntegral {
    Exact(CumulantTensor),
    /// No closed form for this (kind, order); it has to be estimated from
    /// simulated paths.
    EstimateEmpirically { order: usize },
}

impl CumulantIntegral {
    pub fn exact(&self) -> Option<&CumulantTensor> {
        match self {
            Self::Exact(t) => Some(t),
            Self::EstimateEmpirically { .. } => None,
        }
    }
}

/// `ν · C(1/2, k) · (σ/ν)^{2k} · (2k)!` is the order-`2k` integral of the
/// telegraph process; odd orders vanish.
pub fn telegraph_cumulant_integral(sigma: f64, nu: f64, order: usize) -> f64 {
    if order % 2 == 1 {
        return 0.0;
    }
    let k = order / 2;
    let mut binom = 1.0;
    for i in 0..k {
        binom *= (0.5 - i as f64) / (i as f64 + 1.0);
    }
    let factorial: f64 = (1..=order).map(|i| i as f64).product();
    nu * binom * (sigma / nu).powi(2 * k as i32) * factorial
}

pub fn cumulant_integrals(spec: &ProcessSpec, max_order: usize) -> Result<Vec<CumulantIntegral>> {
    if max_order == 0 {
        return Err(invalid("max_order", "must be at least 1"));
    }
    spec.validate()?;
    let d = spec.dim();
    let out = (1..=max_order)
        .map(|n| match &spec.kind {
            ProcessKind::GaussianIsotropicMatrix { kernel, shape, .. } => {
                if n == 2 {
                    let mut t = CumulantTensor::zeros(2, d * d);
                    let scale = shape.integral();
                    t.values = kernel.covariance(d).into_iter().map(|v| v * scale).collect();
                    CumulantIntegral::Exact(t)
                } else {
                    CumulantIntegral::Exact(CumulantTensor::zeros(n, d * d))
                }
            }
            ProcessKind::ModulatedGaussianMatrix {
                kernel, shape, envelope, ..
            } => {
                if n % 2 == 1 {
                    // A -> -A leaves the law invariant.
                    CumulantIntegral::Exact(CumulantTensor::zeros(n, d * d))
                } else if n == 2 {
                    // ∫ <g(0) g(u)> Φ(u) du with <g g> = 1 + m² e^{-|u|/τ}
                    let eps = shape.epsilon;
                    let tau = envelope.correlation_time;
                    let factor = 1.0 + envelope.amplitude.powi(2) * tau / (tau + eps);
                    let mut t = CumulantTensor::zeros(2, d * d);
                    t.values = kernel.covariance(d).into_iter().map(|v| v * factor).collect();
                    CumulantIntegral::Exact(t)
                } else {
                    CumulantIntegral::EstimateEmpirically { order: n }
                }
            }
            ProcessKind::ScalarOu {
                mean, variance_integral, ..
            } => CumulantIntegral::Exact(CumulantTensor::scalar(
                n,
                match n {
                    1 => *mean,
                    2 => *variance_integral,
                    _ => 0.0,
                },
            )),
            ProcessKind::ScalarTelegraph { sigma, nu } => {
                CumulantIntegral::Exact(CumulantTensor::scalar(n, telegraph_cumulant_integral(*sigma, *nu, n)))
            }
            ProcessKind::ConstantMatrix { matrix, .. } => {
                if n == 1 {
                    CumulantIntegral::Exact(CumulantTensor {
                        order: 1,
                        index_dim: d * d,
                        values: matrix.clone(),
                    })
                } else {
                    CumulantIntegral::Exact(CumulantTensor::zeros(n, d * d))
                }
            }
        })
        .collect();
    Ok(out)
}

/// Scaled cumulant-generating function of the `±σ` telegraph process with
/// switching rate `ν`: the top eigenvalue of the tilted generator
/// `[[ησ - ν, ν], [ν, -ησ - ν]]`.
pub fn telegraph_cgf_oracle(sigma: f64, nu: f64, eta: f64) -> f64 {
    let (p, q, r) = (eta * sigma - nu, nu, -eta * sigma - nu);
    let mid = 0.5 * (p + r);
    let half_gap = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    mid + half_gap
}

/// `(1/T) ln <exp(η ∫₀ᵀ ξ dt)>` for the stationary telegraph process,
/// from the exact 2×2 propagator of the tilted generator.
pub fn telegraph_finite_time_cgf(sigma: f64, nu: f64, eta: f64, horizon: f64) -> f64 {
    let x = eta * sigma;
    let root = (nu * nu + x * x).sqrt();
    let top = -nu + root;
    let bottom = -nu - root;
    // eigenvector of the top eigenvalue: (nu, root - x) up to scale
    let (v0, v1) = (nu, root - x);
    let (u0, u1) = (x - root, nu);
    let overlap = |a: f64, b: f64| {
        let norm2 = a * a + b * b;
        // <π| v><v|1> / |v|² with π = (1/2, 1/2)
        if norm2 == 0.0 {
            0.0
        } else {
            0.5 * (a + b) * (a + b) / norm2
        }
    };
    let (ct, cb) = if x == 0.0 { (1.0, 0.0) } else { (overlap(v0, v1), overlap(u0, u1)) };
    // ln(ct e^{top T} + cb e^{bottom T})
    let ln_moment = top * horizon + (ct + cb * ((bottom - top) * horizon).exp()).ln();
    ln_moment / horizon
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{Envelope, IsotropicKernel};

    #[test]
    fn telegraph_oracle_values() {
        assert_eq!(telegraph_cgf_oracle(1.0, 1.0, 0.0), 0.0);
        assert!((telegraph_cgf_oracle(1.0, 1.0, 1.0) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let big = 1e8;
        assert!((telegraph_cgf_oracle(2.0, 1.0, big) / big - 2.0).abs() < 1e-7);
        for &eta in &[-2.0, -0.3, 0.7, 3.0] {
            let closed = -1.5 + (1.5f64 * 1.5 + 0.49 * eta * eta).sqrt();
            assert!((telegraph_cgf_oracle(0.7, 1.5, eta) - closed).abs() < 1e-14);
        }
    }

    #[test]
    fn telegraph_finite_time_converges_to_oracle() {
        let w = telegraph_cgf_oracle(1.0, 1.0, 1.5);
        let err20 = (telegraph_finite_time_cgf(1.0, 1.0, 1.5, 20.0) - w).abs();
        let err40 = (telegraph_finite_time_cgf(1.0, 1.0, 1.5, 40.0) - w).abs();
        assert!(err40 < err20 && (err20 / err40 - 2.0).abs() < 0.01);
        assert_eq!(telegraph_finite_time_cgf(1.0, 1.0, 0.0, 5.0), 0.0);
    }

    #[test]
    fn telegraph_finite_time_short_horizon_matches_second_order() {
        // for T -> 0 the log-moment is ≈ η² σ² T² / 2
        let t = 1e-3;
        let v = telegraph_finite_time_cgf(1.0, 1.0, 1.0, t) * t;
        assert!((v - 0.5 * t * t).abs() < 1e-8);
    }

    #[test]
    fn telegraph_integrals_match_finite_differences() {
        let (s, nu) = (1.3, 0.8);
        let h = 1e-2;
        let f = |e: f64| telegraph_cgf_oracle(s, nu, e);
        let second = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!((second - telegraph_cumulant_integral(s, nu, 2)).abs() < 1e-3);
        assert!((telegraph_cumulant_integral(s, nu, 2) - s * s / nu).abs() < 1e-14);
        let fourth = (f(2.0 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h)) / h.powi(4);
        let c4 = telegraph_cumulant_integral(s, nu, 4);
        assert!((fourth - c4).abs() < 1e-2 * c4.abs(), "{fourth} vs {c4}");
        assert!((c4 + 3.0 * s.powi(4) / nu.powi(3)).abs() < 1e-12);
        assert_eq!(telegraph_cumulant_integral(s, nu, 3), 0.0);
    }

    #[test]
    fn gaussian_matrix_cumulants() {
        let k = IsotropicKernel::traceless(0.5, 0.5, 3);
        let spec = ProcessSpec::gaussian(3, k, 0.1, 0);
        let c = cumulant_integrals(&spec, 4).unwrap();
        assert!(c[0].exact().unwrap().is_zero());
        assert_eq!(c[1].exact().unwrap().values, k.covariance(3));
        assert!(c[2].exact().unwrap().is_zero());
        assert!(c[3].exact().unwrap().is_zero());
    }

    #[test]
    fn scalar_cumulants() {
        let ou = cumulant_integrals(&ProcessSpec::scalar_ou(0.2, 0), 3).unwrap();
        assert_eq!(ou[0].exact().unwrap().get(&[0]), 0.0);
        assert_eq!(ou[1].exact().unwrap().get(&[0, 0]), 1.0);
        let tel = cumulant_integrals(&ProcessSpec::telegraph(2.0, 0.5, 0), 2).unwrap();
        assert_eq!(tel[0].exact().unwrap().get(&[0]), 0.0);
        assert!((tel[1].exact().unwrap().get(&[0, 0]) - 8.0).abs() < 1e-12);
        assert!(cumulant_integrals(&ProcessSpec::scalar_ou(0.2, 0), 0).is_err());
    }

    #[test]
    fn modulated_higher_even_orders_are_flagged() {
        let spec = ProcessSpec::modulated(
            2,
            IsotropicKernel::traceless(0.5, 0.5, 2),
            0.05,
            Envelope {
                amplitude: 0.5,
                correlation_time: 1.0,
            },
            0,
        );
        let c = cumulant_integrals(&spec, 4).unwrap();
        assert!(c[0].exact().unwrap().is_zero());
        assert!(c[2].exact().unwrap().is_zero());
        assert_eq!(c[3], CumulantIntegral::EstimateEmpirically { order: 4 });
        let k2 = c[1].exact().unwrap();
        let factor = 1.0 + 0.25 * 1.0 / 1.05;
        assert!((k2.get(&[0, 0]) - 0.5 * factor).abs() < 1e-14);
    }
}
