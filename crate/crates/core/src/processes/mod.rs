//! Stationary noise processes driving the linear system.
//!
//! All Gaussian modes are unit-integral Ornstein–Uhlenbeck processes with
//! correlation `Φ(t) = e^{-|t|/ε} / (2ε)`, stepped exactly, and every path
//! starts from the stationary law.

mod cumulants;
mod kernel;
mod sampler;

pub use cumulants::{
    cumulant_integrals, telegraph_cgf_oracle, telegraph_cumulant_integral, telegraph_finite_time_cgf,
    CumulantIntegral, CumulantTensor,
};
pub use kernel::{kernel_validate, IsotropicKernel, KernelReport};
pub use sampler::{sample_path, NoiseSampler, SamplePath};

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    #[default]
    Exponential,
}

/// Time profile `Φ` of the correlator, normalized to `∫Φ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationShape {
    #[serde(default)]
    pub kind: ShapeKind,
    pub epsilon: f64,
}

impl CorrelationShape {
    pub fn exponential(epsilon: f64) -> Self {
        Self {
            kind: ShapeKind::Exponential,
            epsilon,
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        match self.kind {
            ShapeKind::Exponential => (-t.abs() / self.epsilon).exp() / (2.0 * self.epsilon),
        }
    }

    /// `∫ Φ(t) dt` in closed form.
    pub fn integral(&self) -> f64 {
        match self.kind {
            ShapeKind::Exponential => 1.0,
        }
    }

    /// One-step autoregression factor and innovation standard deviation of
    /// a unit-integral mode.
    pub fn ar1(&self, dt: f64) -> (f64, f64) {
        match self.kind {
            ShapeKind::Exponential => {
                let rho = (-dt / self.epsilon).exp();
                let var = (-(-2.0 * dt / self.epsilon).exp_m1()) * self.phi(0.0);
                (rho, var.sqrt())
            }
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(invalid("epsilon", format!("must be positive and finite, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Two-level positive envelope `g(t) = 1 + m s(t)` where `s = ±1` is a
/// telegraph process with correlation time `τ`, i.e. switching rate `1/(2τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub amplitude: f64,
    pub correlation_time: f64,
}

impl Envelope {
    pub fn switching_rate(&self) -> f64 {
        0.5 / self.correlation_time
    }

    fn check(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.amplitude) {
            return Err(invalid("envelope.amplitude", "must lie in [0, 1) to keep g positive"));
        }
        if !(self.correlation_time > 0.0) {
            return Err(invalid("envelope.correlation_time", "must be positive"));
        }
        Ok(())
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcessKind {
    GaussianIsotropicMatrix {
        dim: usize,
        kernel: IsotropicKernel,
        shape: CorrelationShape,
    },
    /// `A(t) = g(t) B(t)` with `B` isotropic Gaussian and `g` an independent
    /// [`Envelope`]. Conjugation only touches `B`, so the law stays isotropic
    /// while cumulants of every even order are nonzero.
    ModulatedGaussianMatrix {
        dim: usize,
        kernel: IsotropicKernel,
        shape: CorrelationShape,
        envelope: Envelope,
    },
    /// `ξ = mean + sqrt(variance_integral) u` with `u` a unit-integral OU mode.
    ScalarOu {
        shape: CorrelationShape,
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        variance_integral: f64,
    },
    /// Two-state `±σ` Markov process switching at rate `ν`.
    ScalarTelegraph { sigma: f64, nu: f64 },
    /// Deterministic `A(t) = M`, row-major.
    ConstantMatrix { dim: usize, matrix: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    #[serde(default)]
    pub master_seed: u64,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, master_seed: u64) -> Self {
        Self { kind, master_seed }
    }

    pub fn gaussian(dim: usize, kernel: IsotropicKernel, epsilon: f64, master_seed: u64) -> Self {
        Self::new(
            ProcessKind::GaussianIsotropicMatrix {
                dim,
                kernel,
                shape: CorrelationShape::exponential(epsilon),
            },
            master_seed,
        )
    }

    pub fn modulated(dim: usize, kernel: IsotropicKernel, epsilon: f64, envelope: Envelope, master_seed: u64) -> Self {
        Self::new(
            ProcessKind::ModulatedGaussianMatrix {
                dim,
                kernel,
                shape: CorrelationShape::exponential(epsilon),
                envelope,
            },
            master_seed,
        )
    }

    pub fn scalar_ou(epsilon: f64, master_seed: u64) -> Self {
        Self::new(
            ProcessKind::ScalarOu {
                shape: CorrelationShape::exponential(epsilon),
                mean: 0.0,
                variance_integral: 1.0,
            },
            master_seed,
        )
    }

    pub fn telegraph(sigma: f64, nu: f64, master_seed: u64) -> Self {
        Self::new(ProcessKind::ScalarTelegraph { sigma, nu }, master_seed)
    }

    pub fn constant(dim: usize, matrix: Vec<f64>) -> Self {
        Self::new(ProcessKind::ConstantMatrix { dim, matrix }, 0)
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ProcessKind::GaussianIsotropicMatrix { dim, .. }
            | ProcessKind::ModulatedGaussianMatrix { dim, .. }
            | ProcessKind::ConstantMatrix { dim, .. } => *dim,
            ProcessKind::ScalarOu { .. } | ProcessKind::ScalarTelegraph { .. } => 1,
        }
    }

    pub fn kernel(&self) -> Option<&IsotropicKernel> {
        match &self.kind {
            ProcessKind::GaussianIsotropicMatrix { kernel, .. }
            | ProcessKind::ModulatedGaussianMatrix { kernel, .. } => Some(kernel),
            _ => None,
        }
    }

    /// Correlation time of the driving Gaussian modes (or of the telegraph
    /// process); zero for deterministic kinds.
    pub fn correlation_time(&self) -> f64 {
        match &self.kind {
            ProcessKind::GaussianIsotropicMatrix { shape, .. }
            | ProcessKind::ModulatedGaussianMatrix { shape, .. }
            | ProcessKind::ScalarOu { shape, .. } => shape.epsilon,
            ProcessKind::ScalarTelegraph { nu, .. } => 0.5 / nu,
            ProcessKind::ConstantMatrix { .. } => 0.0,
        }
    }

    pub fn is_traceless(&self) -> bool {
        match &self.kind {
            ProcessKind::GaussianIsotropicMatrix { dim, kernel, .. }
            | ProcessKind::ModulatedGaussianMatrix { dim, kernel, .. } => kernel.validate(*dim).trace_sector_zero,
            ProcessKind::ConstantMatrix { dim, matrix } => (0..*dim).map(|i| matrix[i * dim + i]).sum::<f64>() == 0.0,
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProcessKind::GaussianIsotropicMatrix { dim, kernel, shape }
            | ProcessKind::ModulatedGaussianMatrix { dim, kernel, shape, .. } => {
                if *dim == 0 {
                    return Err(invalid("dim", "must be at least 1"));
                }
                shape.check()?;
                let report = kernel.validate(*dim);
                if !report.valid() {
                    return Err(Error::InvalidKernel {
                        dim: *dim,
                        reason: report.describe_failure(),
                    });
                }
                if let ProcessKind::ModulatedGaussianMatrix { envelope, .. } = &self.kind {
                    envelope.check()?;
                }
            }
            ProcessKind::ScalarOu {
                shape,
                variance_integral,
                mean,
            } => {
                shape.check()?;
                if !(*variance_integral >= 0.0) || !mean.is_finite() {
                    return Err(invalid("variance_integral", "must be nonnegative with a finite mean"));
                }
            }
            ProcessKind::ScalarTelegraph { sigma, nu } => {
                if !(*nu > 0.0) {
                    return Err(invalid("nu", "switching rate must be positive"));
                }
                if !sigma.is_finite() {
                    return Err(invalid("sigma", "must be finite"));
                }
            }
            ProcessKind::ConstantMatrix { dim, matrix } => {
                if *dim == 0 || matrix.len() != dim * dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim * dim,
                        got: matrix.len(),
                    });
                }
                if !matrix.iter().all(|v| v.is_finite()) {
                    return Err(invalid("matrix", "entries must be finite"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_shape_is_even_and_unit_integral() {
        let s = CorrelationShape::exponential(0.3);
        assert_eq!(s.phi(0.7), s.phi(-0.7));
        // trapezoid over a wide window
        let h = 1e-4;
        let n = 200_000;
        let num: f64 = (0..=n)
            .map(|i| {
                let t = -10.0 + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * s.phi(t)
            })
            .sum::<f64>()
            * h;
        assert!((num - s.integral()).abs() < 1e-6);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ProcessSpec::modulated(
            2,
            IsotropicKernel::traceless(0.5, 0.5, 2),
            0.05,
            Envelope {
                amplitude: 0.5,
                correlation_time: 1.0,
            },
            99,
        );
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"modulated-gaussian-matrix\""));
        let back: ProcessSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_kernel_is_rejected() {
        let spec = ProcessSpec::gaussian(2, IsotropicKernel::new(0.0, 0.0, 1.0), 0.1, 0);
        assert!(matches!(spec.validate(), Err(Error::InvalidKernel { .. })));
    }
}
