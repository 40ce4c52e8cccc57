use serde::{Deserialize, Serialize};

/// Relative tolerance used to decide that a sector variance is exactly zero.
const ZERO_TOL: f64 = 1e-12;

/// Second-order correlator of an isotropic matrix process,
/// `K_(ij)(kp) = -a δ_ij δ_kp + b δ_ik δ_jp + c δ_ip δ_jk`.
///
/// In the orthogonal decomposition of `d×d` matrices into trace,
/// symmetric-traceless and antisymmetric parts, `K` acts as multiplication by
/// `b + c - a d`, `b + c` and `b - c` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotropicKernel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default)]
    pub traceless: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub dim: usize,
    pub antisymmetric_variance: f64,
    pub symmetric_variance: f64,
    pub trace_variance: f64,
    pub antisymmetric_ok: bool,
    pub symmetric_ok: bool,
    pub trace_ok: bool,
    /// `b + c - a d` vanishes to rounding.
    pub trace_sector_zero: bool,
    /// The `traceless` flag agrees with `trace_sector_zero`.
    pub traceless_consistent: bool,
}

impl KernelReport {
    pub fn valid(&self) -> bool {
        self.antisymmetric_ok && self.symmetric_ok && self.trace_ok && self.traceless_consistent
    }

    pub fn describe_failure(&self) -> String {
        let mut parts = Vec::new();
        if !self.antisymmetric_ok {
            parts.push(format!("b - c = {} < 0", self.antisymmetric_variance));
        }
        if !self.symmetric_ok {
            parts.push(format!("b + c = {} < 0", self.symmetric_variance));
        }
        if !self.trace_ok {
            parts.push(format!("b + c - a d = {} < 0", self.trace_variance));
        }
        if !self.traceless_consistent {
            parts.push(format!(
                "traceless flag requires b + c - a d = 0, found {}",
                self.trace_variance
            ));
        }
        parts.join("; ")
    }
}

impl IsotropicKernel {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self {
            a,
            b,
            c,
            traceless: false,
        }
    }

    /// Traceless kernel: `a` is fixed by `b + c - a d = 0`.
    pub fn traceless(b: f64, c: f64, dim: usize) -> Self {
        Self {
            a: (b + c) / dim as f64,
            b,
            c,
            traceless: true,
        }
    }

    /// Independent identically distributed entries with variance `b`.
    pub fn iid(b: f64) -> Self {
        Self::new(0.0, b, 0.0)
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn b_plus_c(&self) -> f64 {
        self.b + self.c
    }

    pub fn sector_variances(&self, dim: usize) -> (f64, f64, f64) {
        let d = dim as f64;
        (self.b - self.c, self.b + self.c, self.b + self.c - self.a * d)
    }

    /// Covariance of the flattened matrix (`(ij) -> i*d + j`), a symmetric
    /// `d² × d²` row-major matrix.
    pub fn covariance(&self, dim: usize) -> Vec<f64> {
        let n = dim * dim;
        let mut out = vec![0.0; n * n];
        let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for p in 0..dim {
                        out[(i * dim + j) * n + k * dim + p] = -self.a * delta(i, j) * delta(k, p)
                            + self.b * delta(i, k) * delta(j, p)
                            + self.c * delta(i, p) * delta(j, k);
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self, dim: usize) -> KernelReport {
        kernel_validate(self, dim)
    }
}

/// Checks the three sector inequalities. A negative sector variance is
/// exactly a negative eigenvalue of [`IsotropicKernel::covariance`].
pub fn kernel_validate(kernel: &IsotropicKernel, dim: usize) -> KernelReport {
    let (anti, sym, tr) = kernel.sector_variances(dim);
    let scale = kernel.a.abs() * dim as f64 + kernel.b.abs() + kernel.c.abs();
    let tol = ZERO_TOL * scale.max(f64::MIN_POSITIVE);
    let trace_sector_zero = tr.abs() <= tol;
    KernelReport {
        dim,
        antisymmetric_variance: anti,
        symmetric_variance: sym,
        trace_variance: tr,
        antisymmetric_ok: anti >= -tol,
        symmetric_ok: sym >= -tol,
        trace_ok: tr >= -tol,
        trace_sector_zero,
        traceless_consistent: !kernel.traceless || trace_sector_zero,
    }
}
