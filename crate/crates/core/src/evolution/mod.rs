//! Integration of `dQ/dt = A(t) Q` in Iwasawa coordinates `Q = R D Z`.
//!
//! `D` is carried as `log D`, so horizons where `λ₁ T` is in the hundreds
//! never overflow. `R` is re-orthonormalized on every step. `Z` is optional
//! because nothing in `log D` depends on it.

mod split;
mod trajectory;

pub use split::{split_generator, IwasawaGenerator};
pub use trajectory::{evolve_path, evolve_path_substepped, PathEvolution, TrajectoryRecord, TrajectoryRow};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix};
use serde::{Deserialize, Serialize};

/// Z entries beyond this magnitude switch Z tracking off.
pub const Z_RANGE_LIMIT: f64 = 1e150;

/// Dimension up to which Z is tracked by default.
pub const Z_TRACKING_MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// `Q⁺ = (I - A dt/2)⁻¹ (I + A dt/2) Q`, then re-factor.
    #[default]
    Midpoint,
    /// `Q⁺ = (I + A dt + A² dt²/2) Q`, then re-factor.
    Ito,
    /// Explicit midpoint rule on the Iwasawa component equations.
    IwasawaDirect,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Midpoint, SchemeKind::Ito, SchemeKind::IwasawaDirect];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Midpoint => "midpoint",
            Self::Ito => "ito",
            Self::IwasawaDirect => "iwasawa-direct",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Self::Midpoint),
            "ito" => Ok(Self::Ito),
            "iwasawa-direct" => Ok(Self::IwasawaDirect),
            other => Err(invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// `Q(t) = R · diag(exp log_d) · Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionState {
    pub dim: usize,
    /// Orthogonal factor, row-major.
    pub r: Vec<f64>,
    pub log_d: Vec<f64>,
    /// Upper unipotent factor, row-major; `None` when not tracked.
    pub z: Option<Vec<f64>>,
    pub t: f64,
}

/// `log E_k = log ‖Q e₁ ∧ … ∧ Q e_k‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeNorms {
    pub log_e: Vec<f64>,
}

impl EvolutionState {
    pub fn identity(dim: usize) -> Self {
        Self::identity_with_z(dim, dim <= Z_TRACKING_MAX_DIM)
    }

    pub fn identity_with_z(dim: usize, track_z: bool) -> Self {
        let eye = Matrix::identity(dim).into_vec();
        Self {
            dim,
            r: eye.clone(),
            log_d: vec![0.0; dim],
            z: track_z.then_some(eye),
            t: 0.0,
        }
    }

    /// Iwasawa factors of an arbitrary invertible `Q`.
    pub fn from_matrix(q: &Matrix, track_z: bool) -> Result<Self> {
        let d = q.dim();
        let mut r = q.as_slice().to_vec();
        let mut u = vec![0.0; d * d];
        linalg::qr_in_place(&mut r, &mut u, d)?;
        let log_d = (0..d).map(|i| u[i * d + i].ln()).collect();
        let z = track_z.then(|| {
            let mut z = u.clone();
            for i in 0..d {
                let di = u[i * d + i];
                for j in 0..d {
                    z[i * d + j] /= di;
                }
            }
            z
        });
        Ok(Self {
            dim: d,
            r,
            log_d,
            z,
            t: 0.0,
        })
    }

    pub fn orthogonality_residual(&self) -> f64 {
        linalg::orthogonality_residual(&self.r, self.dim)
    }

    /// `R · diag(exp log D) · Z`; only meaningful while `log D` is moderate.
    pub fn reassemble(&self) -> Option<Matrix> {
        let d = self.dim;
        let z = self.z.as_ref()?;
        let mut dz = vec![0.0; d * d];
        for i in 0..d {
            let di = self.log_d[i].exp();
            for j in 0..d {
                dz[i * d + j] = di * z[i * d + j];
            }
        }
        let mut q = vec![0.0; d * d];
        linalg::matmul_into(&self.r, &dz, &mut q, d);
        Matrix::from_row_major(d, q).ok()
    }

    pub fn is_finite(&self) -> bool {
        self.log_d.iter().all(|v| v.is_finite()) && self.r.iter().all(|v| v.is_finite())
    }

    pub fn wedge_norms(&self) -> WedgeNorms {
        wedge_norms(self)
    }
}

pub fn wedge_norms(state: &EvolutionState) -> WedgeNorms {
    let log_e = state
        .log_d
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    WedgeNorms { log_e }
}

/// `log E_k` from Gram determinants of the leading columns of the
/// reassembled `Q`. Independent of the cumulative-sum route; only usable
/// while `Q` is representable.
pub fn wedge_norms_gram(state: &EvolutionState) -> Option<WedgeNorms> {
    let q = state.reassemble()?;
    let d = state.dim;
    let log_e = (1..=d)
        .map(|k| {
            // Gram matrix of columns 0..k, determinant by elimination
            let mut g = vec![0.0; k * k];
            for a in 0..k {
                for b in 0..k {
                    g[a * k + b] = (0..d).map(|i| q[(i, a)] * q[(i, b)]).sum();
                }
            }
            let mut det = 1.0;
            for col in 0..k {
                let piv = (col..k)
                    .max_by(|&x, &y| g[x * k + col].abs().total_cmp(&g[y * k + col].abs()))
                    .unwrap();
                if piv != col {
                    for j in 0..k {
                        g.swap(piv * k + j, col * k + j);
                    }
                    det = -det;
                }
                let p = g[col * k + col];
                det *= p;
                for r in col + 1..k {
                    let f = g[r * k + col] / p;
                    for j in col..k {
                        g[r * k + j] -= f * g[col * k + j];
                    }
                }
            }
            0.5 * det.ln()
        })
        .collect();
    Some(WedgeNorms { log_e })
}

/// `Σ log D - ∫ tr A dt`. `R` and `Z` have unit determinant, so this is the
/// error in `log det Q`.
pub fn det_residual(state: &EvolutionState, integral_trace: f64) -> f64 {
    state.log_d.iter().sum::<f64>() - integral_trace
}

/// Orthogonal factor of the QR factorization of `r` (positive triangular
/// diagonal).
pub fn reorthonormalize(r: &Matrix) -> Result<Matrix> {
    let d = r.dim();
    let mut q = r.as_slice().to_vec();
    let mut tri = vec![0.0; d * d];
    linalg::qr_in_place(&mut q, &mut tri, d)?;
    Matrix::from_row_major(d, q)
}

/// Scratch buffers for allocation-free stepping.
#[derive(Debug, Clone)]
pub struct Stepper {
    dim: usize,
    scheme: SchemeKind,
    m1: Vec<f64>,
    m2: Vec<f64>,
    m3: Vec<f64>,
    m4: Vec<f64>,
    gen: IwasawaGenerator,
}

impl Stepper {
    pub fn new(dim: usize, scheme: SchemeKind) -> Self {
        let n = dim * dim;
        Self {
            dim,
            scheme,
            m1: vec![0.0; n],
            m2: vec![0.0; n],
            m3: vec![0.0; n],
            m4: vec![0.0; n],
            gen: IwasawaGenerator::zeros(dim),
        }
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    /// Advances `state` by `dt` with `a` the representative generator of the
    /// step (for sampled paths, the average of the two endpoint samples).
    pub fn step(&mut self, state: &mut EvolutionState, a: &[f64], dt: f64) -> Result<()> {
        debug_assert_eq!(state.dim, self.dim);
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        match self.scheme {
            SchemeKind::Midpoint | SchemeKind::Ito => self.step_propagator(state, a, dt)?,
            SchemeKind::IwasawaDirect => self.step_direct(state, a, dt)?,
        }
        state.t += dt;
        if let Some(z) = &state.z {
            if z.iter().any(|v| !(v.abs() < Z_RANGE_LIMIT)) {
                log::warn!("Z factor left the representable range at t = {}; tracking disabled", state.t);
                state.z = None;
            }
        }
        Ok(())
    }

    fn step_propagator(&mut self, state: &mut EvolutionState, a: &[f64], dt: f64) -> Result<()> {
        let d = self.dim;
        let (prop, tmp, tri) = (&mut self.m1, &mut self.m2, &mut self.m3);
        match self.scheme {
            SchemeKind::Midpoint => {
                // tmp = (I + A dt/2) R, prop = I - A dt/2, then solve
                for i in 0..d {
                    for j in 0..d {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        prop[i * d + j] = delta - 0.5 * dt * a[i * d + j];
                        tri[i * d + j] = delta + 0.5 * dt * a[i * d + j];
                    }
                }
                linalg::matmul_into(tri, &state.r, tmp, d);
                if let Err(pivot) = linalg::solve_in_place(prop, tmp, d) {
                    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                    return Err(Error::SingularStep {
                        t: state.t,
                        pivot,
                        scaled_norm: dt * norm,
                    });
                }
            }
            SchemeKind::Ito => {
                linalg::matmul_into(a, a, tri, d);
                for i in 0..d {
                    for j in 0..d {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        prop[i * d + j] = delta + dt * a[i * d + j] + 0.5 * dt * dt * tri[i * d + j];
                    }
                }
                linalg::matmul_into(prop, &state.r, tmp, d);
            }
            SchemeKind::IwasawaDirect => unreachable!(),
        }
        // tmp = P R = R' U
        linalg::qr_in_place(tmp, tri, d)?;
        if let Some(z) = state.z.as_mut() {
            // Z' = (D⁻¹ Ũ D) Z with Ũ = diag(U)⁻¹ U
            let n = &mut self.m4;
            for i in 0..d {
                let uii = tri[i * d + i];
                for j in 0..d {
                    n[i * d + j] = if j < i {
                        0.0
                    } else if j == i {
                        1.0
                    } else {
                        tri[i * d + j] / uii * (state.log_d[j] - state.log_d[i]).exp()
                    };
                }
            }
            linalg::matmul_into(n, z, prop, d);
            z.copy_from_slice(prop);
        }
        for i in 0..d {
            state.log_d[i] += tri[i * d + i].ln();
        }
        state.r.copy_from_slice(tmp);
        Ok(())
    }

    fn step_direct(&mut self, state: &mut EvolutionState, a: &[f64], dt: f64) -> Result<()> {
        let d = self.dim;
        let (x, rot, half, scratch) = (&mut self.m1, &mut self.m2, &mut self.m3, &mut self.m4);
        let gen = &mut self.gen;

        // predictor: frame at t + dt/2
        conjugate(&state.r, a, x, scratch, d);
        gen.assign(x, d);
        gen.theta.iter_mut().for_each(|v| *v *= 0.5 * dt);
        linalg::cayley_into(&gen.theta, rot, scratch, d).expect("I - θ/2 is invertible for antisymmetric θ");
        linalg::matmul_into(&state.r, rot, half, d);
        let log_d_half: Vec<f64> = state.log_d.iter().zip(&gen.xi).map(|(l, xi)| l + 0.5 * dt * xi).collect();

        // corrector: generator evaluated in the half-step frame
        conjugate(half, a, x, scratch, d);
        gen.assign(x, d);
        for i in 0..d {
            state.log_d[i] += dt * gen.xi[i];
        }
        gen.theta.iter_mut().for_each(|v| *v *= dt);
        linalg::cayley_into(&gen.theta, rot, scratch, d).expect("I - θ/2 is invertible for antisymmetric θ");
        linalg::matmul_into(&state.r, rot, half, d);
        linalg::qr_in_place(half, scratch, d)?;
        state.r.copy_from_slice(half);

        if let Some(z) = state.z.as_mut() {
            // Z' = cay(dt D⁻¹ ζ D) Z at the half-step D
            for i in 0..d {
                for j in 0..d {
                    x[i * d + j] = if j > i {
                        dt * gen.zeta[i * d + j] * (log_d_half[j] - log_d_half[i]).exp()
                    } else {
                        0.0
                    };
                }
            }
            linalg::cayley_into(x, rot, scratch, d).expect("unipotent Cayley factor is always invertible");
            // strictly upper input: the Cayley factor is exactly unit upper triangular
            for i in 0..d {
                for j in 0..=i {
                    rot[i * d + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            linalg::matmul_into(rot, z, x, d);
            z.copy_from_slice(x);
        }
        Ok(())
    }
}

/// `out = rᵀ a r`
fn conjugate(r: &[f64], a: &[f64], out: &mut [f64], scratch: &mut [f64], d: usize) {
    linalg::matmul_into(a, r, scratch, d);
    linalg::matmul_tn_into(r, scratch, out, d);
}

/// Pure single-step form of [`Stepper::step`].
pub fn step(state: &EvolutionState, a: &Matrix, dt: f64, scheme: SchemeKind) -> Result<EvolutionState> {
    if a.dim() != state.dim {
        return Err(Error::DimensionMismatch {
            expected: state.dim,
            got: a.dim(),
        });
    }
    let mut next = state.clone();
    Stepper::new(state.dim, scheme).step(&mut next, a.as_slice(), dt)?;
    Ok(next)
}

#[cfg(test)]
mod tests;
