use crate::ensemble::run_indexed;
use crate::error::{invalid, Error, Result};
use crate::evolution::{EvolutionState, SchemeKind, Stepper};
use crate::processes::{NoiseSampler, ProcessSpec};
use serde::{Deserialize, Serialize};

/// Per-realization observations at a fixed list of horizons.
///
/// `data` is laid out `[realization][horizon][component]`; excluded
/// realizations are dropped and listed in `exclusions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSamples {
    pub dim: usize,
    pub horizons: Vec<f64>,
    pub data: Vec<f64>,
    pub exclusions: Vec<Exclusion>,
    pub n_attempted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub realization: u64,
    pub reason: String,
}

impl HorizonSamples {
    pub fn n_realizations(&self) -> usize {
        self.data.len().checked_div(self.dim * self.horizons.len()).unwrap_or(0)
    }

    pub fn get(&self, realization: usize, horizon: usize) -> &[f64] {
        let off = (realization * self.horizons.len() + horizon) * self.dim;
        &self.data[off..off + self.dim]
    }

    /// Builds samples from already-reduced observations, e.g. for tests or
    /// externally produced ensembles.
    pub fn from_rows(dim: usize, horizons: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let stride = dim * horizons.len();
        let n_attempted = rows.len();
        let mut data = Vec::with_capacity(rows.len() * stride);
        for row in rows {
            if row.len() != stride {
                return Err(Error::DimensionMismatch {
                    expected: stride,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            dim,
            horizons,
            data,
            exclusions: Vec::new(),
            n_attempted,
        })
    }

    pub fn exclusion_fraction(&self) -> f64 {
        if self.n_attempted == 0 {
            0.0
        } else {
            self.exclusions.len() as f64 / self.n_attempted as f64
        }
    }
}

/// Maximum tolerated fraction of excluded realizations.
pub const MAX_EXCLUSION_FRACTION: f64 = 0.01;

/// Grid step indices for the horizons; each must be a positive multiple of
/// `dt` up to rounding.
pub(crate) fn horizon_steps(horizons: &[f64], dt: f64) -> Result<Vec<usize>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if horizons.is_empty() {
        return Err(invalid("T_list", "needs at least one horizon"));
    }
    let mut prev = 0;
    horizons
        .iter()
        .map(|&t| {
            let n = (t / dt).round();
            if !(n >= 1.0) || ((n * dt - t).abs() > 1e-9 * t.max(1.0)) {
                return Err(invalid("T", format!("horizon {t} is not a positive multiple of dt = {dt}")));
            }
            let n = n as usize;
            if n <= prev {
                return Err(invalid("T_list", "horizons must be strictly increasing"));
            }
            prev = n;
            Ok(n)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Observable {
    LogD(SchemeKind),
    DiagonalIntegral,
}

fn simulate_one(spec: &ProcessSpec, obs: Observable, dt: f64, steps: &[usize], index: u64) -> Result<Vec<f64>> {
    let d = spec.dim();
    let mut sampler = NoiseSampler::new(spec, dt, index)?;
    let mut prev = sampler.current().to_vec();
    let mut mid = vec![0.0; d * d];
    let mut out = Vec::with_capacity(steps.len() * d);
    let last = *steps.last().unwrap_or(&0);
    let mut next = 0;
    match obs {
        Observable::LogD(scheme) => {
            let mut state = EvolutionState::identity_with_z(d, false);
            let mut stepper = Stepper::new(d, scheme);
            for n in 1..=last {
                sampler.advance();
                let cur = sampler.current();
                for ((m, p), c) in mid.iter_mut().zip(&prev).zip(cur) {
                    *m = 0.5 * (p + c);
                }
                prev.copy_from_slice(cur);
                stepper.step(&mut state, &mid, dt)?;
                if n == steps[next] {
                    if !state.is_finite() {
                        return Err(Error::EstimateRejected(format!("non-finite state at t = {}", state.t)));
                    }
                    out.extend_from_slice(&state.log_d);
                    next += 1;
                }
            }
        }
        Observable::DiagonalIntegral => {
            let mut acc = vec![0.0; d];
            for n in 1..=last {
                sampler.advance();
                let cur = sampler.current();
                for (k, a) in acc.iter_mut().enumerate() {
                    *a += 0.5 * dt * (prev[k * d + k] + cur[k * d + k]);
                }
                prev.copy_from_slice(cur);
                if n == steps[next] {
                    out.extend_from_slice(&acc);
                    next += 1;
                }
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::EstimateRejected("non-finite observation".into()));
    }
    Ok(out)
}

pub(crate) fn simulate(
    spec: &ProcessSpec,
    obs: Observable,
    dt: f64,
    horizons: &[f64],
    n_realizations: usize,
    workers: Option<usize>,
) -> Result<HorizonSamples> {
    spec.validate()?;
    let steps = horizon_steps(horizons, dt)?;
    let results = run_indexed(n_realizations, workers, |m| simulate_one(spec, obs, dt, &steps, m));
    let d = spec.dim();
    let mut data = Vec::with_capacity(n_realizations * steps.len() * d);
    let mut exclusions = Vec::new();
    for (m, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => data.extend(v),
            // configuration errors are not per-realization accidents
            Err(e @ Error::InvalidParameter { .. }) | Err(e @ Error::InvalidKernel { .. }) => return Err(e),
            Err(e) => exclusions.push(Exclusion {
                realization: m as u64,
                reason: e.to_string(),
            }),
        }
    }
    if !exclusions.is_empty() {
        log::warn!("{} of {n_realizations} realizations excluded", exclusions.len());
    }
    Ok(HorizonSamples {
        dim: d,
        horizons: steps.iter().map(|&n| n as f64 * dt).collect(),
        data,
        exclusions,
        n_attempted: n_realizations,
    })
}

/// `log D(T)` for every realization at every horizon, starting from `Q = I`.
pub fn simulate_log_d(
    spec: &ProcessSpec,
    scheme: SchemeKind,
    dt: f64,
    horizons: &[f64],
    n_realizations: usize,
    workers: Option<usize>,
) -> Result<HorizonSamples> {
    simulate(spec, Observable::LogD(scheme), dt, horizons, n_realizations, workers)
}

/// `∫₀ᵀ A_kk dt` (trapezoidal) for every realization, without any matrix
/// evolution. For scalar kinds this is `∫ ξ dt`.
pub fn simulate_diagonal_integrals(
    spec: &ProcessSpec,
    dt: f64,
    horizons: &[f64],
    n_realizations: usize,
    workers: Option<usize>,
) -> Result<HorizonSamples> {
    simulate(spec, Observable::DiagonalIntegral, dt, horizons, n_realizations, workers)
}
