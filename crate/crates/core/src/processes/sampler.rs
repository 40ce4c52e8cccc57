use super::{ProcessKind, ProcessSpec};
use crate::error::{invalid, Result};
use crate::rng::{stream, StreamTag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Warn when `dt` exceeds this fraction of the correlation time.
pub const DT_GUARD_RATIO: f64 = 0.1;

#[derive(Debug, Clone)]
enum Driver {
    Gaussian {
        modes: Vec<f64>,
        rho: f64,
        innovation: f64,
        anti: f64,
        sym: f64,
        trace: f64,
        envelope: Option<Telegraph>,
    },
    Ou {
        mode: f64,
        rho: f64,
        innovation: f64,
        mean: f64,
        scale: f64,
    },
    Telegraph(Telegraph),
    Constant,
}

#[derive(Debug, Clone)]
struct Telegraph {
    state: f64,
    flip_probability: f64,
    level: f64,
    offset: f64,
    rng: ChaCha8Rng,
}

impl Telegraph {
    fn new(rate: f64, dt: f64, level: f64, offset: f64, mut rng: ChaCha8Rng) -> Self {
        let state = if rng.random::<bool>() { 1.0 } else { -1.0 };
        Self {
            state,
            flip_probability: -0.5 * (-2.0 * rate * dt).exp_m1(),
            level,
            offset,
            rng,
        }
    }

    fn value(&self) -> f64 {
        self.offset + self.level * self.state
    }

    fn advance(&mut self) {
        if self.rng.random::<f64>() < self.flip_probability {
            self.state = -self.state;
        }
    }
}

/// Streaming generator of one realization on the grid `t_n = n dt`.
///
/// The value at `t_0` is drawn from the stationary law; [`advance`]
/// moves to the next grid point with exact transition probabilities.
///
/// [`advance`]: NoiseSampler::advance
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    dim: usize,
    dt: f64,
    driver: Driver,
    rng: ChaCha8Rng,
    value: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(spec: &ProcessSpec, dt: f64, realization_index: u64) -> Result<Self> {
        spec.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let tau = spec.correlation_time();
        if tau > 0.0 && dt > DT_GUARD_RATIO * tau {
            log::warn!("dt = {dt} exceeds {DT_GUARD_RATIO} of the correlation time {tau}");
        }
        let dim = spec.dim();
        let mut rng = stream(spec.master_seed, realization_index, StreamTag::Primary);
        let env_rng = || stream(spec.master_seed, realization_index, StreamTag::Envelope);
        let mut value = vec![0.0; dim * dim];
        let driver = match &spec.kind {
            ProcessKind::GaussianIsotropicMatrix { kernel, shape, .. }
            | ProcessKind::ModulatedGaussianMatrix { kernel, shape, .. } => {
                let (rho, innovation) = shape.ar1(dt);
                let stationary_sd = shape.phi(0.0).sqrt();
                let modes = (0..dim * dim)
                    .map(|_| stationary_sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let (anti, sym, trace) = kernel.sector_variances(dim);
                let envelope = match &spec.kind {
                    ProcessKind::ModulatedGaussianMatrix { envelope, .. } => Some(Telegraph::new(
                        envelope.switching_rate(),
                        dt,
                        envelope.amplitude,
                        1.0,
                        env_rng(),
                    )),
                    _ => None,
                };
                Driver::Gaussian {
                    modes,
                    rho,
                    innovation,
                    anti: anti.max(0.0).sqrt(),
                    sym: sym.max(0.0).sqrt(),
                    trace: if kernel.traceless { 0.0 } else { trace.max(0.0).sqrt() },
                    envelope,
                }
            }
            ProcessKind::ScalarOu {
                shape,
                mean,
                variance_integral,
            } => {
                let (rho, innovation) = shape.ar1(dt);
                Driver::Ou {
                    mode: shape.phi(0.0).sqrt() * rng.sample::<f64, _>(StandardNormal),
                    rho,
                    innovation,
                    mean: *mean,
                    scale: variance_integral.sqrt(),
                }
            }
            ProcessKind::ScalarTelegraph { sigma, nu } => Driver::Telegraph(Telegraph::new(*nu, dt, *sigma, 0.0, env_rng())),
            ProcessKind::ConstantMatrix { matrix, .. } => {
                value.copy_from_slice(matrix);
                Driver::Constant
            }
        };
        let mut sampler = Self {
            dim,
            dt,
            driver,
            rng,
            value,
        };
        sampler.refresh();
        Ok(sampler)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Current value, row-major `d × d` (length 1 for scalar kinds).
    pub fn current(&self) -> &[f64] {
        &self.value
    }

    pub fn advance(&mut self) {
        match &mut self.driver {
            Driver::Gaussian {
                modes,
                rho,
                innovation,
                envelope,
                ..
            } => {
                for m in modes.iter_mut() {
                    *m = *rho * *m + *innovation * self.rng.sample::<f64, _>(StandardNormal);
                }
                if let Some(env) = envelope {
                    env.advance();
                }
            }
            Driver::Ou {
                mode, rho, innovation, ..
            } => {
                *mode = *rho * *mode + *innovation * self.rng.sample::<f64, _>(StandardNormal);
            }
            Driver::Telegraph(t) => t.advance(),
            Driver::Constant => {}
        }
        self.refresh();
    }

    fn refresh(&mut self) {
        let d = self.dim;
        match &self.driver {
            Driver::Gaussian {
                modes,
                anti,
                sym,
                trace,
                envelope,
                ..
            } => {
                let mean_diag = (0..d).map(|i| modes[i * d + i]).sum::<f64>() / d as f64;
                let g = envelope.as_ref().map_or(1.0, Telegraph::value);
                for i in 0..d {
                    for j in 0..d {
                        let x = modes[i * d + j];
                        let y = modes[j * d + i];
                        let mut v = anti * 0.5 * (x - y) + sym * 0.5 * (x + y);
                        if i == j {
                            v += (trace - sym) * mean_diag;
                        }
                        self.value[i * d + j] = g * v;
                    }
                }
            }
            Driver::Ou { mode, mean, scale, .. } => self.value[0] = mean + scale * mode,
            Driver::Telegraph(t) => self.value[0] = t.value(),
            Driver::Constant => {}
        }
    }
}

/// A realization sampled on `n_steps + 1` grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub dt: f64,
    pub dim: usize,
    /// Row-major matrices, one after another.
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, n: usize) -> &[f64] {
        let m = self.dim * self.dim;
        &self.values[n * m..(n + 1) * m]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Columns `t, A_11, A_12, …, A_dd`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.dim;
        write!(out, "t")?;
        for i in 1..=d {
            for j in 1..=d {
                write!(out, ",A_{i}{j}")?;
            }
        }
        writeln!(out)?;
        for n in 0..self.len() {
            write!(out, "{}", n as f64 * self.dt)?;
            for v in self.at(n) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn sample_path(spec: &ProcessSpec, dt: f64, n_steps: usize, realization_index: u64) -> Result<SamplePath> {
    if n_steps == 0 {
        return Err(invalid("n_steps", "must be at least 1"));
    }
    let mut sampler = NoiseSampler::new(spec, dt, realization_index)?;
    let m = sampler.dim() * sampler.dim();
    let mut values = Vec::with_capacity((n_steps + 1) * m);
    values.extend_from_slice(sampler.current());
    for _ in 0..n_steps {
        sampler.advance();
        values.extend_from_slice(sampler.current());
    }
    Ok(SamplePath {
        dt,
        dim: sampler.dim(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{Envelope, IsotropicKernel};

    #[test]
    fn zero_kernel_gives_zero_matrices() {
        let spec = ProcessSpec::gaussian(3, IsotropicKernel::zero(), 0.1, 1);
        let path = sample_path(&spec, 0.01, 50, 0).unwrap();
        assert_eq!(path.len(), 51);
        assert!(path.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_dt_and_kernel() {
        let spec = ProcessSpec::scalar_ou(1.0, 1);
        assert!(sample_path(&spec, 0.0, 10, 0).is_err());
        assert!(sample_path(&spec, -1.0, 10, 0).is_err());
        let bad = ProcessSpec::gaussian(2, IsotropicKernel::new(0.0, 0.0, 1.0), 0.1, 1);
        assert!(sample_path(&bad, 0.01, 10, 0).is_err());
    }

    #[test]
    fn traceless_samples_have_zero_trace() {
        let spec = ProcessSpec::gaussian(3, IsotropicKernel::traceless(0.5, 0.5, 3), 0.1, 5);
        let path = sample_path(&spec, 0.005, 200, 3).unwrap();
        for n in 0..path.len() {
            let a = path.at(n);
            let tr = a[0] + a[4] + a[8];
            assert!(tr.abs() < 1e-13, "trace {tr}");
        }
    }

    #[test]
    fn telegraph_takes_only_two_values() {
        let spec = ProcessSpec::telegraph(1.5, 2.0, 11);
        let path = sample_path(&spec, 0.01, 500, 0).unwrap();
        assert!(path.values.iter().all(|&v| v == 1.5 || v == -1.5));
    }

    #[test]
    fn modulated_envelope_takes_two_levels() {
        let spec = ProcessSpec::modulated(
            2,
            IsotropicKernel::iid(1.0),
            0.1,
            Envelope {
                amplitude: 0.5,
                correlation_time: 1.0,
            },
            3,
        );
        let a = sample_path(&spec, 0.01, 300, 1).unwrap();
        let plain = ProcessSpec::gaussian(2, IsotropicKernel::iid(1.0), 0.1, 3);
        let b = sample_path(&plain, 0.01, 300, 1).unwrap();
        for n in 0..a.len() {
            let ratio = a.at(n)[0] / b.at(n)[0];
            assert!((ratio - 0.5).abs() < 1e-12 || (ratio - 1.5).abs() < 1e-12, "{ratio}");
        }
    }

    #[test]
    fn csv_header_lists_entries() {
        let spec = ProcessSpec::gaussian(2, IsotropicKernel::iid(1.0), 0.1, 3);
        let path = sample_path(&spec, 0.01, 2, 0).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,A_11,A_12,A_21,A_22\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
