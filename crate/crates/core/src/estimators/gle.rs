use super::le::LeEstimate;
use super::sim::{simulate_diagonal_integrals, simulate_log_d, Exclusion, HorizonSamples, MAX_EXCLUSION_FRACTION};
use super::{csv_f64, Provenance};
use crate::ensemble::run_indexed;
use crate::error::{invalid, Error, Result};
use crate::evolution::SchemeKind;
use crate::processes::ProcessSpec;
use crate::rng::{stream, StreamTag};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// One-sigma coverage of a normal interval.
pub const ONE_SIGMA: f64 = 0.682_689_492_137_086;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GleOptions {
    pub eta_cap: f64,
    pub bootstrap_resamples: usize,
    pub ci_level: f64,
    /// Seed of the bootstrap streams; `None` derives it from the process seed.
    pub bootstrap_seed: Option<u64>,
    /// Below this the point carries a warning.
    pub ess_warn: f64,
    /// Below this the point is marked unreliable.
    pub ess_min: f64,
    /// Horizons whose ESS falls below this are left out of the `1/T` fit.
    pub fit_ess_floor: f64,
    pub extrapolate: bool,
    pub workers: Option<usize>,
}

impl Default for GleOptions {
    fn default() -> Self {
        Self {
            eta_cap: 2.0,
            bootstrap_resamples: 400,
            ci_level: ONE_SIGMA,
            bootstrap_seed: None,
            ess_warn: 100.0,
            ess_min: 10.0,
            fit_ess_floor: 100.0,
            extrapolate: true,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GleEstimate {
    pub dim: usize,
    pub eta_grid: Vec<Vec<f64>>,
    #[serde(with = "super::float_serde")]
    pub w: Vec<f64>,
    #[serde(with = "super::float_serde")]
    pub ci_low: Vec<f64>,
    #[serde(with = "super::float_serde")]
    pub ci_high: Vec<f64>,
    /// Smallest ESS among the horizons that entered each point.
    #[serde(with = "super::float_serde")]
    pub ess: Vec<f64>,
    #[serde(rename = "T_list")]
    pub horizons: Vec<f64>,
    /// `w(η; T)` before extrapolation, `[point][horizon]`.
    pub per_horizon: Vec<Vec<f64>>,
    pub per_horizon_ess: Vec<Vec<f64>>,
    /// Indices into `horizons` used for each point.
    pub horizons_used: Vec<Vec<usize>>,
    /// RMS residual of the `1/T` fit; absent without a fit.
    pub extrapolation_residual: Vec<Option<f64>>,
    pub reliable: Vec<bool>,
    pub warnings: Vec<String>,
    pub n_realizations: usize,
    pub n_excluded: usize,
    #[serde(default)]
    pub exclusions: Vec<Exclusion>,
    pub bootstrap_resamples: usize,
    pub ci_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl GleEstimate {
    pub fn ci_half_width(&self, i: usize) -> f64 {
        0.5 * (self.ci_high[i] - self.ci_low[i])
    }

    pub fn index_of(&self, eta: &[f64]) -> Option<usize> {
        self.eta_grid
            .iter()
            .position(|g| g.len() == eta.len() && g.iter().zip(eta).all(|(a, b)| (a - b).abs() <= 1e-12))
    }

    pub fn value_at(&self, eta: &[f64]) -> Option<f64> {
        self.index_of(eta).map(|i| self.w[i])
    }

    /// Columns `eta_1 … eta_d, w, ci_low, ci_high, ess, T_extrapolation_residual`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for k in 1..=self.dim {
            write!(out, "eta_{k},")?;
        }
        writeln!(out, "w,ci_low,ci_high,ess,T_extrapolation_residual")?;
        for i in 0..self.w.len() {
            for e in &self.eta_grid[i] {
                write!(out, "{},", csv_f64(*e))?;
            }
            writeln!(
                out,
                "{},{},{},{},{}",
                csv_f64(self.w[i]),
                csv_f64(self.ci_low[i]),
                csv_f64(self.ci_high[i]),
                csv_f64(self.ess[i]),
                self.extrapolation_residual[i].map_or_else(String::new, csv_f64),
            )?;
        }
        Ok(())
    }
}

/// `ln Σ exp(x)` and the ESS `(Σp)² / Σp²` of the weights `p = exp(x)`.
pub fn log_sum_exp_with_ess(x: &[f64]) -> (f64, f64) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return (max, 0.0);
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for v in x {
        let p = (v - max).exp();
        s1 += p;
        s2 += p * p;
    }
    (max + s1.ln(), s1 * s1 / s2)
}

/// Least-squares fit `w(T) = w∞ + c / T`; returns `(w∞, rms residual)`.
pub fn extrapolate_inverse_t(horizons: &[f64], values: &[f64]) -> (f64, f64) {
    let n = horizons.len() as f64;
    let xs: Vec<f64> = horizons.iter().map(|t| 1.0 / t).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(values)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (intercept, (rss / n).sqrt())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Generalized exponent from per-realization observations `S_m(T)`:
/// `w(η; T) = (1/T) [ln Σ_m exp(η·S_m(T)) - ln M]`, extrapolated in `1/T`
/// over the horizons whose ESS clears `fit_ess_floor`.
pub fn gle_from_samples(samples: &HorizonSamples, eta_grid: &[Vec<f64>], options: &GleOptions) -> Result<GleEstimate> {
    if samples.exclusion_fraction() > MAX_EXCLUSION_FRACTION {
        return Err(Error::EstimateRejected(format!(
            "{} of {} realizations excluded",
            samples.exclusions.len(),
            samples.n_attempted
        )));
    }
    let d = samples.dim;
    let m = samples.n_realizations();
    if m < 2 {
        return Err(invalid("n_realizations", "need at least 2 usable realizations"));
    }
    if eta_grid.is_empty() {
        return Err(invalid("eta_grid", "must not be empty"));
    }
    for eta in eta_grid {
        if eta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: eta.len(),
            });
        }
        if eta.iter().any(|e| !(e.abs() <= options.eta_cap)) {
            return Err(invalid("eta_grid", format!("{eta:?} exceeds the cap |η| ≤ {}", options.eta_cap)));
        }
    }
    if !(options.ci_level > 0.0 && options.ci_level < 1.0) {
        return Err(invalid("ci_level", "must lie in (0, 1)"));
    }
    let nh = samples.horizons.len();
    let ln_m = (m as f64).ln();

    // exponents x[point][horizon][realization]
    let x: Vec<Vec<Vec<f64>>> = eta_grid
        .iter()
        .map(|eta| {
            (0..nh)
                .map(|j| {
                    (0..m)
                        .map(|r| samples.get(r, j).iter().zip(eta).map(|(s, e)| s * e).sum())
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut per_horizon = Vec::with_capacity(eta_grid.len());
    let mut per_horizon_ess = Vec::with_capacity(eta_grid.len());
    let mut horizons_used = Vec::with_capacity(eta_grid.len());
    for xi in &x {
        let (w, ess): (Vec<f64>, Vec<f64>) = xi
            .iter()
            .zip(&samples.horizons)
            .map(|(xs, t)| {
                let (lse, ess) = log_sum_exp_with_ess(xs);
                ((lse - ln_m) / t, ess)
            })
            .unzip();
        let mut used: Vec<usize> = if options.extrapolate {
            (0..nh).filter(|&j| ess[j] >= options.fit_ess_floor).collect()
        } else {
            vec![nh - 1]
        };
        if used.is_empty() {
            let best = (0..nh).fold(0, |b, j| if ess[j] > ess[b] { j } else { b });
            used.push(best);
        }
        per_horizon.push(w);
        per_horizon_ess.push(ess);
        horizons_used.push(used);
    }

    let combine = |vals: &[f64], used: &[usize]| -> (f64, Option<f64>) {
        if used.len() >= 2 {
            let ts: Vec<f64> = used.iter().map(|&j| samples.horizons[j]).collect();
            let ws: Vec<f64> = used.iter().map(|&j| vals[j]).collect();
            let (w, res) = extrapolate_inverse_t(&ts, &ws);
            (w, Some(res))
        } else {
            (vals[used[0]], None)
        }
    };

    let mut w = Vec::with_capacity(eta_grid.len());
    let mut extrapolation_residual = Vec::with_capacity(eta_grid.len());
    for (vals, used) in per_horizon.iter().zip(&horizons_used) {
        let (v, r) = combine(vals, used);
        w.push(v);
        extrapolation_residual.push(r);
    }

    let seed = options.bootstrap_seed.unwrap_or(0);
    let replicates = run_indexed(options.bootstrap_resamples, options.workers, |b| {
        let mut rng = stream(seed, b, StreamTag::Bootstrap);
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
        let mut buf = vec![0.0; m];
        x.iter()
            .zip(&horizons_used)
            .map(|(xi, used)| {
                let mut vals = vec![0.0; nh];
                for &j in used {
                    for (slot, &r) in buf.iter_mut().zip(&idx) {
                        *slot = xi[j][r];
                    }
                    vals[j] = (log_sum_exp_with_ess(&buf).0 - ln_m) / samples.horizons[j];
                }
                combine(&vals, used).0
            })
            .collect::<Vec<f64>>()
    });

    let (q_lo, q_hi) = (0.5 * (1.0 - options.ci_level), 0.5 * (1.0 + options.ci_level));
    let mut ci_low = Vec::with_capacity(eta_grid.len());
    let mut ci_high = Vec::with_capacity(eta_grid.len());
    let mut ess = Vec::with_capacity(eta_grid.len());
    let mut reliable = Vec::with_capacity(eta_grid.len());
    let mut warnings = Vec::new();
    for i in 0..eta_grid.len() {
        if replicates.is_empty() {
            ci_low.push(w[i]);
            ci_high.push(w[i]);
        } else {
            let mut col: Vec<f64> = replicates.iter().map(|r| r[i]).collect();
            col.sort_by(f64::total_cmp);
            ci_low.push(quantile(&col, q_lo).min(w[i]));
            ci_high.push(quantile(&col, q_hi).max(w[i]));
        }
        let e = horizons_used[i]
            .iter()
            .map(|&j| per_horizon_ess[i][j])
            .fold(f64::INFINITY, f64::min);
        ess.push(e);
        reliable.push(e >= options.ess_min);
        if e < options.ess_min {
            warnings.push(format!("η = {:?}: ESS {e:.1} below {}; point unreliable", eta_grid[i], options.ess_min));
        } else if e < options.ess_warn {
            warnings.push(format!("η = {:?}: ESS {e:.1} below {}", eta_grid[i], options.ess_warn));
        }
        let dropped = nh - horizons_used[i].len();
        if options.extrapolate && dropped > 0 {
            warnings.push(format!(
                "η = {:?}: {dropped} of {nh} horizons dropped for low ESS{}",
                eta_grid[i],
                if horizons_used[i].len() < 2 { "; no 1/T extrapolation" } else { "" }
            ));
        }
    }
    for msg in &warnings {
        log::warn!("{msg}");
    }

    Ok(GleEstimate {
        dim: d,
        eta_grid: eta_grid.to_vec(),
        w,
        ci_low,
        ci_high,
        ess,
        horizons: samples.horizons.clone(),
        per_horizon,
        per_horizon_ess,
        horizons_used,
        extrapolation_residual,
        reliable,
        warnings,
        n_realizations: m,
        n_excluded: samples.exclusions.len(),
        exclusions: samples.exclusions.clone(),
        bootstrap_resamples: options.bootstrap_resamples,
        ci_level: options.ci_level,
        provenance: None,
    })
}

fn seeded(options: &GleOptions, spec: &ProcessSpec) -> GleOptions {
    let mut o = options.clone();
    o.bootstrap_seed.get_or_insert(spec.master_seed ^ 0x6a09_e667_f3bc_c908);
    o
}

/// `w(η) = lim (1/T) ln ⟨D₁^η₁ … D_d^η_d⟩` from the matrix evolution.
pub fn estimate_gle(
    spec: &ProcessSpec,
    scheme: SchemeKind,
    dt: f64,
    horizons: &[f64],
    n_realizations: usize,
    eta_grid: &[Vec<f64>],
    options: &GleOptions,
) -> Result<GleEstimate> {
    if horizons.len() < 2 && options.extrapolate {
        return Err(invalid("T_list", "1/T extrapolation needs at least two horizons"));
    }
    let samples = simulate_log_d(spec, scheme, dt, horizons, n_realizations, options.workers)?;
    let mut est = gle_from_samples(&samples, eta_grid, &seeded(options, spec))?;
    est.provenance = Some(Provenance::new(spec, Some(scheme), dt, horizons.to_vec(), n_realizations));
    Ok(est)
}

/// `w_α(η) = lim (1/T) ln ⟨exp ∫ Σ_k η_k A_kk dt⟩` from the noise alone.
pub fn estimate_scalar_cgf(
    spec: &ProcessSpec,
    dt: f64,
    horizons: &[f64],
    n_realizations: usize,
    eta_grid: &[Vec<f64>],
    options: &GleOptions,
) -> Result<GleEstimate> {
    if horizons.len() < 2 && options.extrapolate {
        return Err(invalid("T_list", "1/T extrapolation needs at least two horizons"));
    }
    let samples = simulate_diagonal_integrals(spec, dt, horizons, n_realizations, options.workers)?;
    let mut est = gle_from_samples(&samples, eta_grid, &seeded(options, spec))?;
    est.provenance = Some(Provenance::new(spec, None, dt, horizons.to_vec(), n_realizations));
    Ok(est)
}

/// `λ_k = ∂w/∂η_k (0)` by central differences on the smallest symmetric
/// stencil present in the grid.
pub fn lyapunov_from_gle(gle: &GleEstimate) -> Result<LeEstimate> {
    let d = gle.dim;
    let mut lambda = Vec::with_capacity(d);
    let mut stderr = Vec::with_capacity(d);
    let mut warnings = Vec::new();
    for k in 0..d {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, eta) in gle.eta_grid.iter().enumerate() {
            let h = eta[k];
            let on_axis = eta.iter().enumerate().all(|(p, v)| p == k || *v == 0.0);
            if h > 0.0 && on_axis && best.is_none_or(|(bh, ..)| h < bh) {
                let mut mirror = vec![0.0; d];
                mirror[k] = -h;
                if let Some(j) = gle.index_of(&mirror) {
                    best = Some((h, i, j));
                }
            }
        }
        let Some((h, ip, im)) = best else {
            let mut point = vec![0.0; d];
            point[k] = 1.0;
            return Err(Error::MissingStencil { point });
        };
        lambda.push((gle.w[ip] - gle.w[im]) / (2.0 * h));
        stderr.push(gle.ci_half_width(ip).hypot(gle.ci_half_width(im)) / (2.0 * h));
        if !(gle.reliable[ip] && gle.reliable[im]) {
            warnings.push(format!("stencil for k = {} uses unreliable points", k + 1));
        }
    }
    let sum = lambda.iter().sum();
    let sum_stderr = stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
    let sorted_within_errors = (1..d).all(|k| lambda[k - 1] >= lambda[k] - 3.0 * stderr[k - 1].hypot(stderr[k]));
    Ok(LeEstimate {
        lambda,
        stderr,
        horizon: gle.horizons.last().copied().unwrap_or(f64::NAN),
        transient: 0.0,
        n_realizations: gle.n_realizations,
        batch_count: 0,
        batch_stderr: vec![f64::NAN; d],
        sum,
        sum_stderr,
        sorted_within_errors,
        n_excluded: gle.n_excluded,
        exclusions: gle.exclusions.clone(),
        warnings,
        provenance: gle.provenance.clone(),
    })
}
