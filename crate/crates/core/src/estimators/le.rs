use super::sim::{simulate_log_d, Exclusion, HorizonSamples, MAX_EXCLUSION_FRACTION};
use super::{csv_f64, Provenance};
use crate::error::{invalid, Error, Result};
use crate::evolution::SchemeKind;
use crate::processes::ProcessSpec;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeOptions {
    /// Excluded from the time average; `None` means `10 ε`.
    pub transient: Option<f64>,
    pub batch_count: usize,
    pub workers: Option<usize>,
}

impl Default for LeOptions {
    fn default() -> Self {
        Self {
            transient: None,
            batch_count: 10,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeEstimate {
    pub lambda: Vec<f64>,
    /// Between-realization standard error of the mean.
    #[serde(with = "super::float_serde")]
    pub stderr: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub transient: f64,
    pub n_realizations: usize,
    pub batch_count: usize,
    /// Pooled within-realization batch-means error; comparable to `stderr`
    /// when the batches decorrelate.
    #[serde(with = "super::float_serde")]
    pub batch_stderr: Vec<f64>,
    pub sum: f64,
    #[serde(with = "super::float_serde::scalar")]
    pub sum_stderr: f64,
    pub sorted_within_errors: bool,
    pub n_excluded: usize,
    #[serde(default)]
    pub exclusions: Vec<Exclusion>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl LeEstimate {
    /// Columns `k, lambda, stderr`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,lambda,stderr")?;
        for (k, (l, s)) in self.lambda.iter().zip(&self.stderr).enumerate() {
            writeln!(out, "{},{},{}", k + 1, csv_f64(*l), csv_f64(*s))?;
        }
        Ok(())
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Reduces samples whose horizons are the batch boundaries
/// `t_0 < t_1 < … < t_B = T`. `start_at_zero` prepends an implicit
/// `log D(0) = 0` boundary.
pub fn le_from_samples(samples: &HorizonSamples, start_at_zero: bool) -> Result<LeEstimate> {
    if samples.exclusion_fraction() > MAX_EXCLUSION_FRACTION {
        return Err(Error::EstimateRejected(format!(
            "{} of {} realizations excluded (limit {:.0}%): first reason: {}",
            samples.exclusions.len(),
            samples.n_attempted,
            100.0 * MAX_EXCLUSION_FRACTION,
            samples.exclusions.first().map_or("", |e| e.reason.as_str()),
        )));
    }
    let m = samples.n_realizations();
    if m < 2 {
        return Err(invalid("n_realizations", "need at least 2 usable realizations"));
    }
    let d = samples.dim;
    let mut bounds: Vec<f64> = samples.horizons.clone();
    if start_at_zero {
        bounds.insert(0, 0.0);
    }
    let batches = bounds.len() - 1;
    if batches == 0 {
        return Err(invalid("batch_count", "need at least one batch"));
    }
    let (t0, horizon) = (bounds[0], bounds[batches]);
    let zero = vec![0.0; d];
    let at = |r: usize, b: usize| -> &[f64] {
        match (start_at_zero, b) {
            (true, 0) => &zero,
            (true, b) => samples.get(r, b - 1),
            (false, b) => samples.get(r, b),
        }
    };
    let mut lambda = vec![0.0; d];
    let mut stderr = vec![0.0; d];
    let mut batch_stderr = vec![0.0; d];
    let mut rates = vec![0.0; m];
    for k in 0..d {
        let mut pooled = 0.0;
        for (r, rate) in rates.iter_mut().enumerate() {
            *rate = (at(r, batches)[k] - at(r, 0)[k]) / (horizon - t0);
            if batches >= 2 {
                let br: Vec<f64> = (0..batches)
                    .map(|b| (at(r, b + 1)[k] - at(r, b)[k]) / (bounds[b + 1] - bounds[b]))
                    .collect();
                pooled += mean_and_stderr(&br).1.powi(2);
            }
        }
        let (mean, se) = mean_and_stderr(&rates);
        lambda[k] = mean;
        stderr[k] = se;
        batch_stderr[k] = if batches >= 2 { pooled.sqrt() / m as f64 } else { f64::NAN };
    }
    let sums: Vec<f64> = (0..m)
        .map(|r| (0..d).map(|k| at(r, batches)[k] - at(r, 0)[k]).sum::<f64>() / (horizon - t0))
        .collect();
    let (sum, sum_stderr) = mean_and_stderr(&sums);
    let sorted_within_errors = (1..d).all(|k| {
        let joint = (stderr[k - 1].powi(2) + stderr[k].powi(2)).sqrt();
        lambda[k - 1] >= lambda[k] - 3.0 * joint
    });
    let mut warnings = Vec::new();
    if !samples.exclusions.is_empty() {
        warnings.push(format!("{} realizations excluded", samples.exclusions.len()));
    }
    if !sorted_within_errors {
        warnings.push("exponents are not sorted within 3 standard errors".into());
    }
    Ok(LeEstimate {
        lambda,
        stderr,
        horizon,
        transient: t0,
        n_realizations: m,
        batch_count: batches,
        batch_stderr,
        sum,
        sum_stderr,
        sorted_within_errors,
        n_excluded: samples.exclusions.len(),
        exclusions: samples.exclusions.clone(),
        warnings,
        provenance: None,
    })
}

/// `λ_k` as the ensemble mean of `(log D_k(T) - log D_k(t₀)) / (T - t₀)`.
pub fn estimate_le(
    spec: &ProcessSpec,
    scheme: SchemeKind,
    dt: f64,
    horizon: f64,
    n_realizations: usize,
    options: &LeOptions,
) -> Result<LeEstimate> {
    if n_realizations < 2 {
        return Err(invalid("n_realizations", "must be at least 2"));
    }
    if options.batch_count == 0 {
        return Err(invalid("batch_count", "must be at least 1"));
    }
    let eps = spec.correlation_time();
    let mut warnings = Vec::new();
    if eps > 0.0 && horizon < 50.0 * eps {
        let msg = format!("T = {horizon} is shorter than 50 correlation times ({})", 50.0 * eps);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let n_total = (horizon / dt).round() as usize;
    let transient = options.transient.unwrap_or(10.0 * eps);
    let n0 = (transient / dt).round() as usize;
    if n0 >= n_total {
        return Err(invalid("transient", format!("{transient} leaves nothing of T = {horizon}")));
    }
    let batches = options.batch_count.min(n_total - n0);
    let mut steps: Vec<usize> = (0..=batches).map(|b| n0 + (n_total - n0) * b / batches).collect();
    let start_at_zero = n0 == 0;
    if start_at_zero {
        steps.remove(0);
    }
    let horizons: Vec<f64> = steps.iter().map(|&n| n as f64 * dt).collect();
    let samples = simulate_log_d(spec, scheme, dt, &horizons, n_realizations, options.workers)?;
    let mut est = le_from_samples(&samples, start_at_zero)?;
    warnings.append(&mut est.warnings);
    est.warnings = warnings;
    est.provenance = Some(Provenance::new(spec, Some(scheme), dt, vec![horizon], n_realizations));
    Ok(est)
}
