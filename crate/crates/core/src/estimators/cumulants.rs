use super::gle::ONE_SIGMA;
use super::sim::simulate_diagonal_integrals;
use crate::ensemble::run_indexed;
use crate::error::{invalid, Result};
use crate::processes::ProcessSpec;
use crate::rng::{stream, StreamTag};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Highest order with a moment-to-cumulant formula below.
pub const MAX_EMPIRICAL_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCumulant {
    pub order: usize,
    /// `κ_n(∫₀ᵀ A_11 dt) / T`.
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(Σ|x - x̄|ⁿ)² / Σ|x - x̄|²ⁿ`: how many realizations carry the moment.
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCumulants {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_realizations: usize,
    pub orders: Vec<EmpiricalCumulant>,
}

fn cumulants(x: &[f64], max_order: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut m = [0.0f64; MAX_EMPIRICAL_ORDER + 1];
    for v in x {
        let c = v - mean;
        let mut q = 1.0;
        for slot in m.iter_mut().skip(1) {
            q *= c;
            *slot += q;
        }
    }
    for slot in m.iter_mut() {
        *slot /= n;
    }
    let k = [
        0.0,
        mean,
        m[2],
        m[3],
        m[4] - 3.0 * m[2] * m[2],
        m[5] - 10.0 * m[3] * m[2],
        m[6] - 15.0 * m[4] * m[2] - 10.0 * m[3] * m[3] + 30.0 * m[2].powi(3),
    ];
    k[1..=max_order].to_vec()
}

fn moment_ess(x: &[f64], order: usize) -> f64 {
    if order == 1 {
        return x.len() as f64;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for v in x {
        let p = (v - mean).abs().powi(order as i32);
        s1 += p;
        s2 += p * p;
    }
    if s2 == 0.0 {
        0.0
    } else {
        s1 * s1 / s2
    }
}

/// Sample cumulants of `∫₀ᵀ A_11 dt` per unit time, with one-sigma
/// bootstrap intervals.
pub fn estimate_cumulant_integrals(
    spec: &ProcessSpec,
    dt: f64,
    horizon: f64,
    n_realizations: usize,
    max_order: usize,
    bootstrap_resamples: usize,
    workers: Option<usize>,
) -> Result<EmpiricalCumulants> {
    if !(1..=MAX_EMPIRICAL_ORDER).contains(&max_order) {
        return Err(invalid("max_order", format!("must lie in 1..={MAX_EMPIRICAL_ORDER}")));
    }
    let samples = simulate_diagonal_integrals(spec, dt, &[horizon], n_realizations, workers)?;
    let x: Vec<f64> = (0..samples.n_realizations()).map(|r| samples.get(r, 0)[0]).collect();
    if x.len() < 2 {
        return Err(invalid("n_realizations", "need at least 2 usable realizations"));
    }
    let t = samples.horizons[0];
    let point = cumulants(&x, max_order);
    let seed = spec.master_seed ^ 0xbb67_ae85_84ca_a73b;
    let reps = run_indexed(bootstrap_resamples, workers, |b| {
        let mut rng = stream(seed, b, StreamTag::Bootstrap);
        let xs: Vec<f64> = (0..x.len()).map(|_| x[rng.random_range(0..x.len())]).collect();
        cumulants(&xs, max_order)
    });
    let orders = (0..max_order)
        .map(|i| {
            let mut col: Vec<f64> = reps.iter().map(|r| r[i] / t).collect();
            col.sort_by(f64::total_cmp);
            let v = point[i] / t;
            let q = |p: f64| {
                if col.is_empty() {
                    v
                } else {
                    col[((p * (col.len() - 1) as f64).round()) as usize]
                }
            };
            EmpiricalCumulant {
                order: i + 1,
                value: v,
                ci_low: q(0.5 * (1.0 - ONE_SIGMA)).min(v),
                ci_high: q(0.5 * (1.0 + ONE_SIGMA)).max(v),
                ess: moment_ess(&x, i + 1),
            }
        })
        .collect();
    Ok(EmpiricalCumulants {
        horizon: t,
        n_realizations: x.len(),
        orders,
    })
}
