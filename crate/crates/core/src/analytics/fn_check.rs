use crate::ensemble::run_indexed;
use crate::error::{invalid, Result};
use crate::estimators::{log_sum_exp_with_ess, simulate_log_d, ONE_SIGMA};
use crate::evolution::SchemeKind;
use crate::processes::{CorrelationShape, ProcessKind, ProcessSpec};
use crate::rng::{stream, StreamTag};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FnCheckOptions {
    pub epsilon: f64,
    pub dt: f64,
    /// The growth rate is the slope of `ln⟨x⟩` between these two horizons,
    /// which removes the `O(ε)` start-up offset.
    pub horizons: [f64; 2],
    pub n_realizations: usize,
    pub bootstrap_resamples: usize,
    pub ess_min: f64,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for FnCheckOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            dt: 0.001,
            horizons: [1.0, 2.0],
            n_realizations: 100_000,
            bootstrap_resamples: 400,
            ess_min: 10.0,
            seed: 0,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnCheckReport {
    pub w1: f64,
    pub w2: f64,
    /// `w⁽¹⁾ + w⁽²⁾/2`.
    pub predicted: f64,
    /// `w⁽¹⁾ + w⁽²⁾`, the equal-time convention with the full weight.
    pub naive: f64,
    pub measured: f64,
    pub ci_half_width: f64,
    pub ess: f64,
    pub reliable: bool,
    /// `|measured - predicted|` in units of the half-width.
    pub deviation: f64,
    pub naive_deviation: f64,
    pub consistent: bool,
    pub naive_rejected: bool,
}

/// Checks `d/dt ln⟨x⟩ = w⁽¹⁾ + w⁽²⁾/2` for `dx/dt = ξ(t) x` with `ξ` a
/// short-correlated OU process of mean `w⁽¹⁾` and variance integral `w⁽²⁾`.
pub fn fn_delta_scalar_check(w1: f64, w2: f64, options: &FnCheckOptions) -> Result<FnCheckReport> {
    if !(w2 >= 0.0) {
        return Err(invalid("w2", "must be nonnegative"));
    }
    let [t1, t2] = options.horizons;
    if !(t2 > t1 && t1 > 0.0) {
        return Err(invalid("horizons", "need 0 < T1 < T2"));
    }
    let spec = ProcessSpec::new(
        ProcessKind::ScalarOu {
            shape: CorrelationShape::exponential(options.epsilon),
            mean: w1,
            variance_integral: w2,
        },
        options.seed,
    );
    let samples = simulate_log_d(
        &spec,
        SchemeKind::Midpoint,
        options.dt,
        &[t1, t2],
        options.n_realizations,
        options.workers,
    )?;
    let m = samples.n_realizations();
    let column = |j: usize, idx: &mut dyn Iterator<Item = usize>| -> Vec<f64> { idx.map(|r| samples.get(r, j)[0]).collect() };
    let horizons = samples.horizons.clone();
    let rate = |x1: &[f64], x2: &[f64]| {
        (log_sum_exp_with_ess(x2).0 - log_sum_exp_with_ess(x1).0) / (horizons[1] - horizons[0])
    };
    let x1 = column(0, &mut (0..m));
    let x2 = column(1, &mut (0..m));
    let measured = rate(&x1, &x2);
    let ess = log_sum_exp_with_ess(&x2).1;
    let seed = options.seed ^ 0x3c6e_f372_fe94_f82b;
    let mut reps = run_indexed(options.bootstrap_resamples, options.workers, |b| {
        let mut rng = stream(seed, b, StreamTag::Bootstrap);
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
        let a = column(0, &mut idx.iter().copied());
        let c = column(1, &mut idx.iter().copied());
        rate(&a, &c)
    });
    reps.sort_by(f64::total_cmp);
    let ci_half_width = if reps.is_empty() {
        0.0
    } else {
        let q = |p: f64| reps[((p * (reps.len() - 1) as f64).round()) as usize];
        0.5 * (q(0.5 * (1.0 + ONE_SIGMA)) - q(0.5 * (1.0 - ONE_SIGMA)))
    };
    let predicted = w1 + 0.5 * w2;
    let naive = w1 + w2;
    // the deterministic case has a zero-width interval; allow integrator
    // truncation there
    let slack = 1e-9 * (1.0 + w1.abs());
    let deviation = (measured - predicted).abs() / ci_half_width.max(slack);
    let naive_deviation = (measured - naive).abs() / ci_half_width.max(slack);
    Ok(FnCheckReport {
        w1,
        w2,
        predicted,
        naive,
        measured,
        ci_half_width,
        ess,
        reliable: ess >= options.ess_min,
        deviation,
        naive_deviation,
        consistent: deviation <= 3.0,
        naive_rejected: w2 > 0.0 && naive_deviation > 5.0,
    })
}
