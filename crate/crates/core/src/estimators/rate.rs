use super::gle::log_sum_exp_with_ess;
use crate::analytics::{convex_hull_values, legendre_transform};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

pub const MIN_BINS: usize = 16;

/// Bins with fewer counts than this are treated as tail.
const TAIL_COUNT: usize = 10;

/// Rate function `J(a)` of a time average on a sorted grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionTable {
    pub grid: Vec<f64>,
    #[serde(with = "super::float_serde")]
    pub j: Vec<f64>,
    /// Sparse tail bins, or `+∞` outside a point mass.
    pub extrapolated: Vec<bool>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_samples: usize,
    pub bin_width: f64,
    pub mean: f64,
    pub unimodal: bool,
    /// `J` recomputed as the transform of the empirical CGF of the same
    /// samples, on the same grid.
    #[serde(with = "super::float_serde")]
    pub legendre_path: Vec<f64>,
    /// Largest `|J - legendre_path|` over non-extrapolated points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_max_deviation: Option<f64>,
    pub warnings: Vec<String>,
}

impl RateFunctionTable {
    /// Indices of the non-extrapolated points.
    pub fn bulk(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(|&i| !self.extrapolated[i])
    }
}

struct Histogram {
    lo: f64,
    width: f64,
    counts: Vec<usize>,
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { lo, width, counts }
}

fn has_interior_gap(counts: &[usize]) -> bool {
    let first = counts.iter().position(|&c| c > 0);
    let last = counts.iter().rposition(|&c| c > 0);
    match (first, last) {
        (Some(f), Some(l)) => counts[f..=l].contains(&0),
        _ => false,
    }
}

/// No bin sits significantly (3 Poisson sigmas on both sides) below the
/// peaks to its left and right.
fn is_unimodal(counts: &[usize]) -> bool {
    let c: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mut left = vec![0.0f64; c.len()];
    let mut right = vec![0.0f64; c.len()];
    for i in 1..c.len() {
        left[i] = left[i - 1].max(c[i - 1]);
    }
    for i in (0..c.len().saturating_sub(1)).rev() {
        right[i] = right[i + 1].max(c[i + 1]);
    }
    (0..c.len()).all(|i| {
        let peak = left[i].min(right[i]);
        c[i] + 3.0 * c[i].sqrt() >= peak - 3.0 * peak.sqrt()
    })
}

/// `J(a) = -(1/T) ln ρ̂(a)` from the histogram of the time averages,
/// shifted to `min J = 0` and replaced by its convex hull.
///
/// `n_bins = None` picks Scott's rule. Empty bins inside the bulk halve the
/// bin count down to [`MIN_BINS`]; any that remain are dropped.
pub fn empirical_rate_function(averages: &[f64], horizon: f64, n_bins: Option<usize>) -> Result<RateFunctionTable> {
    let n = averages.len();
    if n < 2 {
        return Err(invalid("samples", "need at least two time averages"));
    }
    if averages.iter().any(|v| !v.is_finite()) {
        return Err(invalid("samples", "time averages must be finite"));
    }
    if !(horizon > 0.0) {
        return Err(invalid("T", "must be positive"));
    }
    if let Some(b) = n_bins {
        if b < MIN_BINS {
            return Err(invalid("n_bins", format!("must be at least {MIN_BINS}")));
        }
    }
    let mean = averages.iter().sum::<f64>() / n as f64;
    let (lo, hi) = averages
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-12 * mean.abs().max(1.0) {
        let h = 1e-3 * mean.abs().max(1.0);
        return Ok(RateFunctionTable {
            grid: vec![mean - h, mean, mean + h],
            j: vec![f64::INFINITY, 0.0, f64::INFINITY],
            extrapolated: vec![true, false, true],
            horizon,
            n_samples: n,
            bin_width: 0.0,
            mean,
            unimodal: true,
            legendre_path: vec![f64::INFINITY, 0.0, f64::INFINITY],
            cross_max_deviation: Some(0.0),
            warnings: vec!["degenerate sample: point mass".into()],
        });
    }
    let sd = (averages.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut bins = n_bins.unwrap_or_else(|| {
        let scott = 3.49 * sd * (n as f64).powf(-1.0 / 3.0);
        (((hi - lo) / scott).ceil() as usize).max(MIN_BINS)
    });
    let mut warnings = Vec::new();
    let mut hist = histogram(averages, lo, hi, bins);
    while has_interior_gap(&hist.counts) && bins > MIN_BINS {
        bins = (bins / 2).max(MIN_BINS);
        hist = histogram(averages, lo, hi, bins);
    }
    if has_interior_gap(&hist.counts) {
        warnings.push("empty bins inside the bulk were dropped".into());
    }
    let unimodal = is_unimodal(&hist.counts);
    if !unimodal {
        warnings.push("histogram of time averages is not unimodal; T may be too short".into());
    }

    let mut grid = Vec::new();
    let mut raw = Vec::new();
    let mut extrapolated = Vec::new();
    for (i, &c) in hist.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        grid.push(hist.lo + (i as f64 + 0.5) * hist.width);
        raw.push(-(c as f64 / (n as f64 * hist.width)).ln() / horizon);
        extrapolated.push(c < TAIL_COUNT);
    }
    let mut j = convex_hull_values(&grid, &raw);
    let min = j.iter().copied().fold(f64::INFINITY, f64::min);
    j.iter_mut().for_each(|v| *v -= min);

    // second path: Legendre transform of the empirical scaled CGF
    let slopes: Vec<f64> = j.windows(2).zip(grid.windows(2)).map(|(f, x)| (f[1] - f[0]) / (x[1] - x[0])).collect();
    let (s_lo, s_hi) = slopes
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    let n_eta = 201;
    let etas: Vec<f64> = (0..n_eta)
        .map(|i| s_lo + (s_hi - s_lo) * i as f64 / (n_eta - 1) as f64)
        .collect();
    let mut buf = vec![0.0; n];
    let cgf: Vec<f64> = etas
        .iter()
        .map(|&eta| {
            for (b, a) in buf.iter_mut().zip(averages) {
                *b = horizon * eta * a;
            }
            (log_sum_exp_with_ess(&buf).0 - (n as f64).ln()) / horizon
        })
        .collect();
    let legendre_path = if s_hi > s_lo {
        legendre_transform(&etas, &cgf, &grid)?.values
    } else {
        vec![f64::NAN; grid.len()]
    };
    let cross_max_deviation = (0..grid.len())
        .filter(|&i| !extrapolated[i])
        .map(|i| (j[i] - legendre_path[i]).abs())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));

    Ok(RateFunctionTable {
        grid,
        j,
        extrapolated,
        horizon,
        n_samples: n,
        bin_width: hist.width,
        mean,
        unimodal,
        legendre_path,
        cross_max_deviation,
        warnings,
    })
}
