use super::{det_residual, EvolutionState, SchemeKind, Stepper};
use crate::error::{invalid, Result};
use crate::processes::SamplePath;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub log_d: Vec<f64>,
    pub orthogonality_residual: f64,
    pub det_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    /// Columns `t, logD_1 … logD_d, orthogonality_residual, det_residual`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.rows.first().map_or(0, |r| r.log_d.len());
        write!(out, "t")?;
        for k in 1..=d {
            write!(out, ",logD_{k}")?;
        }
        writeln!(out, ",orthogonality_residual,det_residual")?;
        for row in &self.rows {
            write!(out, "{}", row.t)?;
            for v in &row.log_d {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{},{}", row.orthogonality_residual, row.det_residual)?;
        }
        Ok(())
    }
}

/// Outcome of integrating along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEvolution {
    pub state: EvolutionState,
    /// `∫ tr A dt` with the quadrature the stepper saw.
    pub integral_trace: f64,
    pub record: TrajectoryRecord,
}

fn row(state: &EvolutionState, integral_trace: f64) -> TrajectoryRow {
    TrajectoryRow {
        t: state.t,
        log_d: state.log_d.clone(),
        orthogonality_residual: state.orthogonality_residual(),
        det_residual: det_residual(state, integral_trace),
    }
}

/// Integrates along `path`, treating `A` as piecewise linear between samples
/// and taking `substeps` equal steps per sample interval, each driven by the
/// interpolant at its midpoint. `record_every` (in sample intervals) controls
/// the trajectory dump.
pub fn evolve_path_substepped(
    path: &SamplePath,
    initial: EvolutionState,
    scheme: SchemeKind,
    substeps: usize,
    record_every: Option<usize>,
) -> Result<PathEvolution> {
    if substeps == 0 {
        return Err(invalid("substeps", "must be at least 1"));
    }
    let d = path.dim;
    let mut state = initial;
    let mut stepper = Stepper::new(d, scheme);
    let h = path.dt / substeps as f64;
    let mut a = vec![0.0; d * d];
    let mut integral_trace = 0.0;
    let mut record = TrajectoryRecord::default();
    if record_every.is_some() {
        record.rows.push(row(&state, integral_trace));
    }
    for n in 0..path.len().saturating_sub(1) {
        let (lo, hi) = (path.at(n), path.at(n + 1));
        for s in 0..substeps {
            let f = (s as f64 + 0.5) / substeps as f64;
            let mut tr = 0.0;
            for (k, v) in a.iter_mut().enumerate() {
                *v = if substeps == 1 { 0.5 * (lo[k] + hi[k]) } else { lo[k] + f * (hi[k] - lo[k]) };
            }
            for i in 0..d {
                tr += a[i * d + i];
            }
            stepper.step(&mut state, &a, h)?;
            integral_trace += tr * h;
        }
        if let Some(every) = record_every {
            if (n + 1) % every.max(1) == 0 {
                record.rows.push(row(&state, integral_trace));
            }
        }
    }
    Ok(PathEvolution {
        state,
        integral_trace,
        record,
    })
}

/// One step per sample interval with the trapezoidal average of the
/// endpoint samples.
pub fn evolve_path(path: &SamplePath, scheme: SchemeKind, record_every: Option<usize>) -> Result<PathEvolution> {
    evolve_path_substepped(path, EvolutionState::identity(path.dim), scheme, 1, record_every)
}
