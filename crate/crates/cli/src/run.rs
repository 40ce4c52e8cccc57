//! One function per subcommand: run, then write results and the manifest.

use crate::config::{ExperimentConfig, Format, GleSource, OutputSpec, Workers};
use crate::error::CliError;
use crate::output::{RunManifest, RunWriter};
use lyapunov_lab::analytics::{
    analytic_gle_gaussian, analytic_lyapunov_gaussian, effective_delta_model, eta0, legendre_transform, EffectiveDeltaModel,
    LegendreTable,
};
use lyapunov_lab::estimators::{estimate_gle, estimate_le, estimate_scalar_cgf, GleEstimate, LeEstimate};
use lyapunov_lab::evolution::evolve_path;
use lyapunov_lab::processes::{sample_path, telegraph_cgf_oracle, KernelReport, ProcessKind};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Result file: the producing config (minus settings that cannot change
/// the numbers) and the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument<T> {
    pub schema: String,
    pub config: ExperimentConfig,
    pub result: T,
}

fn document<T>(kind: &str, config: &ExperimentConfig, result: T) -> ResultDocument<T> {
    let mut config = config.clone();
    config.workers = Workers::Auto;
    config.outputs = OutputSpec::default();
    ResultDocument {
        schema: format!("lyapunov-lab-{kind}/1"),
        config,
        result,
    }
}

fn columns(spec: &[(&str, &str)]) -> Vec<(String, String)> {
    spec.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

pub struct Run<T> {
    pub result: T,
    pub manifest: RunManifest,
}

pub fn run_le(config: &ExperimentConfig) -> Result<Run<LeEstimate>, CliError> {
    let mut opts = config.le.clone();
    opts.workers = config.workers.get();
    let est = estimate_le(
        &config.process,
        config.scheme,
        config.dt,
        config.le_horizon()?,
        config.n_realizations,
        &opts,
    )?;
    for w in &est.warnings {
        log::warn!("{w}");
    }
    let mut out = RunWriter::new("le", config)?;
    out.record_exclusions(&est.exclusions);
    if out.wants(Format::Json) {
        out.write_json("le.json", &document("le", config, &est))?;
    }
    if out.wants(Format::Csv) {
        let mut body = Vec::new();
        est.write_csv(&mut body)?;
        let cols = columns(&[
            ("k", "exponent index, 1 = fastest growing"),
            ("lambda", "Lyapunov exponent estimate"),
            ("stderr", "between-realization standard error of lambda"),
        ]);
        out.write_csv("le.csv", body, &cols)?;
    }
    Ok(Run {
        result: est,
        manifest: out.finish()?,
    })
}

pub fn run_gle(config: &ExperimentConfig) -> Result<Run<GleEstimate>, CliError> {
    let mut opts = config.gle.clone();
    opts.workers = config.workers.get();
    let grid = config.eta_points();
    let horizons = config.gle_horizons()?;
    let est = match config.source {
        GleSource::Matrix => estimate_gle(
            &config.process,
            config.scheme,
            config.dt,
            &horizons,
            config.n_realizations,
            &grid,
            &opts,
        )?,
        GleSource::Diagonal => estimate_scalar_cgf(&config.process, config.dt, &horizons, config.n_realizations, &grid, &opts)?,
    };
    for w in &est.warnings {
        log::warn!("{w}");
    }
    let mut out = RunWriter::new("gle", config)?;
    out.record_exclusions(&est.exclusions);
    if out.wants(Format::Json) {
        out.write_json("gle.json", &document("gle", config, &est))?;
    }
    if out.wants(Format::Csv) {
        let mut body = Vec::new();
        est.write_csv(&mut body)?;
        let mut cols: Vec<(String, String)> = (1..=est.dim)
            .map(|k| (format!("eta_{k}"), format!("component {k} of the moment order")))
            .collect();
        cols.extend(columns(&[
            ("w", "generalized Lyapunov exponent, extrapolated in 1/T"),
            ("ci_low", "lower end of the bootstrap interval"),
            ("ci_high", "upper end of the bootstrap interval"),
            ("ess", "smallest effective sample size over the horizons used"),
            ("T_extrapolation_residual", "RMS residual of the 1/T fit; empty without a fit"),
        ]));
        out.write_csv("gle.csv", body, &cols)?;
    }
    Ok(Run {
        result: est,
        manifest: out.finish()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedPoint {
    pub eta: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub dim: usize,
    pub eta0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelReport>,
    /// Closed-form exponents, when the process has them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    pub gle: Vec<PredictedPoint>,
    pub delta_model: EffectiveDeltaModel,
    pub notes: Vec<String>,
}

/// Closed-form predictions for the configured process.
type ClosedForm = Box<dyn Fn(&[f64]) -> f64>;

pub fn predict(config: &ExperimentConfig) -> Result<Prediction, CliError> {
    let spec = &config.process;
    let d = spec.dim();
    let grid = config.eta_points();
    let mut notes = Vec::new();
    let (kernel, lambda, w): (_, _, Option<ClosedForm>) = match &spec.kind {
        ProcessKind::GaussianIsotropicMatrix { kernel, shape, .. } => {
            let k = *kernel;
            let scale = shape.integral();
            let mut scaled = k;
            scaled.a *= scale;
            scaled.b *= scale;
            scaled.c *= scale;
            (
                Some(k.validate(d)),
                Some(analytic_lyapunov_gaussian(&scaled, d)),
                Some(Box::new(move |e: &[f64]| analytic_gle_gaussian(&scaled, d, e))),
            )
        }
        ProcessKind::ModulatedGaussianMatrix { kernel, .. } => {
            notes.push("no closed form; estimate the diagonal CGF and apply the shift identity".into());
            (Some(kernel.validate(d)), None, None)
        }
        ProcessKind::ScalarOu {
            mean, variance_integral, ..
        } => {
            let (m, v) = (*mean, *variance_integral);
            (None, Some(vec![m]), Some(Box::new(move |e: &[f64]| m * e[0] + 0.5 * v * e[0] * e[0])))
        }
        ProcessKind::ScalarTelegraph { sigma, nu } => {
            let (s, n) = (*sigma, *nu);
            (None, Some(vec![0.0]), Some(Box::new(move |e: &[f64]| telegraph_cgf_oracle(s, n, e[0]))))
        }
        ProcessKind::ConstantMatrix { .. } => {
            notes.push("deterministic generator: run `le` for its exponents".into());
            (None, None, None)
        }
    };
    let gle = match &w {
        Some(f) => grid.iter().map(|e| PredictedPoint { eta: e.clone(), w: f(e) }).collect(),
        None => Vec::new(),
    };
    let delta_model = effective_delta_model(spec, 4, None, config.gle.fit_ess_floor)?;
    Ok(Prediction {
        dim: d,
        eta0: eta0(d).values,
        kernel,
        lambda,
        gle,
        delta_model,
        notes,
    })
}

pub fn run_predict(config: &ExperimentConfig) -> Result<Run<Prediction>, CliError> {
    let p = predict(config)?;
    let mut out = RunWriter::new("predict", config)?;
    if out.wants(Format::Json) {
        out.write_json("predict.json", &document("predict", config, &p))?;
    }
    if out.wants(Format::Csv) && !p.gle.is_empty() {
        let mut body = String::new();
        let head: Vec<String> = (1..=p.dim).map(|k| format!("eta_{k}")).collect();
        body.push_str(&format!("{},w\n", head.join(",")));
        for pt in &p.gle {
            let eta: Vec<String> = pt.eta.iter().map(f64::to_string).collect();
            body.push_str(&format!("{},{}\n", eta.join(","), pt.w));
        }
        let mut cols: Vec<(String, String)> = head.iter().map(|h| (h.clone(), "moment order component".into())).collect();
        cols.push(("w".into(), "closed-form generalized Lyapunov exponent".into()));
        out.write_csv("predict.csv", body.into_bytes(), &cols)?;
    }
    Ok(Run {
        result: p,
        manifest: out.finish()?,
    })
}

/// `(x, f(x))` pairs to transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LegendreInput {
    Table { x: Vec<f64>, f: Vec<f64> },
    Telegraph { sigma: f64, nu: f64 },
    Quadratic { variance: f64 },
}

/// `[-3, 3]` with 241 points.
pub fn default_axis() -> Vec<f64> {
    (0..241).map(|i| -3.0 + 0.025 * i as f64).collect()
}

impl LegendreInput {
    /// Reads the first two columns of a CSV file; a non-numeric first row
    /// is taken as a header.
    pub fn from_csv(path: &Path) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::config("input", e.to_string()))?;
        let (mut x, mut f) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| CliError::config("input", e.to_string()))?;
            let parse = |j: usize| rec.get(j).and_then(|v| v.parse::<f64>().ok());
            match (parse(0), parse(1)) {
                (Some(a), Some(b)) => {
                    x.push(a);
                    f.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(CliError::config(&format!("input[{}]", i + 1), "expected two numeric columns")),
            }
        }
        Ok(Self::Table { x, f })
    }

    pub fn table(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Table { x, f } => (x.clone(), f.clone()),
            Self::Telegraph { sigma, nu } => {
                let x = default_axis();
                let f = x.iter().map(|e| telegraph_cgf_oracle(*sigma, *nu, *e)).collect();
                (x, f)
            }
            Self::Quadratic { variance } => {
                let x = default_axis();
                let f = x.iter().map(|e| 0.5 * variance * e * e).collect();
                (x, f)
            }
        }
    }
}

pub fn run_legendre(input: &LegendreInput, query: Option<Vec<f64>>, dir: &Path, formats: &[Format]) -> Result<Run<LegendreTable>, CliError> {
    let (x, f) = input.table();
    let query = query.unwrap_or_else(default_axis);
    let table = legendre_transform(&x, &f, &query)?;
    let args = serde_json::json!({ "input": input, "query": query });
    let mut out = RunWriter::with_arguments("legendre", dir, formats, args)?;
    if out.wants(Format::Json) {
        out.write_json("legendre.json", &table)?;
    }
    if out.wants(Format::Csv) {
        let mut body = String::from("a,value,extrapolated,argmax\n");
        for i in 0..table.query.len() {
            body.push_str(&format!("{},{},{},{}\n", table.query[i], table.values[i], table.extrapolated[i], table.argmax[i]));
        }
        let cols = columns(&[
            ("a", "dual variable"),
            ("value", "sup_x (a x - f(x)) over the input table"),
            ("extrapolated", "true where the supremum sits on the table boundary"),
            ("argmax", "maximizing input point"),
        ]);
        out.write_csv("legendre.csv", body.into_bytes(), &cols)?;
    }
    Ok(Run {
        result: table,
        manifest: out.finish()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpSummary {
    pub realization: u64,
    pub steps: usize,
    pub final_log_d: Option<Vec<f64>>,
}

/// One noise path and, optionally, the evolution along it.
pub fn run_dump_path(config: &ExperimentConfig, realization: u64, steps: Option<usize>, evolve: bool, record_every: usize) -> Result<Run<DumpSummary>, CliError> {
    let steps = match steps {
        Some(s) => s,
        None => (config.le_horizon()? / config.dt).round() as usize,
    };
    let path = sample_path(&config.process, config.dt, steps, realization)?;
    let mut out = RunWriter::new("dump-path", config)?;
    let mut body = Vec::new();
    path.write_csv(&mut body)?;
    let d = config.process.dim();
    let mut cols = vec![("t".to_string(), "time".to_string())];
    for i in 1..=d {
        for j in 1..=d {
            cols.push((format!("A_{i}{j}"), format!("noise entry ({i}, {j})")));
        }
    }
    out.write_csv("path.csv", body, &cols)?;
    let mut final_log_d = None;
    if evolve {
        let ev = evolve_path(&path, config.scheme, Some(record_every.max(1)))?;
        let mut body = Vec::new();
        ev.record.write_csv(&mut body)?;
        let mut cols = vec![("t".to_string(), "time".to_string())];
        for k in 1..=d {
            cols.push((format!("logD_{k}"), format!("log of the {k}-th Iwasawa diagonal factor")));
        }
        cols.extend(columns(&[
            ("orthogonality_residual", "max |RᵀR - I|"),
            ("det_residual", "Σ log D - ∫ tr A dt"),
        ]));
        out.write_csv("trajectory.csv", body, &cols)?;
        final_log_d = Some(ev.state.log_d);
    }
    let summary = DumpSummary {
        realization,
        steps,
        final_log_d,
    };
    Ok(Run {
        result: summary,
        manifest: out.finish()?,
    })
}
