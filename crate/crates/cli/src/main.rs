// `!(x > 0.0)` is how NaN gets rejected along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use lyapunov_lab_cli::config::{preset, ExperimentConfig, Format, Overrides, PRESETS};
use lyapunov_lab_cli::error::CliError;
use lyapunov_lab_cli::output::RunWriter;
use lyapunov_lab_cli::run::{self, LegendreInput};
use lyapunov_lab_cli::verify;
use std::path::PathBuf;
use std::process::ExitCode;

/// Lyapunov exponents and generalized Lyapunov exponents of linear flows
/// driven by colored matrix noise.
#[derive(Parser)]
#[command(name = "lyapunov-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the Lyapunov spectrum.
    Le(ExperimentArgs),
    /// Estimate the generalized Lyapunov exponent on an η grid.
    Gle(ExperimentArgs),
    /// Closed-form predictions for the configured process, where they exist.
    Predict(ExperimentArgs),
    /// Discrete Legendre transform of a tabulated function.
    Legendre(LegendreArgs),
    /// Run a verification suite and print one line per criterion.
    Verify(VerifyArgs),
    /// Write one noise path, and optionally the evolution along it.
    DumpPath(DumpArgs),
    /// List presets, or print one as a config document.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config document, or a manifest from an earlier run.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Write only this format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(CliError::config("config", "pass --config or --preset")),
        };
        let o = &self.overrides;
        cfg.apply(&Overrides {
            seed: o.seed,
            workers: o.workers,
            output_dir: o.output_dir.clone(),
            format: o.format,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct LegendreArgs {
    /// CSV with columns x, f(x).
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Telegraph CGF with switching amplitude and rate, `SIGMA,NU`.
    #[arg(long, group = "source", value_delimiter = ',')]
    telegraph: Option<Vec<f64>>,
    /// `variance · x² / 2`.
    #[arg(long, group = "source")]
    quadratic: Option<f64>,
    /// Comma-separated query points; defaults to 241 points on [-3, 3].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    query: Option<Vec<f64>>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of the suite names, or `all`.
    suite: String,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write `verify.json` and a manifest here.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Print the detail lines under each criterion.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, default_value_t = 0)]
    realization: u64,
    /// Defaults to `T / dt`.
    #[arg(long)]
    steps: Option<usize>,
    /// Evolve along the path and write `trajectory.csv`.
    #[arg(long)]
    evolve: bool,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
}

fn formats(f: Option<Format>) -> Vec<Format> {
    f.map_or_else(|| vec![Format::Json, Format::Csv], |f| vec![f])
}

fn pm(v: &[f64], e: &[f64]) -> String {
    v.iter().zip(e).map(|(v, e)| format!("{v:.5} ± {e:.5}")).collect::<Vec<_>>().join(", ")
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Le(args) => {
            let cfg = args.load()?;
            let r = run::run_le(&cfg)?;
            println!("lambda: {}", pm(&r.result.lambda, &r.result.stderr));
            println!("sum:    {:.3e} ± {:.3e}", r.result.sum, r.result.sum_stderr);
            println!("wrote {}", cfg.outputs.dir.display());
        }
        Command::Gle(args) => {
            let cfg = args.load()?;
            let r = run::run_gle(&cfg)?;
            let g = &r.result;
            for (i, eta) in g.eta_grid.iter().enumerate() {
                println!("w({eta:?}) = {:.5}  [{:.5}, {:.5}]  ess {:.0}", g.w[i], g.ci_low[i], g.ci_high[i], g.ess[i]);
            }
            println!("wrote {}", cfg.outputs.dir.display());
        }
        Command::Predict(args) => {
            let cfg = args.load()?;
            let r = run::run_predict(&cfg)?;
            if let Some(l) = &r.result.lambda {
                println!("lambda: {l:?}");
            }
            for p in &r.result.gle {
                println!("w({:?}) = {:.6}", p.eta, p.w);
            }
            for n in &r.result.notes {
                println!("note: {n}");
            }
            println!("wrote {}", cfg.outputs.dir.display());
        }
        Command::Legendre(args) => {
            let input = match (&args.input, &args.telegraph, args.quadratic) {
                (Some(p), _, _) => LegendreInput::from_csv(p)?,
                (None, Some(t), _) if t.len() == 2 => LegendreInput::Telegraph { sigma: t[0], nu: t[1] },
                (None, Some(_), _) => return Err(CliError::config("telegraph", "expected SIGMA,NU")),
                (None, None, Some(v)) => LegendreInput::Quadratic { variance: v },
                _ => return Err(CliError::config("input", "pass --input, --telegraph or --quadratic")),
            };
            let r = run::run_legendre(&input, args.query, &args.output_dir, &formats(args.format))?;
            let n_ext = r.result.extrapolated.iter().filter(|e| **e).count();
            println!("{} points, {n_ext} on the table boundary; wrote {}", r.result.query.len(), args.output_dir.display());
        }
        Command::Verify(args) => {
            let verbose = args.verbose;
            let report = verify::run_suite(&args.suite, args.workers, |c| {
                println!("{}", c.line());
                if verbose {
                    for d in &c.details {
                        println!("    {d}");
                    }
                }
            })
            .ok_or_else(|| CliError::config("suite", format!("unknown suite; available: {}", verify::suite_names().join(", "))))?;
            if let Some(dir) = &args.output_dir {
                let mut out = RunWriter::with_arguments("verify", dir, &[Format::Json], serde_json::json!({ "suite": args.suite }))?;
                out.write_json("verify.json", &report)?;
                out.finish()?;
            }
            if !report.pass {
                let failed: Vec<String> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
                return Err(CliError::VerifyFailed(format!("criteria {}", failed.join(", "))));
            }
        }
        Command::DumpPath(args) => {
            let cfg = args.experiment.load()?;
            let r = run::run_dump_path(&cfg, args.realization, args.steps, args.evolve, args.record_every)?;
            println!("{} steps of realization {}; wrote {}", r.result.steps, r.result.realization, cfg.outputs.dir.display());
        }
        Command::Presets { name: None } => {
            for (n, _) in PRESETS {
                println!("{n}");
            }
        }
        Command::Presets { name: Some(n) } => {
            println!("{}", preset(&n)?.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // suites deliberately probe thin tails; keep their warnings opt-in
    let level = if matches!(cli.command, Command::Verify(_)) { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
