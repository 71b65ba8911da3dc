use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use boinit::harness::config::{TauMetric, TauRule};
use boinit::harness::report::{
    curves_csv, normalized_curves_csv, normalized_metrics_csv, render_compare, render_sensitivity,
};
use boinit::harness::sensitivity::{normalized_curves, sweep_runs};
use boinit::harness::{
    aggregate_curves, analyze, compare, run_experiment, ExperimentConfig, Format, Manifest,
    RunOptions, SweepFilter,
};
use boinit::trace::read_trace_dir;
use boinit::Error;

#[derive(Parser)]
#[command(name = "boinit", version, about = "Compare initialization strategies for Bayesian optimization")]
struct Cli {
    /// Parallel worker threads for `run`.
    #[arg(long, global = true, env = "BOINIT_JOBS")]
    jobs: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every objective × arm × repetition cell of an experiment.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Override the configuration's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configuration's output directory.
        #[arg(long, env = "BOINIT_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Win/tie/loss tallies and binomial tests against the uniform baseline.
    Compare {
        #[arg(short, long)]
        dir: PathBuf,
        #[arg(long)]
        tau_conv: Option<f64>,
        /// A number, or `min-spread` for the smallest objective spread.
        #[arg(long)]
        tau_metric: Option<String>,
        /// Write the report here as well as to stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Correlate run metrics with the truncated-Gaussian concentration λ.
    Sensitivity {
        #[arg(short, long)]
        dir: PathBuf,
        /// Fraction of iterations counted as the early phase.
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        /// Restrict to these λ values (comma separated).
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        /// Restrict to these objectives.
        #[arg(long = "objective")]
        objectives: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidParameter { .. }
        | Error::InvalidSpace(_) => 2,
        _ => 1,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            context: format!("creating {}", parent.display()),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        context: format!("writing {}", path.display()),
        source: e,
    })
}

fn parse_tau_metric(s: &str) -> Result<TauMetric, Error> {
    if s == "min-spread" {
        return Ok(TauMetric::Rule(TauRule::MinSpread));
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| *v >= 0.0 && v.is_finite())
        .map(TauMetric::Value)
        .ok_or_else(|| Error::InvalidArgument(format!("bad --tau-metric `{s}`")))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run {
            config,
            seed,
            output_dir,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let opts = RunOptions {
                jobs: cli.jobs,
                seed,
                output_dir,
            };
            let (out, manifest) = run_experiment(&cfg, &opts)?;
            let failed = manifest.failures();
            println!(
                "{} runs written to {} ({} failed)",
                manifest.cells.len() - failed,
                out.display(),
                failed
            );
            for c in manifest.cells.iter().filter(|c| c.error.is_some()) {
                eprintln!("{}: {}", c.run_id, c.error.as_deref().unwrap_or_default());
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Compare {
            dir,
            tau_conv,
            tau_metric,
            output,
        } => {
            let mut th = Manifest::load(&dir).map(|m| m.thresholds).unwrap_or_default();
            if let Some(t) = tau_conv {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(Error::InvalidArgument(format!("bad --tau-conv {t}")));
                }
                th.tau_conv = t;
            }
            if let Some(t) = tau_metric {
                th.tau_metric = parse_tau_metric(&t)?;
            }
            let traces = read_trace_dir(&dir)?;
            let report = compare(&traces, &th)?;
            let text = render_compare(&report, cli.format);
            print!("{text}");
            // the text layout already lists warnings
            if cli.format != Format::Text {
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
            }
            write_file(&dir.join("reports").join("curves.csv"), &curves_csv(&aggregate_curves(&traces)))?;
            if let Some(p) = output {
                write_file(&p, &text)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sensitivity {
            dir,
            split,
            lambdas,
            objectives,
            output,
        } => {
            let traces = read_trace_dir(&dir)?;
            let filter = SweepFilter { objectives, lambdas };
            let report = analyze(&traces, &filter, split)?;
            let text = render_sensitivity(&report, cli.format);
            print!("{text}");
            let reports = dir.join("reports");
            write_file(
                &reports.join("sensitivity_curves.csv"),
                &normalized_curves_csv(&normalized_curves(&sweep_runs(&traces, &filter))),
            )?;
            write_file(&reports.join("sensitivity_metrics.csv"), &normalized_metrics_csv(&report))?;
            if let Some(p) = output {
                write_file(&p, &text)?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

