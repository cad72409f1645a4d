//! `mdot solve`: run one instance through the solver, emitting a JSON
//! report and optionally the per-iteration CSV trace.

use std::path::PathBuf;

use clap::Args;
use mdot::datagen::read_instance;
use mdot::dual::h_min;
use mdot::solver::{default_epsilon, solve, step_schedule, InitialPlan, MdConfig, EPSILON_FLOOR};
use mdot::ProjectorKind;

use crate::report::{report_json, trace_csv, write_output};
use crate::{parse_projector, CliError};

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s.to_ascii_lowercase().as_str() {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => Err(format!("unknown format '{other}' (expected csv|json)")),
    }
}

#[derive(Args)]
pub struct SolveArgs {
    /// Instance file produced by `mdot gen`
    #[arg(long)]
    instance: PathBuf,
    /// Total inverse-regularization budget
    #[arg(long)]
    gamma_bar: f64,
    /// Number of MD steps (uniform schedule); defaults to the largest
    /// fixed step at or below 256, i.e. T = max(1, floor(gamma_bar / 256))
    #[arg(long = "T")]
    t_steps: Option<usize>,
    /// Projection tolerance on rho; defaults to
    /// min(1e-5, 1e-5 (H_min/gamma_bar)^2)
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value = "pncg", value_parser = parse_projector)]
    proj: ProjectorKind,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Start from the all-ones base instead of r c^T
    #[arg(long)]
    ones_init: bool,
    /// Report destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the per-iteration CSV trace
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Report format for --out / stdout: the JSON report or the CSV trace
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,
    /// Write zeros in elapsed-time fields so output bytes are reproducible
    #[arg(long)]
    no_timing: bool,
}

pub fn run(args: SolveArgs) -> Result<(), CliError> {
    let instance = read_instance(&args.instance)
        .map_err(|e| CliError::new(1, format!("cannot read instance: {e}")))?;
    let config = resolve_config(&args, &instance)?;
    config
        .validate()
        .map_err(|e| CliError::new(1, e.to_string()))?;

    let report =
        solve(&instance.cost, &instance.marginals, &config).map_err(CliError::from_solve)?;

    if let Some(path) = &args.trace {
        write_output(Some(path), &trace_csv(&report.trace, args.no_timing))?;
    }
    let meta = serde_json::json!({
        "path": args.instance.display().to_string(),
        "n": instance.meta.n,
        "m": instance.meta.dim,
        "seed": instance.meta.seed,
        "achieved_entropy_r_bits": instance.meta.achieved_entropy_r / std::f64::consts::LN_2,
        "achieved_entropy_c_bits": instance.meta.achieved_entropy_c / std::f64::consts::LN_2,
    });
    match args.format {
        ReportFormat::Json => {
            let json = report_json(&report, meta, args.no_timing);
            let mut text = serde_json::to_string_pretty(&json).expect("serializable report");
            text.push('\n');
            write_output(args.out.as_deref(), &text)?;
        }
        ReportFormat::Csv => {
            write_output(args.out.as_deref(), &trace_csv(&report.trace, args.no_timing))?;
        }
    }
    Ok(())
}

fn resolve_config(
    args: &SolveArgs,
    instance: &mdot::datagen::Instance,
) -> Result<MdConfig, CliError> {
    if !(args.gamma_bar > 0.0) {
        return Err(CliError::new(1, "gamma-bar must be positive"));
    }
    let schedule = match args.t_steps {
        Some(t) if t >= 1 => vec![args.gamma_bar / t as f64; t],
        Some(_) => return Err(CliError::new(1, "T must be at least 1")),
        None => step_schedule(args.gamma_bar),
    };
    let epsilon = match args.eps {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(CliError::new(1, format!("eps must be positive, got {e}"))),
        None => default_epsilon(h_min(&instance.marginals), args.gamma_bar).max(EPSILON_FLOOR),
    };
    Ok(MdConfig {
        gamma_bar: args.gamma_bar,
        schedule,
        epsilon,
        projector: args.proj,
        max_proj_iters: args.max_iters,
        initial_plan: if args.ones_init {
            InitialPlan::AllOnes
        } else {
            InitialPlan::Independence
        },
    })
}
