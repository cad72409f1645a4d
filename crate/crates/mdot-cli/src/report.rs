//! CSV and JSON emission helpers. CSV floats carry 17 significant digits so
//! downstream plotting round-trips losslessly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use mdot::solver::{SolveReport, SolveTrace};

use crate::CliError;

/// Lossless float formatting for CSV cells.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `contents` to `path`, or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, contents).map_err(CliError::io),
        None => {
            io::stdout()
                .write_all(contents.as_bytes())
                .map_err(CliError::io)?;
            Ok(())
        }
    }
}

/// The per-iteration trace as CSV with columns `t,k,rho,g,elapsed_s`.
pub fn trace_csv(trace: &SolveTrace, zero_time: bool) -> String {
    let mut out = String::from("t,k,rho,g,elapsed_s\n");
    for row in &trace.rows {
        let elapsed = if zero_time { 0.0 } else { row.elapsed_s };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.t,
            row.k,
            fmt_f64(row.rho),
            fmt_f64(row.dual_objective),
            fmt_f64(elapsed)
        ));
    }
    out
}

/// Full JSON report: resolved config, per-step summaries, totals.
pub fn report_json(
    report: &SolveReport,
    instance: serde_json::Value,
    zero_time: bool,
) -> serde_json::Value {
    let time = |x: f64| if zero_time { 0.0 } else { x };
    let steps: Vec<serde_json::Value> = report
        .steps
        .iter()
        .map(|s| {
            serde_json::json!({
                "t": s.t,
                "gamma_t": s.gamma_t,
                "initial_rho": s.initial_rho,
                "final_rho": s.final_rho,
                "iterations": s.iterations,
                "phi_prime_evals": s.phi_prime_evals,
                "elapsed_s": time(s.elapsed_s),
            })
        })
        .collect();
    serde_json::json!({
        "instance": instance,
        "config": {
            "gamma_bar": report.config.gamma_bar,
            "schedule": report.config.schedule,
            "epsilon": report.config.epsilon,
            "projector": report.config.projector.to_string(),
            "max_proj_iters": report.config.max_proj_iters,
            "initial_plan": match report.config.initial_plan {
                mdot::solver::InitialPlan::Independence => "independence",
                mdot::solver::InitialPlan::AllOnes => "all_ones",
            },
        },
        "result": {
            "objective": report.objective,
            "final_rho": report.steps.last().map(|s| s.final_rho),
            "steps": steps,
            "totals": {
                "dual_updates": report.trace.total_dual_updates,
                "phi_prime_evals": report.trace.total_phi_prime_evals,
                "elapsed_s": time(report.trace.total_elapsed_s),
            },
        },
    })
}
