//! `mdot sweep`: a cartesian parameter grid over freshly generated
//! instances, one CSV row per (configuration, instance) cell. Failures are
//! recorded per row and the sweep continues. Rows are ordered by grid index
//! regardless of which worker finishes first.

use std::path::PathBuf;

use clap::Args;
use mdot::datagen::{synthetic_instance, Instance, SyntheticSpec};
use mdot::dual::h_min;
use mdot::solver::{default_epsilon, solve, step_schedule, InitialPlan, MdConfig, EPSILON_FLOOR};
use mdot::{ProjectorKind, SolveError};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::report::{fmt_f64, write_output};
use crate::CliError;

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Entropy fractions, comma separated (e.g. 0.1,0.5,0.9)
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    entropies: Vec<f64>,
    /// Budgets, comma separated
    #[arg(long, value_delimiter = ',', default_value = "128")]
    gamma_bars: Vec<f64>,
    /// Step counts, comma separated; `auto` resolves by the 256-per-step rule
    #[arg(long, value_delimiter = ',', default_value = "auto")]
    t_values: Vec<String>,
    /// Projection tolerances, comma separated; `auto` uses the H_min formula
    #[arg(long, value_delimiter = ',', default_value = "auto")]
    eps_values: Vec<String>,
    /// Projection engines, comma separated subset of sinkhorn,ncg,pncg
    #[arg(long, value_delimiter = ',', default_value = "sinkhorn,pncg")]
    projectors: Vec<String>,
    /// Instances per configuration (seeds seed, seed+1, ...)
    #[arg(long, default_value_t = 4)]
    instances: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    entropy_tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    /// Also compute relative objective error against a high-budget
    /// reference solve per instance (gamma_bar = 2^14, eps = 1e-13)
    #[arg(long)]
    rel_error: bool,
    /// Raw per-cell CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregated CSV (mean and 5th/95th percentiles per configuration)
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Write zeros in elapsed-time fields so output bytes are reproducible
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy)]
enum Steps {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Copy)]
enum Eps {
    Auto,
    Fixed(f64),
}

struct Cell {
    index: usize,
    entropy: f64,
    gamma_bar: f64,
    steps: Steps,
    eps: Eps,
    projector: ProjectorKind,
    instance_idx: usize,
    seed: u64,
}

struct RowResult {
    cell: Cell,
    resolved_steps: usize,
    resolved_eps: f64,
    status: &'static str,
    message: String,
    iterations: Option<usize>,
    phi_evals: Option<usize>,
    final_rho: Option<f64>,
    objective: Option<f64>,
    elapsed_s: Option<f64>,
    rel_error: Option<f64>,
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    let steps: Vec<Steps> = args
        .t_values
        .iter()
        .map(|s| {
            if s.eq_ignore_ascii_case("auto") {
                Ok(Steps::Auto)
            } else {
                s.parse::<usize>()
                    .ok()
                    .filter(|&t| t >= 1)
                    .map(Steps::Fixed)
                    .ok_or_else(|| CliError::new(1, format!("bad T value '{s}'")))
            }
        })
        .collect::<Result<_, _>>()?;
    let eps_list: Vec<Eps> = args
        .eps_values
        .iter()
        .map(|s| {
            if s.eq_ignore_ascii_case("auto") {
                Ok(Eps::Auto)
            } else {
                s.parse::<f64>()
                    .ok()
                    .filter(|&e| e > 0.0)
                    .map(Eps::Fixed)
                    .ok_or_else(|| CliError::new(1, format!("bad eps value '{s}'")))
            }
        })
        .collect::<Result<_, _>>()?;
    let projectors: Vec<ProjectorKind> = args
        .projectors
        .iter()
        .map(|s| s.parse().map_err(|e: String| CliError::new(1, e)))
        .collect::<Result<_, _>>()?;

    // grid in fixed order: entropy, gamma_bar, T, eps, projector, instance
    let mut cells = Vec::new();
    let mut index = 0;
    for &entropy in &args.entropies {
        for &gamma_bar in &args.gamma_bars {
            for &steps in &steps {
                for &eps in &eps_list {
                    for &projector in &projectors {
                        for instance_idx in 0..args.instances {
                            cells.push(Cell {
                                index,
                                entropy,
                                gamma_bar,
                                steps,
                                eps,
                                projector,
                                instance_idx,
                                // instances are shared across configurations
                                // with matching entropy
                                seed: args.seed.wrapping_add(instance_idx as u64),
                            });
                            index += 1;
                        }
                    }
                }
            }
        }
    }

    let run_cell = |cell: Cell| -> RowResult { run_one(&args, cell) };
    #[cfg(feature = "parallel")]
    let mut rows: Vec<RowResult> = cells.into_par_iter().map(run_cell).collect();
    #[cfg(not(feature = "parallel"))]
    let mut rows: Vec<RowResult> = cells.into_iter().map(run_cell).collect();
    rows.sort_by_key(|r| r.cell.index);

    write_output(args.out.as_deref(), &raw_csv(&rows, args.no_timing))?;
    if let Some(path) = &args.summary {
        write_output(Some(path), &summary_csv(&rows, args.no_timing))?;
    }
    Ok(())
}

fn generate(args: &SweepArgs, entropy: f64, seed: u64) -> Result<Instance, String> {
    synthetic_instance(&SyntheticSpec {
        n: args.n,
        dim: args.m,
        target_entropy_fraction: entropy,
        entropy_tolerance: args.entropy_tol,
        seed,
    })
    .map_err(|e| e.to_string())
}

fn run_one(args: &SweepArgs, cell: Cell) -> RowResult {
    let mut row = RowResult {
        resolved_steps: 0,
        resolved_eps: f64::NAN,
        status: "ok",
        message: String::new(),
        iterations: None,
        phi_evals: None,
        final_rho: None,
        objective: None,
        elapsed_s: None,
        rel_error: None,
        cell,
    };
    let instance = match generate(args, row.cell.entropy, row.cell.seed) {
        Ok(i) => i,
        Err(message) => {
            row.status = "generation_failure";
            row.message = message;
            return row;
        }
    };
    let hm = h_min(&instance.marginals);
    let schedule = match row.cell.steps {
        Steps::Auto => step_schedule(row.cell.gamma_bar),
        Steps::Fixed(t) => vec![row.cell.gamma_bar / t as f64; t],
    };
    row.resolved_steps = schedule.len();
    row.resolved_eps = match row.cell.eps {
        Eps::Auto => default_epsilon(hm, row.cell.gamma_bar).max(EPSILON_FLOOR),
        Eps::Fixed(e) => e,
    };
    let config = MdConfig {
        gamma_bar: row.cell.gamma_bar,
        schedule,
        epsilon: row.resolved_eps,
        projector: row.cell.projector,
        max_proj_iters: args.max_iters,
        initial_plan: InitialPlan::Independence,
    };
    match solve(&instance.cost, &instance.marginals, &config) {
        Ok(report) => {
            row.iterations = Some(report.trace.total_dual_updates);
            row.phi_evals = Some(report.trace.total_phi_prime_evals);
            row.final_rho = report.steps.last().map(|s| s.final_rho);
            row.objective = Some(report.objective);
            row.elapsed_s = Some(report.trace.total_elapsed_s);
            if args.rel_error {
                match reference_objective(&instance, hm, args.max_iters) {
                    Ok(reference) if reference > 0.0 => {
                        row.rel_error = Some((report.objective - reference) / reference);
                    }
                    Ok(_) => {}
                    Err(message) => {
                        row.status = "reference_failure";
                        row.message = message;
                    }
                }
            }
        }
        Err(err) => {
            row.status = match err {
                SolveError::Instability { .. } | SolveError::LineSearch { .. } => "instability",
                SolveError::NonConvergence { .. } => "non_convergence",
                _ => "error",
            };
            row.message = err.to_string();
        }
    }
    row
}

/// Reference plan objective: high-budget PNCG solve, the "ground truth"
/// against which relative errors are reported.
fn reference_objective(instance: &Instance, hm: f64, max_iters: usize) -> Result<f64, String> {
    let gamma_bar = 16_384.0;
    let config = MdConfig {
        gamma_bar,
        schedule: step_schedule(gamma_bar),
        epsilon: 1e-13,
        projector: ProjectorKind::Pncg,
        max_proj_iters: max_iters,
        initial_plan: InitialPlan::Independence,
    };
    let _ = hm;
    solve(&instance.cost, &instance.marginals, &config)
        .map(|r| r.objective)
        .map_err(|e| e.to_string())
}

fn opt_num<T: std::fmt::Display>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn opt_f64(x: &Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn raw_csv(rows: &[RowResult], zero_time: bool) -> String {
    let mut out = String::from(
        "grid_index,entropy_fraction,gamma_bar,t_steps,epsilon,projector,instance,seed,status,iterations,phi_prime_evals,final_rho,objective,elapsed_s,rel_error,message\n",
    );
    for row in rows {
        let elapsed = if zero_time {
            row.elapsed_s.map(|_| 0.0)
        } else {
            row.elapsed_s
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.cell.index,
            fmt_f64(row.cell.entropy),
            fmt_f64(row.cell.gamma_bar),
            row.resolved_steps,
            fmt_f64(row.resolved_eps),
            row.cell.projector,
            row.cell.instance_idx,
            row.cell.seed,
            row.status,
            opt_num(&row.iterations),
            opt_num(&row.phi_evals),
            opt_f64(&row.final_rho),
            opt_f64(&row.objective),
            opt_f64(&elapsed),
            opt_f64(&row.rel_error),
            row.message.replace(',', ";"),
        ));
    }
    out
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

fn stats(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    (mean, percentile(&sorted, 0.05), percentile(&sorted, 0.95))
}

fn summary_csv(rows: &[RowResult], zero_time: bool) -> String {
    let mut out = String::from(
        "entropy_fraction,gamma_bar,t_steps,epsilon,projector,runs,ok,iterations_mean,iterations_p5,iterations_p95,elapsed_mean,elapsed_p5,elapsed_p95,objective_mean,rel_error_mean,rel_error_p5,rel_error_p95\n",
    );
    // group by configuration, preserving first-seen (grid) order
    let mut keys: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<&RowResult>> =
        std::collections::HashMap::new();
    for row in rows {
        let key = format!(
            "{},{},{},{},{}",
            fmt_f64(row.cell.entropy),
            fmt_f64(row.cell.gamma_bar),
            row.resolved_steps,
            fmt_f64(row.resolved_eps),
            row.cell.projector
        );
        if !groups.contains_key(&key) {
            keys.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    for key in keys {
        let group = &groups[&key];
        let ok: Vec<&&RowResult> = group.iter().filter(|r| r.status == "ok").collect();
        let iters: Vec<f64> = ok.iter().filter_map(|r| r.iterations).map(|x| x as f64).collect();
        let elapsed: Vec<f64> = if zero_time {
            ok.iter().filter_map(|r| r.elapsed_s).map(|_| 0.0).collect()
        } else {
            ok.iter().filter_map(|r| r.elapsed_s).collect()
        };
        let objectives: Vec<f64> = ok.iter().filter_map(|r| r.objective).collect();
        let rel: Vec<f64> = ok.iter().filter_map(|r| r.rel_error).collect();
        let (im, i5, i95) = stats(&iters);
        let (em, e5, e95) = stats(&elapsed);
        let (om, _, _) = stats(&objectives);
        let (rm, r5, r95) = stats(&rel);
        out.push_str(&format!(
            "{key},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            group.len(),
            ok.len(),
            fmt_f64(im),
            fmt_f64(i5),
            fmt_f64(i95),
            fmt_f64(em),
            fmt_f64(e5),
            fmt_f64(e95),
            fmt_f64(om),
            fmt_f64(rm),
            fmt_f64(r5),
            fmt_f64(r95),
        ));
    }
    out
}
