//! `mdot mnist`: pairwise OT distances between MNIST digits. Samples
//! `2 * pairs` images without replacement, converts them to noisy pixel
//! distributions, and solves first-half-vs-second-half pairs under the
//! 256-per-step schedule and the H_min-based tolerance.

use std::path::PathBuf;

use clap::Args;
use mdot::datagen::{mnist_cost_matrix, mnist_to_distribution, parse_idx};
use mdot::dual::h_min;
use mdot::solver::{default_epsilon, solve, step_schedule, InitialPlan, MdConfig, EPSILON_FLOOR};
use mdot::{Marginals, ProjectorKind, SolveError};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{fmt_f64, write_output};
use crate::{parse_projector, CliError};

#[derive(Args)]
pub struct MnistArgs {
    /// IDX image file (e.g. train-images-idx3-ubyte)
    #[arg(long)]
    images: PathBuf,
    /// Number of OT distances to compute (samples 2*pairs images)
    #[arg(long, default_value_t = 512)]
    pairs: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 256.0)]
    gamma_bar: f64,
    /// Projection tolerance; defaults to the H_min formula per pair
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value = "pncg", value_parser = parse_projector)]
    proj: ProjectorKind,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    /// Results CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write zeros in elapsed-time fields so output bytes are reproducible
    #[arg(long)]
    no_timing: bool,
}

pub fn run(args: MnistArgs) -> Result<(), CliError> {
    if args.pairs == 0 {
        return Err(CliError::new(1, "pairs must be at least 1"));
    }
    let images = parse_idx(&args.images).map_err(|e| CliError::new(1, e.to_string()))?;
    let wanted = 2 * args.pairs;
    if images.count() < wanted {
        return Err(CliError::new(
            1,
            format!("need {wanted} images, file holds {}", images.count()),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let picks = rand::seq::index::sample(&mut rng, images.count(), wanted).into_vec();
    let dists: Vec<Vec<f64>> = picks
        .iter()
        .map(|&i| mnist_to_distribution(images.image(i), &mut rng))
        .collect();
    let cost = mnist_cost_matrix();

    let mut out = String::from(
        "pair,row_image,col_image,h_min_bits,t_steps,epsilon,status,iterations,phi_prime_evals,final_rho,objective,elapsed_s\n",
    );
    for p in 0..args.pairs {
        let r = dists[p].clone();
        let c = dists[args.pairs + p].clone();
        let m = Marginals::new(r, c).map_err(|e| CliError::new(1, e.to_string()))?;
        let hm = h_min(&m);
        let epsilon = args
            .eps
            .unwrap_or_else(|| default_epsilon(hm, args.gamma_bar).max(EPSILON_FLOOR));
        let config = MdConfig {
            gamma_bar: args.gamma_bar,
            schedule: step_schedule(args.gamma_bar),
            epsilon,
            projector: args.proj,
            max_proj_iters: args.max_iters,
            initial_plan: InitialPlan::Independence,
        };
        let (status, iters, evals, rho, objective, elapsed) =
            match solve(&cost, &m, &config) {
                Ok(report) => (
                    "ok",
                    Some(report.trace.total_dual_updates),
                    Some(report.trace.total_phi_prime_evals),
                    report.steps.last().map(|s| s.final_rho),
                    Some(report.objective),
                    Some(if args.no_timing {
                        0.0
                    } else {
                        report.trace.total_elapsed_s
                    }),
                ),
                Err(SolveError::Instability { .. }) | Err(SolveError::LineSearch { .. }) => {
                    ("instability", None, None, None, None, None)
                }
                Err(SolveError::NonConvergence { .. }) => {
                    ("non_convergence", None, None, None, None, None)
                }
                Err(_) => ("error", None, None, None, None, None),
            };
        out.push_str(&format!(
            "{p},{},{},{},{},{},{status},{},{},{},{},{}\n",
            picks[p],
            picks[args.pairs + p],
            fmt_f64(hm / std::f64::consts::LN_2),
            config.schedule.len(),
            fmt_f64(epsilon),
            iters.map(|x| x.to_string()).unwrap_or_default(),
            evals.map(|x| x.to_string()).unwrap_or_default(),
            rho.map(fmt_f64).unwrap_or_default(),
            objective.map(fmt_f64).unwrap_or_default(),
            elapsed.map(fmt_f64).unwrap_or_default(),
        ));
    }
    write_output(args.out.as_deref(), &out)
}
