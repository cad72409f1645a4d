//! `mdot verify`: desk-scale invariant suites with per-check slack lines.
//! Exits nonzero when any check fails.

use clap::Args;

use mdot::datagen::{synthetic_instance, SyntheticSpec};
use mdot::diagnostics::{contraction_check, exact_assignment_ot};
use mdot::dual::{self, gen_kl, h_min};
use mdot::projections::{approximate_wolfe, pncg_project};
use mdot::rounding::round_to_polytope;
use mdot::solver::{improvement_identity, solve, solve_with, MdConfig};
use mdot::{CostMatrix, Marginals, ProjectorKind, ScaledPlan};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::CliError;

#[derive(Args)]
pub struct VerifyArgs {
    /// Base seed for all randomized checks
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn random_instance(n: usize, seed: u64) -> (CostMatrix, Marginals) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Marginals::new(random_simplex(n, &mut rng), random_simplex(n, &mut rng)).unwrap();
    let cost = CostMatrix::new(
        n,
        (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect(),
    )
    .unwrap();
    (cost, m)
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn run(args: VerifyArgs) -> Result<(), CliError> {
    let mut outcomes = Vec::new();
    outcomes.push(descent_identity(args.seed));
    outcomes.push(gradient_fd(args.seed));
    outcomes.push(lemma1_identity(args.seed));
    let (lemma2, cor1) = schedule_checks(args.seed);
    outcomes.push(lemma2);
    outcomes.push(cor1);
    outcomes.push(prop1_bound(args.seed));
    outcomes.push(rounding_checks(args.seed));
    outcomes.push(prop2_contraction(args.seed));
    outcomes.push(warm_start(args.seed));
    outcomes.push(line_search_posthoc(args.seed));

    let mut failures = 0;
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("check {:<24} {verdict} ({})", o.name, o.detail);
        if !o.pass {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(CliError::new(1, format!("{failures} verification check(s) failed")));
    }
    println!("all {} checks passed", outcomes.len());
    Ok(())
}

fn descent_identity(seed: u64) -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..32u64 {
        let (cost, m) = random_instance(8, seed ^ (100 + k));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (200 + k));
        let mut plan = ScaledPlan::from_independence(&m);
        plan.gradient_step(rng.random_range(0.5..8.0), &cost);
        let sums = plan.marginals().unwrap();
        let (su, sv) = dual::sinkhorn_direction(&plan, &m).unwrap();
        let (gu, gv) = dual::dual_gradient(&plan, &m).unwrap();
        let lhs: f64 = su.iter().zip(&gu).map(|(a, b)| a * b).sum::<f64>()
            + sv.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>();
        let rhs = gen_kl(&sums.row, m.r()).unwrap()
            + gen_kl(m.r(), &sums.row).unwrap()
            + gen_kl(&sums.col, m.c()).unwrap()
            + gen_kl(m.c(), &sums.col).unwrap();
        worst = worst.max((lhs - rhs).abs() / rhs.max(1.0));
    }
    check(
        "descent-identity",
        worst <= 1e-12,
        format!("worst slack {worst:.3e}, tolerance 1e-12"),
    )
}

fn gradient_fd(seed: u64) -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..4u64 {
        let n = 6;
        let (cost, m) = random_instance(n, seed ^ (300 + k));
        let mut plan = ScaledPlan::from_independence(&m);
        plan.gradient_step(3.0, &cost);
        let (gu, gv) = dual::dual_gradient(&plan, &m).unwrap();
        let exact: Vec<f64> = gu.into_iter().chain(gv).collect();
        let h = 1e-6;
        let mut num = 0.0;
        let mut den = 0.0;
        for idx in 0..2 * n {
            let eval = |sign: f64| {
                let mut q = plan.clone();
                let mut u = q.u().to_vec();
                let mut v = q.v().to_vec();
                if idx < n {
                    u[idx] += sign * h;
                } else {
                    v[idx - n] += sign * h;
                }
                q.set_potentials(u, v).unwrap();
                dual::dual_objective(&q, &m).unwrap()
            };
            let fd = (eval(1.0) - eval(-1.0)) / (2.0 * h);
            num += (fd - exact[idx]) * (fd - exact[idx]);
            den += exact[idx] * exact[idx];
        }
        worst = worst.max((num / den.max(1e-24)).sqrt());
    }
    check(
        "gradient-fd",
        worst <= 1e-6,
        format!("worst rel error {worst:.3e}, tolerance 1e-6"),
    )
}

fn lemma1_identity(seed: u64) -> Outcome {
    let (cost, m) = random_instance(8, seed ^ 400);
    let cfg = MdConfig::uniform(32.0, 4, 1e-12, ProjectorKind::Pncg);
    let mut plans = vec![ScaledPlan::from_independence(&m).materialize().unwrap()];
    let ok = solve_with(&cost, &m, &cfg, |_, plan| {
        plans.push(plan.materialize().unwrap());
    })
    .is_ok();
    if !ok {
        return check("lemma1-identity", false, "solve failed".into());
    }
    let mut worst = 0.0f64;
    for w in plans.windows(2) {
        let (lhs, rhs) = improvement_identity(&w[0], &w[1], &cost, 8.0).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    check(
        "lemma1-identity",
        worst <= 1e-6,
        format!("max |lhs-rhs| {worst:.3e}, tolerance 1e-6"),
    )
}

fn schedule_checks(seed: u64) -> (Outcome, Outcome) {
    let (cost, m) = random_instance(8, seed ^ 500);
    let hm = h_min(&m);
    let mut finals = Vec::new();
    let mut cor1_worst = 0.0f64;
    let mut cor1_ok = true;
    for steps in [1usize, 4, 16] {
        let gamma_t = 32.0 / steps as f64;
        let cfg = MdConfig::uniform(32.0, steps, 1e-14, ProjectorKind::Pncg);
        let mut plans = vec![ScaledPlan::from_independence(&m).materialize().unwrap()];
        let res = solve_with(&cost, &m, &cfg, |_, plan| {
            plans.push(plan.materialize().unwrap());
        });
        if res.is_err() {
            return (
                check("lemma2-equivalence", false, "solve failed".into()),
                check("cor1-l1-bound", false, "solve failed".into()),
            );
        }
        for (t, w) in plans.windows(2).enumerate() {
            let dist = l1(&w[0], &w[1]);
            let spent = gamma_t * t as f64;
            let mut bound = gamma_t;
            if spent > 0.0 {
                bound = bound.min((hm * gamma_t / spent).sqrt());
            }
            if dist > bound + 1e-9 {
                cor1_ok = false;
            }
            cor1_worst = cor1_worst.max(dist / bound);
        }
        finals.push(plans.pop().unwrap());
    }
    let mut worst = 0.0f64;
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            worst = worst.max(l1(&finals[i], &finals[j]));
        }
    }
    (
        check(
            "lemma2-equivalence",
            worst <= 1e-6,
            format!("max pairwise L1 {worst:.3e} at eps 1e-14, tolerance 1e-6"),
        ),
        check(
            "cor1-l1-bound",
            cor1_ok,
            format!("worst dist/bound {cor1_worst:.3}"),
        ),
    )
}

fn prop1_bound(seed: u64) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut pass = true;
    for k in 0..4u64 {
        let n = 6;
        let inst = synthetic_instance(&SyntheticSpec {
            n,
            dim: 4,
            target_entropy_fraction: 0.7,
            entropy_tolerance: 0.05,
            seed: seed ^ (600 + k),
        })
        .unwrap();
        let m = Marginals::uniform(n);
        let opt = exact_assignment_ot(&inst.cost);
        for gamma_bar in [16.0, 64.0] {
            let cfg = MdConfig::uniform(gamma_bar, 1, 1e-11, ProjectorKind::Pncg);
            match solve(&inst.cost, &m, &cfg) {
                Ok(report) => {
                    let gap = report.objective - opt;
                    let bound = (n as f64).ln() / gamma_bar;
                    if gap > bound + 1e-9 {
                        pass = false;
                    }
                    worst = worst.max(gap / bound);
                }
                Err(_) => pass = false,
            }
        }
    }
    check(
        "prop1-bound",
        pass,
        format!("worst gap/bound {worst:.3} over 8 solves vs assignment oracle"),
    )
}

fn rounding_checks(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 700);
    let n = 8;
    let mut worst = 0.0f64;
    let mut pass = true;
    for _ in 0..20 {
        let m = Marginals::new(random_simplex(n, &mut rng), random_simplex(n, &mut rng)).unwrap();
        let mut f = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                f[i * n + j] = m.r()[i] * m.c()[j] * rng.random_range(0.95..1.05);
            }
        }
        let g = round_to_polytope(&f, &m);
        for i in 0..n {
            let s: f64 = g[i * n..(i + 1) * n].iter().sum();
            worst = worst.max((s - m.r()[i]).abs());
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| g[i * n + j]).sum();
            worst = worst.max((s - m.c()[j]).abs());
        }
        if g.iter().any(|&x| x < 0.0) {
            pass = false;
        }
    }
    check(
        "rounding",
        pass && worst <= 1e-12,
        format!("worst marginal error {worst:.3e}, tolerance 1e-12"),
    )
}

fn prop2_contraction(seed: u64) -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    for k in 0..2u64 {
        let (cost, m) = random_instance(8, seed ^ (800 + k));
        match contraction_check(&cost, &m, 4.0, 2, 1e-13, 400_000) {
            Ok(checks) => {
                for c in checks {
                    for (_, lhs, rhs) in c.rows {
                        if lhs > rhs + 1e-12 {
                            pass = false;
                        }
                        if rhs > 0.0 {
                            worst = worst.max(lhs / rhs);
                        }
                    }
                }
            }
            Err(_) => pass = false,
        }
    }
    check(
        "prop2-contraction",
        pass,
        format!("worst lhs/rhs {worst:.3e} across recorded Sinkhorn iterates"),
    )
}

fn warm_start(seed: u64) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for k in 0..2u64 {
        let (cost, m) = random_instance(32, seed ^ (900 + k));
        let cfg = MdConfig::uniform(128.0, 8, 1e-9, ProjectorKind::Pncg);
        match solve(&cost, &m, &cfg) {
            Ok(report) => {
                let first = report.steps.first().unwrap().initial_rho;
                let last = report.steps.last().unwrap().initial_rho;
                if last >= first {
                    pass = false;
                }
                detail = format!("rho0 {first:.3e} -> {last:.3e} over 8 steps");
            }
            Err(_) => pass = false,
        }
    }
    check("warm-start", pass, detail)
}

fn line_search_posthoc(seed: u64) -> Outcome {
    let (cost, m) = random_instance(32, seed ^ 1000);
    let mut plan = ScaledPlan::from_independence(&m);
    plan.gradient_step(64.0, &cost);
    match pncg_project(&mut plan, &m, 1e-9, 200_000, true) {
        Ok(res) => {
            let violations = res
                .trace
                .iter()
                .skip(1)
                .filter(|row| {
                    let ls = row.line_search.expect("pncg rows carry samples");
                    !approximate_wolfe(ls.phi_zero, ls.phi_alpha)
                })
                .count();
            let mean = res.phi_prime_evals as f64 / res.iterations.max(1) as f64;
            check(
                "line-search",
                violations == 0 && mean <= 6.0,
                format!("{violations} Wolfe violations, mean phi' evals/search {mean:.2}"),
            )
        }
        Err(_) => check("line-search", false, "projection failed".into()),
    }
}
