//! End-to-end acceptance checks on the default scenario. Prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::finite_diff::{channel_derivative_error, jacobian_error};
use common::{random_fim, random_scenario, rel_diff};
use locpriv::beampattern::{angle_grid, beampattern, local_maxima, nearest_index, radiated_power, GRID_POINTS};
use locpriv::benchmarks::{benchmark_one, benchmark_two, crb_min_unconstrained};
use locpriv::channel::geometry_to_params;
use locpriv::fim::{crb_full_inverse, crb_position, PositionFim};
use locpriv::pdd::{extract_beamformers, run_pdd_with, ExtractionMode, LiftedSolution, PddConfig};
use locpriv::scenario::{default_scenario, watt_to_dbm, Link};
use locpriv::sweep::{Method, Sweeper};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Thresholds (m²) of the privacy sweep.
const SWEEP: [f64; 4] = [0.1, 1.0, 4.0, 10.0];

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("[{}] {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

struct Run {
    gamma: f64,
    sol: LiftedSolution,
    seconds: f64,
}

fn pdd_contract(sol: &LiftedSolution, cfg: &PddConfig) -> Result<(), String> {
    let accepted: Vec<f64> = sol.trace.iter().filter(|r| r.dual_step).map(|r| r.h).collect();
    for w in accepted.windows(2) {
        if w[1] > cfg.q * w[0] {
            return Err(format!("dual-step h went {:e} -> {:e}", w[0], w[1]));
        }
    }
    if !(sol.h < cfg.outer_tol) {
        return Err(format!("final h {:e}", sol.h));
    }
    for (k, obj) in sol.inner_objectives.iter().enumerate() {
        for w in obj.windows(2) {
            if w[1] > w[0] + 10.0 * cfg.solver_tol * w[0].abs().max(1.0) {
                return Err(format!("outer {}: objective rose {:e} -> {:e}", k + 1, w[0], w[1]));
            }
        }
    }
    Ok(())
}

fn cone_power(v: &DMatrix<Complex64>, center: f64, half_width: f64) -> f64 {
    angle_grid(GRID_POINTS)
        .into_iter()
        .filter(|t| (t - center).abs() <= half_width)
        .map(|t| radiated_power(v, t))
        .sum()
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let s = default_scenario();
    let cfg = PddConfig::default();
    let sweeper = Sweeper::new(&s, cfg).expect("default scenario builds");
    let problem = &sweeper.full;
    let cap_dbm = watt_to_dbm(problem.power_cap * problem.subcarriers as f64);

    let mut runs = Vec::new();
    for gamma in std::iter::once(0.0).chain(SWEEP).chain([100.0]) {
        let start = Instant::now();
        match run_pdd_with(problem, gamma, &cfg) {
            Ok(sol) => runs.push(Run {
                gamma,
                sol,
                seconds: start.elapsed().as_secs_f64(),
            }),
            Err(e) => println!("       proposed design at gamma {gamma} failed: {e}"),
        }
    }
    for r in &runs {
        println!(
            "       proposed gamma {:>5}: sqrt CRB Bob {:.5} m, Eve {:.5} m, {:?}, {} outer, {:.1} s",
            r.gamma,
            r.sol.bob_crb.sqrt(),
            r.sol.eve_crb.sqrt(),
            r.sol.status,
            r.sol.trace.len(),
            r.seconds
        );
    }
    let run_at = |gamma: f64| runs.iter().find(|r| r.gamma == gamma);

    // 1. γ = 0 equivalence with the unconstrained optimum.
    let bench1 = crb_min_unconstrained(problem).expect("unconstrained optimum");
    match run_at(0.0) {
        Some(r) => {
            let d = rel_diff(r.sol.bob_crb, bench1.bob_crb);
            report.check(
                1,
                "zero-threshold equivalence",
                d < 1e-2 && r.seconds < 300.0,
                format!("relative difference {d:.2e}, {:.1} s", r.seconds),
            );
        }
        None => report.check(1, "zero-threshold equivalence", false, "no solution".into()),
    }

    // 2. Magnitude band over seeds and Benchmark II above Benchmark I.
    {
        let mut ok = true;
        let mut detail = Vec::new();
        for seed in 0..5 {
            let mut t = s.clone();
            t.seed = seed;
            let sw = Sweeper::new(&t, cfg).expect("seeded scenario builds");
            let proposed = run_pdd_with(&sw.full, 0.0, &cfg).map(|p| p.bob_crb.sqrt());
            let b1 = sw.solve(Method::Bench1, 0.0).map(|r| r.record.bob_sqrt_crb);
            let b2 = sw.solve(Method::Bench2, 0.0).map(|r| r.record.bob_sqrt_crb);
            match (proposed, b1, b2) {
                (Ok(p), Ok(b1), Ok(b2)) => {
                    ok &= (0.01..=0.10).contains(&p) && b2 > b1;
                    detail.push(format!("seed {seed}: {p:.4}/{b1:.4}/{b2:.4}"));
                }
                _ => {
                    ok = false;
                    detail.push(format!("seed {seed}: solve failed"));
                }
            }
        }
        report.check(
            2,
            "magnitude band (proposed/bench1/bench2 sqrt CRB, m)",
            ok,
            detail.join(", "),
        );
    }

    // 3. Benchmark I scaling law in the constrained regime.
    {
        let eve0 = problem.eve_crb(&bench1.x).expect("Eve CRB");
        let grid: Vec<f64> = (1..=10).map(f64::from).filter(|g| g * g > eve0).collect();
        let results: Vec<_> = grid
            .iter()
            .map(|g| benchmark_one(problem, g * g).expect("benchmark I"))
            .collect();
        let ratios: Vec<f64> = results.iter().zip(&grid).map(|(r, g)| r.bob_crb.sqrt() / g).collect();
        let spread = ratios.iter().map(|r| rel_diff(*r, ratios[0])).fold(0.0, f64::max);
        let p1 = benchmark_one(problem, 1.0).expect("benchmark I").power_dbm();
        let p10 = benchmark_one(problem, 100.0).expect("benchmark I").power_dbm();
        let drop = p10 - p1;
        report.check(
            3,
            "benchmark I scaling law",
            !grid.is_empty() && spread < 1e-6 && (drop + 20.0).abs() <= 0.01,
            format!(
                "ratio spread {spread:.1e} over {} points, power {p1:.3} -> {p10:.3} dBm ({drop:+.4} dB)",
                grid.len()
            ),
        );
    }

    // 4. Full power at every converged point.
    {
        let cap = problem.power_cap * problem.subcarriers as f64;
        let converged: Vec<&Run> = runs.iter().filter(|r| r.sol.converged()).collect();
        let worst = converged
            .iter()
            .map(|r| rel_diff(problem.total_power(&r.sol.v), cap))
            .fold(0.0, f64::max);
        report.check(
            4,
            "proposed design uses full power",
            !converged.is_empty() && worst < 1e-4,
            format!("{} converged points, worst relative gap {worst:.1e} to {cap_dbm:.2} dBm", converged.len()),
        );
    }

    // 5. Privacy feasibility, recomputed from V through the full FIM route.
    {
        let mut ok = true;
        let mut detail = Vec::new();
        for gamma in SWEEP {
            match run_at(gamma) {
                Some(r) => {
                    let eve = problem.eve_bundle.crb(&r.sol.v).expect("Eve CRB");
                    ok &= eve >= gamma * (1.0 - 1e-3);
                    detail.push(format!("{gamma}: {eve:.5}"));
                }
                None => {
                    ok = false;
                    detail.push(format!("{gamma}: missing"));
                }
            }
        }
        report.check(5, "privacy feasibility (gamma: Eve CRB, m^2)", ok, detail.join(", "));
    }

    // 6. Dominance.
    {
        let cb = sweeper.codebook_problem().expect("codebook problem");
        let slack = 10.0 * cfg.solver_tol;
        let mut ok = true;
        let mut detail = Vec::new();
        for gamma in SWEEP {
            let b1 = benchmark_one(problem, gamma).expect("benchmark I").bob_crb;
            let b2 = benchmark_two(cb, gamma).expect("benchmark II").bob_crb;
            match run_at(gamma) {
                Some(r) => {
                    let p = problem.bob_bundle.crb(&r.sol.v).expect("Bob CRB");
                    ok &= p <= b1 * (1.0 + slack) && b1 <= b2 * (1.0 + slack);
                    detail.push(format!("{gamma}: {:.4}/{:.4}/{:.4}", p.sqrt(), b1.sqrt(), b2.sqrt()));
                }
                None => ok = false,
            }
        }
        report.check(6, "dominance (proposed/bench1/bench2 sqrt CRB, m)", ok, detail.join(", "));
    }

    // 7. Schur-complement route against the full inverse.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let d = rng.random_range(3..=16);
            let fp = PositionFim {
                full: random_fim(&mut rng, d),
            };
            let a = crb_position(&fp).expect("Schur route");
            let b = crb_full_inverse(&fp).expect("inverse route");
            worst = worst.max(rel_diff(a, b));
        }
        report.check(7, "Schur route vs full inverse", worst < 1e-8, format!("worst relative difference {worst:.1e}"));
    }

    // 8. Derivative oracles.
    {
        let mut worst = 0.0_f64;
        let mut at = String::new();
        for seed in 0..3 {
            let scen = random_scenario(100 + seed, 2);
            for w in [channel_derivative_error(&scen), jacobian_error(&scen)] {
                if w.error > worst || w.error.is_nan() {
                    worst = w.error;
                    at = format!("seed {} {}", 100 + seed, w.at);
                }
            }
        }
        report.check(8, "derivatives vs finite differences", worst < 1e-6, format!("worst {worst:.1e} at {at}"));
    }

    // 9. PDD contract on every sweep run.
    {
        let mut problems = Vec::new();
        for gamma in SWEEP {
            match run_at(gamma) {
                Some(r) => {
                    if let Err(e) = pdd_contract(&r.sol, &cfg) {
                        problems.push(format!("gamma {gamma}: {e}"));
                    }
                }
                None => problems.push(format!("gamma {gamma}: missing")),
            }
        }
        let worst_h = SWEEP
            .iter()
            .filter_map(|g| run_at(*g))
            .map(|r| r.sol.h)
            .fold(0.0, f64::max);
        report.check(
            9,
            "PDD contract",
            problems.is_empty(),
            if problems.is_empty() {
                format!("largest final h {worst_h:.1e}")
            } else {
                problems.join("; ")
            },
        );
    }

    // 10. Beam extraction with L = 16.
    match run_at(1.0) {
        Some(r) => {
            let v = &r.sol.v;
            let b = extract_beamformers(v, 16, ExtractionMode::Decomposition, None).expect("extraction");
            let ww = &b.w * b.w.adjoint();
            let bob = rel_diff(problem.bob_bundle.crb(&ww).unwrap(), problem.bob_bundle.crb(v).unwrap());
            let eve = rel_diff(problem.eve_bundle.crb(&ww).unwrap(), problem.eve_bundle.crb(v).unwrap());
            report.check(
                10,
                "beam extraction",
                b.reconstruction_error < 1e-9 && bob < 1e-6 && eve < 1e-6,
                format!(
                    "reconstruction {:.1e}, Bob CRB {bob:.1e}, Eve CRB {eve:.1e}",
                    b.reconstruction_error
                ),
            );
        }
        None => report.check(10, "beam extraction", false, "no solution at gamma 1".into()),
    }

    // 11. Beampattern structure.
    match (run_at(0.0), run_at(100.0)) {
        (Some(r0), Some(r100)) => {
            let aods = geometry_to_params(&s, Link::Bob).expect("geometry").theta_a;
            let pattern = beampattern(&r0.sol.v, GRID_POINTS);
            let maxima = local_maxima(&pattern);
            let offsets: Vec<usize> = aods
                .iter()
                .map(|&t| {
                    let i = nearest_index(&pattern, t);
                    maxima.iter().map(|&m| m.abs_diff(i)).min().unwrap_or(usize::MAX)
                })
                .collect();
            let aligned = offsets.iter().all(|&o| o <= 2);
            let half = 5f64.to_radians();
            let before = cone_power(&r0.sol.v, aods[2], half);
            let after = cone_power(&r100.sol.v, aods[2], half);
            report.check(
                11,
                "beampattern structure",
                aligned && after < before,
                format!(
                    "grid offsets to Bob/p1/p2 maxima {offsets:?}, p2 cone power change {:+.2} dB",
                    10.0 * (after / before).log10()
                ),
            );
        }
        _ => report.check(11, "beampattern structure", false, "missing solution".into()),
    }

    if report.failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
