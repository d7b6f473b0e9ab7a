//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p lplimit-validation --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::Instant;

use common::{dist, norm, ot2x2, ot3x3, random_lp, sphere_point};
use lplimit::confidence::{confidence_set, map_region};
use lplimit::experiments::{build_min_cost_flow, build_ot_2x2, mcf_vertex, run_coverage, run_limit_comparison, MCF_SOLUTIONS};
use lplimit::geometry::{grid_hausdorff, hausdorff, min_norm_point, SphereGrid};
use lplimit::limits::{distance_statistic, hadamard_quotient_check, sample_unique_limit, GSampler};
use lplimit::rng::{stream, DEFAULT_SEED};
use lplimit::stability::{basic_solution_ratio, check_basis_inclusion, check_feasible_inclusion, find_slater_point, stability_report};
use lplimit::{optimal_vertices, solve, Lp, Poly, Polytope};
use rand::Rng;

type Outcome = (bool, String);

fn coverage_table() -> Outcome {
    let mut config = build_ot_2x2().unwrap();
    config.n_values = vec![1, 10, 100, 10_000];
    config.replicates = 1000;
    let report = run_coverage(&config).unwrap();
    let bands = [(1, 0.480, 0.048), (10, 0.981, 0.013), (100, 0.922, 0.026), (10_000, 0.950, 0.021)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, target, half) in bands {
        let row = report.row(n).unwrap();
        let pass = (row.coverage - target).abs() <= half + 1e-12;
        ok &= pass;
        parts.push(format!("n={n}: {:.3} vs {target}±{half} {}", row.coverage, if pass { "ok" } else { "out" }));
    }
    (ok, parts.join("; "))
}

fn reported_run() -> Outcome {
    let config = build_ot_2x2().unwrap();
    let lp = config.lp.with_rhs(vec![0.55, 0.45, 0.5]).unwrap();
    let r = solve(&lp).unwrap();
    let mapped = map_region(&lp, &r.basis, &config.region).unwrap();
    let cs = confidence_set(&r, 20f64.sqrt(), mapped).unwrap();
    let iv = cs.intervals();
    let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() <= 1e-3 && (a.1 - b.1).abs() <= 1e-3;
    let ok = close(iv[1], (-0.169, 0.269))
        && close(iv[3], (0.231, 0.669))
        && iv[0].0 == iv[0].1
        && iv[2].0 == iv[2].1
        && cs.contains(&[0.5, 0.0, 0.0, 0.5]);
    (ok, format!("x̂={:?} intervals={:?}", r.x_hat, iv))
}

fn mcf_two_optima() -> Outcome {
    let mut config = build_min_cost_flow().unwrap();
    let v: Vec<Vec<f64>> = MCF_SOLUTIONS.iter().map(mcf_vertex).collect();
    let (f1, f2) = (config.lp.objective(&v[0]), config.lp.objective(&v[1]));
    let opt = optimal_vertices(&config.lp).unwrap();
    let equal = (f1 - f2).abs() <= config.lp.obj_tol(f1) && (f1 - opt.objective).abs() <= config.lp.obj_tol(f1);
    config.n_values = vec![500];
    config.replicates = 1000;
    let report = run_coverage(&config).unwrap();
    let row = report.row(500).unwrap();
    // Map polytope vertex order back to the listed solutions.
    let listed: Vec<usize> = opt
        .polytope
        .vertices()
        .iter()
        .map(|w| v.iter().position(|u| dist(u, w) < 1e-9).unwrap())
        .collect();
    let mut hits = [0usize; 2];
    for l in &report.log {
        for &t in &l.targets {
            hits[listed[t]] += 1;
        }
    }
    let share = hits.map(|h| h as f64 / config.replicates as f64);
    let ok = equal && row.coverage >= 0.92 && share.iter().all(|&s| s >= 0.05);
    (ok, format!("objectives {f1} and {f2}; coverage {:.3}; covered solution 1 in {:.3}, solution 2 in {:.3}", row.coverage, share[0], share[1]))
}

fn oracle_equivalence() -> Outcome {
    let mut failures = Vec::new();
    for i in 0..500u64 {
        let mut rng = stream(DEFAULT_SEED, &[1, i]);
        let lp = random_lp(&mut rng, 5, 10);
        let r = solve(&lp).unwrap();
        let opt = optimal_vertices(&lp).unwrap();
        let obj_ok = (r.objective - opt.objective).abs() <= 2.0 * lp.obj_tol(opt.objective);
        if !obj_ok || !opt.contains_basis(&r.basis) {
            failures.push(i);
        }
    }
    (failures.is_empty(), format!("{}/500 instances agree; failing seeds {:?}", 500 - failures.len(), failures))
}

fn stability_properties() -> Outcome {
    let config = build_min_cost_flow().unwrap();
    let instances: Vec<(&str, Lp)> = vec![("ot2x2", ot2x2([0.5; 3])), ("ot3x3", ot3x3()), ("mcf", config.lp)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (inst, (name, lp)) in instances.iter().enumerate() {
        let x0 = find_slater_point(lp).unwrap();
        let rep = stability_report(lp, &x0).unwrap();
        let f0 = optimal_vertices(lp).unwrap().objective;
        let mut bad = 0;
        for t in 0..200u64 {
            let mut rng = stream(DEFAULT_SEED, &[2, inst as u64, t]);
            let radius = rep.delta_star * rng.random_range(0.0..0.999);
            let step = sphere_point(&mut rng, lp.k(), radius);
            let b2: Vec<f64> = lp.b().iter().zip(&step).map(|(a, d)| a + d).collect();
            let moved = lp.with_rhs(b2.clone()).unwrap();
            let f1 = optimal_vertices(&moved).unwrap().objective;
            let d = norm(&step);
            let holds = check_feasible_inclusion(lp, &b2).unwrap()
                && check_basis_inclusion(lp, &b2).unwrap()
                && (d == 0.0 || basic_solution_ratio(lp, &b2).unwrap() <= rep.c1 * (1.0 + 1e-9))
                && (f1 - f0).abs() <= rep.c2 * d + lp.obj_tol(f0);
            bad += usize::from(!holds);
        }
        ok &= bad == 0;
        parts.push(format!("{name}: δ*={:.3e} C1={:.3} C2={:.3} violations {bad}/200", rep.delta_star, rep.c1, rep.c2));
    }
    (ok, parts.join("; "))
}

fn hadamard_exactness() -> Outcome {
    let mcf = build_min_cost_flow().unwrap().lp;
    let mut rng = stream(DEFAULT_SEED, &[3]);
    let xi_mcf = sphere_point(&mut rng, mcf.k(), 1.0);
    let xi_ot = sphere_point(&mut rng, 3, 1.0);
    let cases: Vec<(&str, Lp, Vec<f64>, usize)> = vec![
        ("ot2x2 ξ=(1,−1,0)", ot2x2([0.5; 3]), vec![1.0, -1.0, 0.0], 1024),
        ("ot2x2 random ξ", ot2x2([0.5; 3]), xi_ot, 1024),
        ("mcf random ξ", mcf, xi_mcf, 512),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lp, xi, res) in cases {
        let rep = stability_report(&lp, &find_slater_point(&lp).unwrap()).unwrap();
        let t_max = rep.delta_star / norm(&xi);
        let steps: Vec<f64> = [0.5, 1e-2, 1e-4].iter().map(|s| s * t_max).collect();
        let grid = SphereGrid::new(lp.m(), res).unwrap();
        let r = hadamard_quotient_check(&lp, &xi, &steps, &grid).unwrap();
        ok &= r.max_error <= 1e-6;
        let errs: Vec<String> = r.errors.iter().map(|(t, e)| format!("t={t:.1e}:{e:.1e}")).collect();
        parts.push(format!("{name}: [{}] excluded {:.3}", errs.join(" "), r.excluded_fraction));
    }
    (ok, parts.join("; "))
}

fn distributional_limit() -> Outcome {
    let config = build_ot_2x2().unwrap();
    let cmp = run_limit_comparison(&config, 10_000, 2000, 256).unwrap();
    let sampler = GSampler::multinomial_clt(vec![0.5, 0.5], 3, DEFAULT_SEED ^ 0xD15).unwrap();
    let samples = sample_unique_limit(&config.lp, &[0.5, 0.0, 0.0, 0.5], &sampler, 100_000).unwrap();
    let stats: Vec<f64> = samples.iter().map(|s| distance_statistic(s).unwrap()).collect();
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let expect = 2f64.sqrt() * 0.5 * (2.0 / std::f64::consts::PI).sqrt();
    let ok = cmp.ks_distance <= 0.05 && (mean - expect).abs() <= 0.01;
    (ok, format!("KS {:.4} (≤ 0.05); limit mean {mean:.4} vs {expect:.4}±0.01", cmp.ks_distance))
}

fn random_polytope(rng: &mut lplimit::rng::StreamRng, d: usize, n: usize) -> Poly {
    Polytope::new((0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(), 1e-12).unwrap()
}

fn geometry() -> Outcome {
    let mut worst_gap = 0.0f64;
    for i in 0..1000u64 {
        let mut rng = stream(DEFAULT_SEED, &[4, i]);
        let d = rng.random_range(2..=6);
        let n = rng.random_range(1..=30);
        let p = random_polytope(&mut rng, d, n);
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let r = min_norm_point(&p, &z, 1e-9).unwrap();
        let y: Vec<f64> = r.point.iter().zip(&z).map(|(a, b)| a - b).collect();
        let gap = norm(&y).powi(2)
            - p.vertices()
                .iter()
                .map(|v| y.iter().zip(v.iter().zip(&z)).map(|(a, (b, c))| a * (b - c)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
        worst_gap = worst_gap.max(gap);
    }
    let resolutions = [256, 512, 1024, 2048, 4096];
    let grids: Vec<SphereGrid<f64>> = resolutions.iter().map(|&r| SphereGrid::new(4, r).unwrap()).collect();
    let mut monotone = true;
    let mut mean_err = [0.0; 5];
    for i in 0..20u64 {
        let mut rng = stream(DEFAULT_SEED, &[5, i]);
        let p1 = random_polytope(&mut rng, 4, 8);
        let p2 = random_polytope(&mut rng, 4, 8);
        let exact = hausdorff(&p1, &p2, 1e-12).unwrap();
        let errs: Vec<f64> = grids.iter().map(|g| exact - grid_hausdorff(&p1, &p2, g).unwrap()).collect();
        monotone &= errs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        for (m, e) in mean_err.iter_mut().zip(&errs) {
            *m += e / 20.0;
        }
    }
    let decreasing = mean_err[4] < mean_err[0];
    let ok = worst_gap <= 1e-9 && monotone && decreasing;
    let errs: Vec<String> = resolutions.iter().zip(&mean_err).map(|(r, e)| format!("{r}:{e:.2e}")).collect();
    (ok, format!("worst Wolfe gap {worst_gap:.2e}; mean isometry error [{}]; per-pair monotone {monotone}", errs.join(" ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("coverage table", coverage_table),
        ("reported n=20 run", reported_run),
        ("min-cost-flow two optima", mcf_two_optima),
        ("oracle equivalence", oracle_equivalence),
        ("stability properties", stability_properties),
        ("Hadamard quotient exactness", hadamard_exactness),
        ("distributional limit", distributional_limit),
        ("geometry", geometry),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (ok, detail) = run();
        failed += usize::from(!ok);
        println!("{} {name} ({:.1}s): {detail}", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("{} of 8 acceptance criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
