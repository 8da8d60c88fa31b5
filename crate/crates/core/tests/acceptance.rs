//! Acceptance run: one line per criterion, non-zero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use common::{dirichlet_tridiagonal, manufactured_u, sturm_smallest};
use navier_core::bootstrap::*;
use navier_core::branch::*;
use navier_core::estimates::*;
use navier_core::radial::*;
use navier_core::stability::*;
use navier_core::{NonlinearityFamily, RadialField, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_bootstrap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut counts = [0usize; 3];
    for _ in 0..200 {
        let dim = rng.gen_range(5..=32);
        let quarter = dim as f64 / 4.0;
        let alpha = rng.gen_range(0.2..1.4 * quarter);
        let beta = alpha * rng.gen_range(0.02..0.98);
        let q = rng.gen_range(1.0..=quarter);
        let params = ExponentParams::new(dim, q, alpha, beta).map_err(|e| e.to_string())?;
        let trace = run_bootstrap(params, 1_000_000).map_err(|e| e.to_string())?;
        match (trace.classification, expected_class(&params)) {
            (TraceClass::EscapesAboveNOver4 { .. }, TraceClass::EscapesAboveNOver4 { .. }) => {
                ensure(alpha > quarter || q > quarter, || format!("{params:?}: escape below N/4"))?;
                counts[2] += 1;
            }
            (got, want) if got == want => {
                let fp = trace.fixed_point.ok_or("missing fixed point")?;
                let nd = dim as f64;
                let closed = (alpha - beta) * nd / (nd - 4.0 * beta);
                ensure((fp - closed).abs() <= 1e-12 * closed, || format!("{params:?}: fixed point {fp} vs {closed}"))?;
                let last = *trace.sequence.last().unwrap();
                let at_fp = alpha * nd * fp / (nd * fp + beta * (nd - 4.0 * fp));
                let residual = trace.last_increment().max((at_fp - fp).abs());
                worst = worst.max(residual);
                ensure(residual <= 1e-12, || format!("{params:?}: residual {residual:e}"))?;
                ensure((last - fp).abs() <= 1e-9 * fp, || format!("{params:?}: stopped at {last}"))?;
                counts[usize::from(got != TraceClass::IncreasingToFixedPoint)] += 1;
            }
            (got, want) => return Err(format!("{params:?}: {got:?} vs {want:?}")),
        }
    }
    Ok(format!(
        "200 tuples ({} increasing, {} decreasing, {} escaping), max residual {worst:.1e}",
        counts[0], counts[1], counts[2]
    ))
}

fn c2_predictor() -> Outcome {
    let ps = [1.1, 1.5, 2.0, 3.0, 4.0, 10.0];
    // Largest N ∈ 2..=20 predicted regular, per p.
    let power_max = [20, 20, 15, 11, 10, 8];
    let mems_max: [Option<usize>; 6] = [Some(4), Some(4), Some(5), None, Some(6), Some(7)];
    let mut checked = 0;
    for dim in 2..=20usize {
        let regular = |v: RegularityVerdict| v.verdict == Verdict::Regular;
        let got = regular(predict_regularity(&NonlinearityFamily::Exponential, dim));
        ensure(got == (dim <= 8), || format!("exp N={dim}"))?;
        for (k, &p) in ps.iter().enumerate() {
            let got = regular(predict_regularity(&NonlinearityFamily::Power { p }, dim));
            ensure(got == (dim <= power_max[k]), || format!("power p={p} N={dim}"))?;
            let got = regular(predict_regularity(&NonlinearityFamily::Mems { p }, dim));
            ensure(got == mems_max[k].is_some_and(|m| dim <= m), || format!("mems p={p} N={dim}"))?;
            checked += 2;
        }
        let generic = |liminf_positive, gamma_limsup| {
            regular(predict_regularity_generic(GrowthProfile { liminf_positive, gamma_limsup }, dim))
        };
        ensure(generic(false, None) == (dim <= 5), || format!("generic N={dim}"))?;
        ensure(generic(true, None) == (dim <= 7), || format!("liminf N={dim}"))?;
        for gamma in [0.3, 0.5, 1.0, 1.5] {
            let want = dim <= 5 || (dim as f64) < 8.0 / gamma;
            ensure(generic(false, Some(gamma)) == want, || format!("gamma={gamma} N={dim}"))?;
            checked += 1;
        }
        checked += 3;
    }
    Ok(format!("{checked} table entries match"))
}

fn c3_manufactured() -> Outcome {
    let mut ratios = Vec::new();
    for dim in [2usize, 3, 5, 8] {
        let (_, _, rhs) = manufactured_profile(dim);
        let errs: Vec<f64> = [512usize, 1024, 2048]
            .iter()
            .map(|&n| {
                let g = RadialGrid::ball(dim, n).unwrap();
                let (u, _) = solve_navier_biharmonic(&g, &vec![rhs; g.unknown_count()]).unwrap();
                (0..g.len()).map(|i| (u.values[i] - manufactured_u(dim, g.node(i))).abs()).fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            ensure((3.6..=4.4).contains(&r), || format!("N={dim}: errors {errs:?}"))?;
            ratios.push(r);
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    Ok(format!("error ratios in [{lo:.3}, {hi:.3}] for N ∈ {{2,3,5,8}}"))
}

fn trivial_mu1(dim: usize, n: usize) -> Result<f64, String> {
    let g = RadialGrid::ball(dim, n).unwrap();
    smallest_stability_eigenvalue(&NonlinearityFamily::Exponential, &BranchPoint::trivial(&g))
        .map(|r| r.mu1)
        .map_err(|e| e.to_string())
}

fn c4_spectral() -> Outcome {
    let mut worst: f64 = 0.0;
    for dim in [2usize, 3, 5] {
        let n = 1024;
        let (a, b) = dirichlet_tridiagonal(dim, n);
        let oracle = sturm_smallest(&a, &b).powi(2);
        let mu = trivial_mu1(dim, n)?;
        let rel = (mu / oracle - 1.0).abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-8, || format!("N={dim}: {mu} vs {oracle}"))?;
    }
    let (coarse, fine) = (trivial_mu1(3, 512)?, trivial_mu1(3, 1024)?);
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let pi4 = std::f64::consts::PI.powi(4);
    let rel = (extrapolated / pi4 - 1.0).abs();
    ensure(rel <= 1e-3, || format!("extrapolated {extrapolated} vs π⁴"))?;
    Ok(format!("max relative deviation {worst:.1e}; N=3 extrapolation off π⁴ by {rel:.1e}"))
}

struct Case {
    label: &'static str,
    family: NonlinearityFamily,
    dim: usize,
    m_max: f64,
}

const FOLD_CASES: [Case; 2] = [
    Case { label: "exp N=3", family: NonlinearityFamily::Exponential, dim: 3, m_max: 12.0 },
    Case { label: "mems p=2 N=4", family: NonlinearityFamily::Mems { p: 2.0 }, dim: 4, m_max: 0.99 },
];

const EXTRA_CASES: [Case; 2] = [
    Case { label: "power p=2 N=6", family: NonlinearityFamily::Power { p: 2.0 }, dim: 6, m_max: 30.0 },
    Case { label: "exp N=8", family: NonlinearityFamily::Exponential, dim: 8, m_max: 12.0 },
];

fn run_branch(case: &Case, n: usize) -> Result<Branch, String> {
    let g = RadialGrid::ball(case.dim, n).unwrap();
    let config = SolverConfig { stop_after_fold: Some(3), ..SolverConfig::default() };
    continue_branch(&case.family, &g, case.m_max, &config).map_err(|e| format!("{}: {e}", case.label))
}

fn c5_folds(branches: &mut Vec<(&'static Case, Branch)>) -> Outcome {
    let mut parts = Vec::new();
    for case in &FOLD_CASES {
        let coarse = run_branch(case, 1024)?;
        let fine = run_branch(case, 2048)?;
        ensure(coarse.fold_detected && fine.fold_detected, || format!("{}: no fold", case.label))?;
        let (a, b) = (coarse.lambda_star_estimate, fine.lambda_star_estimate);
        let rel = (a - b).abs() / b;
        ensure(rel <= 5e-3, || format!("{}: λ* {a} vs {b}", case.label))?;
        parts.push(format!("{} λ*={b:.6} (Δ {rel:.1e})", case.label));
        branches.push((case, coarse));
        branches.push((case, fine));
    }
    Ok(parts.join(", "))
}

fn c6_estimates(branches: &mut Vec<(&'static Case, Branch)>) -> Outcome {
    for case in &EXTRA_CASES {
        branches.push((case, run_branch(case, 1024)?));
    }
    let mut points = 0;
    let mut worst_trend = f64::NEG_INFINITY;
    for (case, b) in branches.iter() {
        let fam = &case.family;
        for p in b.pre_fold() {
            for r in evaluate_point(fam, p).map_err(|e| e.to_string())? {
                ensure(r.satisfied, || format!("{} m={}: {} margin {:e}", case.label, p.m, r.name.tag(), r.margin))?;
            }
            points += 1;
        }
        let sups = [
            BranchSupremum::new(IntegralKind::Crucial, b.pre_fold().iter().map(|p| crucial_integral(fam, p)).collect()),
            BranchSupremum::new(IntegralKind::FSquared, b.pre_fold().iter().map(|p| f_squared_integral(fam, p)).collect()),
            BranchSupremum::new(IntegralKind::FPrimePower, b.pre_fold().iter().map(|p| fprime_power_integral(fam, p)).collect()),
        ];
        for s in sups {
            ensure(s.sup.is_finite(), || format!("{}: {} unbounded", case.label, s.name.tag()))?;
            ensure(s.trend < 0.05, || format!("{}: {} trend {}", case.label, s.name.tag(), s.trend))?;
            worst_trend = worst_trend.max(s.trend);
        }
    }
    Ok(format!("{points} pre-fold points on {} branches, max trend {worst_trend:.4}", branches.len()))
}

fn c7_stability(branches: &[(&'static Case, Branch)]) -> Outcome {
    let mut parts = Vec::new();
    for (case, b) in branches.iter().filter(|(c, _)| FOLD_CASES.iter().any(|f| f.label == c.label)) {
        let grid = &b.points[0].grid;
        let scale = smallest_stability_eigenvalue(&case.family, &BranchPoint::trivial(grid)).map_err(|e| e.to_string())?.mu1.abs();
        let mu = |p: &BranchPoint| smallest_stability_eigenvalue(&case.family, p).map(|r| r.mu1).map_err(|e| e.to_string());
        let mut lowest = f64::INFINITY;
        for p in b.pre_fold() {
            let m = mu(p)?;
            lowest = lowest.min(m);
            ensure(m >= -1e-6 * scale, || format!("{} n={}: μ₁={m} at m={}", case.label, grid.n, p.m))?;
        }
        let k = b.fold_index.ok_or("no fold index")?;
        let after: Vec<f64> = b.points.iter().skip(k + 1).take(2).map(mu).collect::<Result<_, _>>()?;
        ensure(after.iter().any(|&m| m < 0.0), || format!("{} n={}: μ₁ after fold {after:?}", case.label, grid.n))?;
        parts.push(format!("{} n={}: min pre-fold μ₁/μ₁(0) {:.1e}", case.label, grid.n, lowest / scale));
    }
    Ok(parts.join(", "))
}

fn c8_exponential_identity(branches: &[(&'static Case, Branch)]) -> Outcome {
    let (_, b) = branches.iter().find(|(c, _)| c.label == "exp N=8").ok_or("missing branch")?;
    let fam = NonlinearityFamily::Exponential;
    let mut worst: f64 = 0.0;
    for p in &b.points {
        let a = integral_of(p, |t| fam.fp(t).powi(2));
        let c = f_squared_integral(&fam, p);
        worst = worst.max((a - c).abs() / c);
    }
    ensure(worst <= 1e-8, || format!("relative gap {worst:e}"))?;
    Ok(format!("{} points, max relative gap {worst:.1e}", b.points.len()))
}

fn double_laplacian_error(s: f64, dim: usize, n: usize) -> f64 {
    let grid = RadialGrid::ball(dim, n).unwrap();
    let lap = laplacian_matrix(&grid);
    let mut values = lap.apply(&RadialField::from_fn(&grid, |r| r.powf(s)));
    values.push(radial_power_laplacian(s, dim));
    let second = lap.apply(&RadialField { values });
    let c = radial_power_bilaplacian(s, dim);
    (0..second.len())
        .filter(|&i| (0.25..=0.75).contains(&grid.node(i)))
        .map(|i| (second[i] - c * grid.node(i).powf(s - 4.0)).abs())
        .fold(0.0, f64::max)
}

fn c9_symbolic() -> Outcome {
    let (mut convergent, mut exact) = (0, 0);
    for dim in [2usize, 3, 5, 10] {
        for s in [2.0, 3.0, 4.0, 6.0] {
            let ns = [64usize, 128, 256];
            let errs = ns.map(|n| double_laplacian_error(s, dim, n));
            // Rounding in a fourth difference grows like ε n⁴.
            let scale = radial_power_bilaplacian(s, dim).abs().max(1.0);
            let floor = ns.map(|n| 100.0 * f64::EPSILON * (n as f64).powi(4) * scale);
            if errs.iter().zip(&floor).all(|(e, f)| e <= f) {
                exact += 1;
                continue;
            }
            for k in 0..2 {
                let ok = errs[k] / errs[k + 1] >= 3.5 || errs[k + 1] <= floor[k + 1];
                ensure(ok, || format!("s={s} N={dim}: errors {errs:?}"))?;
            }
            convergent += 1;
        }
    }
    ensure(log_bilaplacian(-4.0, 10) == 384.0, || format!("log coefficient {}", log_bilaplacian(-4.0, 10)))?;
    Ok(format!("{convergent} cases converge at O(h²), {exact} reproduced to rounding; log coefficient 384"))
}

fn report(k: usize, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let ok = outcome.is_ok() && elapsed <= budget;
    let detail = match outcome {
        Ok(s) => s,
        Err(s) => s,
    };
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {k}: {status} [{:.2}s / {}s] {detail}", elapsed.as_secs_f64(), budget.as_secs());
    ok
}

fn main() {
    let mut branches = Vec::new();
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= report(1, secs(1), c1_bootstrap);
    ok &= report(2, secs(1), c2_predictor);
    ok &= report(3, secs(5), c3_manufactured);
    ok &= report(4, secs(10), c4_spectral);
    ok &= report(5, secs(120), || c5_folds(&mut branches));
    ok &= report(6, secs(300), || c6_estimates(&mut branches));
    ok &= report(7, secs(120), || c7_stability(&branches));
    ok &= report(8, secs(300), || c8_exponential_identity(&branches));
    ok &= report(9, secs(5), c9_symbolic);
    if !ok {
        std::process::exit(1);
    }
}
