//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature on `[a, b]` to relative accuracy `rel_tol`
/// (measured against a coarse first estimate of the integral).
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let coarse: f64 = {
        let k = 256;
        let h = (b - a) / k as f64;
        (0..k).map(|i| {
            let x = a + i as f64 * h;
            simpson(f(x), f(x + 0.5 * h), f(x + h), x, x + h)
        }).sum()
    };
    let tol = rel_tol * coarse.abs().max(1e-300);
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 30)
}

/// Symmetric tridiagonal form of the radial Dirichlet operator `−Δ` on the
/// unit ball with `n` interior nodes plus the center, built directly from
/// the flux-form stencil: diagonal `a`, off-diagonal `b`.
pub fn dirichlet_tridiagonal(dim: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / (n as f64 + 1.0);
    let nd = dim as f64;
    let face = |i: usize| ((i as f64 + 0.5) * h).powf(nd - 1.0);
    let vol = |i: usize| {
        let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
        let hi = (i as f64 + 0.5) * h;
        (hi.powf(nd) - lo.powf(nd)) / nd
    };
    let m = n + 1;
    let a = (0..m)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { face(i - 1) };
            (left + face(i)) / (h * vol(i))
        })
        .collect();
    let b = (0..m - 1).map(|i| -face(i) / (h * (vol(i) * vol(i + 1)).sqrt())).collect();
    (a, b)
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm-sequence
/// bisection.
pub fn sturm_smallest(a: &[f64], b: &[f64]) -> f64 {
    let count = |x: f64| {
        let mut neg = 0;
        let mut d = 1.0;
        for i in 0..a.len() {
            let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
            d = a[i] - x - if i == 0 { 0.0 } else { off / d };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                neg += 1;
            }
        }
        neg
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..a.len() {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < a.len() { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `J₀(x)` from its power series.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// First positive zero of `J₀` by bisection on `[2, 3]`.
pub fn bessel_j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First Dirichlet eigenvalue of `−Δ` on the unit ball for `N = 2, 3`.
pub fn exact_first_dirichlet(dim: usize) -> f64 {
    match dim {
        2 => bessel_j0_first_zero().powi(2),
        3 => PI * PI,
        _ => panic!("no closed form for N = {dim}"),
    }
}

/// `u_ms(r) = (1−r²)² + (4/N)(1−r²)`.
pub fn manufactured_u(dim: usize, r: f64) -> f64 {
    let s = 1.0 - r * r;
    s * s + 4.0 / dim as f64 * s
}

/// Small-amplitude slope `λ/m → 1/w(0)` with `Δ²w = 1` under Navier data:
/// `w = u_ms / (8N(N+2))`.
pub fn small_amplitude_slope(dim: usize) -> f64 {
    let nd = dim as f64;
    8.0 * nd * (nd + 2.0) / (1.0 + 4.0 / nd)
}

/// Least-squares slope of `y` against its index.
pub fn index_slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        sxy += (i as f64 - mx) * (v - my);
        sxx += (i as f64 - mx).powi(2);
    }
    sxy / sxx
}
