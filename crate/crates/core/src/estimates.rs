//! Numerical certification of the a-priori inequalities satisfied by
//! semi-stable solutions, evaluated on converged branch points.
//!
//! Pointwise and integral checks return an [`EstimateReport`] with
//! `margin = rhs − lhs` (or the pointwise minimum) and
//! `satisfied ⇔ margin ≥ −tol`, where `tol = 1e-6 · max(|lhs|, |rhs|, 1)`.
//! Uniform bounds along a branch are reported as a [`BranchSupremum`]: the
//! supremum over the pre-fold samples together with the trend of the last
//! quarter.
//!
//! Integrals use [`integrate_radial`] (composite Simpson with the `r^{N−1}`
//! weight). Points past the fold are evaluated like any other, but the
//! inequalities are only expected to hold before it.

use alloc::vec::Vec;

use libm::{pow, sqrt};

use crate::branch::{Branch, BranchPoint};
use crate::nonlinearity::{primitive_growth_bound, NonlinearityFamily, Regime};
use crate::radial::{integrate_nodes, radial_gradient};
use crate::Error;

/// Relative tolerance `tol_est / max(|lhs|, |rhs|, 1)`.
pub const ESTIMATE_REL_TOL: f64 = 1e-6;

/// MEMS reports are flagged when `max u > 1 − LOW_CONFIDENCE_GAP`
/// (ten times the default touchdown guard).
pub const LOW_CONFIDENCE_GAP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EstimateKind {
    /// `−Δu ≥ √λ g(u)` pointwise.
    PointwiseBound,
    /// `∫ f''(u) (−Δu) |∇u|² ≤ λ ∫ f(u)`.
    Energy,
    /// `∫ g(u) H(u) ≤ ∫ f(u)`.
    GH,
    /// `∫ f'(u) u² ≤ ∫ f(u) u`.
    BasicEnergy,
    /// `f'(u) ≤ C₀ f^γ(u)` and `√(∫₀ᵘ f) ≥ ((f^{2−γ}(u) − 1)/((2−γ) C₀))^{1/2}`
    /// at every node.
    GrowthChain,
}

impl EstimateKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EstimateKind::PointwiseBound => "pointwise-bound",
            EstimateKind::Energy => "energy",
            EstimateKind::GH => "g-h",
            EstimateKind::BasicEnergy => "basic-energy",
            EstimateKind::GrowthChain => "growth-chain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimateReport {
    pub name: EstimateKind,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub satisfied: bool,
    pub m: f64,
    pub lambda: f64,
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub dim: usize,
    pub n: usize,
    /// MEMS point too close to touchdown for reliable quadrature.
    pub low_confidence: bool,
    /// `false` for points past the fold, where nothing is asserted.
    pub pre_fold: bool,
}

fn report(
    name: EstimateKind,
    family: &NonlinearityFamily,
    point: &BranchPoint,
    lhs: f64,
    rhs: f64,
    margin: f64,
    scale: f64,
) -> EstimateReport {
    let tol = ESTIMATE_REL_TOL * scale.max(1.0);
    EstimateReport {
        name,
        lhs,
        rhs,
        margin,
        tol,
        satisfied: margin >= -tol,
        m: point.m,
        lambda: point.lambda,
        dim: point.grid.dim,
        n: point.grid.n,
        low_confidence: is_mems(family) && point.max_u() > 1.0 - LOW_CONFIDENCE_GAP,
        pre_fold: true,
    }
}

fn integral_report(
    name: EstimateKind,
    family: &NonlinearityFamily,
    point: &BranchPoint,
    lhs: f64,
    rhs: f64,
) -> EstimateReport {
    report(name, family, point, lhs, rhs, rhs - lhs, lhs.abs().max(rhs.abs()))
}

fn is_mems(family: &NonlinearityFamily) -> bool {
    matches!(family, NonlinearityFamily::Mems { .. })
}

/// Samples of `u` clamped at zero; discrete solutions may carry rounding
/// noise of either sign at the boundary.
fn clamped_u(point: &BranchPoint) -> Vec<f64> {
    point.u.values.iter().map(|&x| x.max(0.0)).collect()
}

fn g_values(family: &NonlinearityFamily, u: &[f64]) -> Result<Vec<f64>, Error> {
    u.iter().map(|&t| family.g_aux(t)).collect()
}

/// `−Δu ≥ √λ g(u)`: `margin = min_i (v_i − √λ g(u_i))`, with `lhs`/`rhs` the
/// two sides at the minimizing node and the tolerance scaled by
/// `max(‖v‖∞, √λ ‖g(u)‖∞)`.
pub fn check_pointwise_bound(family: &NonlinearityFamily, point: &BranchPoint) -> Result<EstimateReport, Error> {
    let g = g_values(family, &clamped_u(point))?;
    let sl = sqrt(point.lambda.max(0.0));
    let (mut margin, mut lhs, mut rhs) = (f64::INFINITY, 0.0, 0.0);
    let mut scale = 0.0f64;
    for (i, gi) in g.iter().enumerate() {
        let v = point.v.values[i];
        let d = v - sl * gi;
        scale = scale.max(v.abs()).max(sl * gi);
        if d < margin {
            (margin, lhs, rhs) = (d, sl * gi, v);
        }
    }
    Ok(report(EstimateKind::PointwiseBound, family, point, lhs, rhs, margin, scale))
}

/// `∫ f''(u) v (u')² ≤ λ ∫ f(u)`.
pub fn check_energy_estimate(family: &NonlinearityFamily, point: &BranchPoint) -> Result<EstimateReport, Error> {
    let grid = &point.grid;
    let u = clamped_u(point);
    let du = radial_gradient(&point.u, grid);
    let lhs = integrate_nodes(grid, |i| family.fpp(u[i]) * point.v.values[i] * du.values[i] * du.values[i]);
    let rhs = point.lambda * integrate_nodes(grid, |i| family.f(u[i]));
    Ok(integral_report(EstimateKind::Energy, family, point, lhs, rhs))
}

/// `∫ g(u) H(u) ≤ ∫ f(u)`.
pub fn check_gh_estimate(family: &NonlinearityFamily, point: &BranchPoint) -> Result<EstimateReport, Error> {
    let grid = &point.grid;
    let u = clamped_u(point);
    let g = g_values(family, &u)?;
    let h = family.h_aux_many(&u)?;
    let lhs = integrate_nodes(grid, |i| g[i] * h[i]);
    let rhs = integrate_nodes(grid, |i| family.f(u[i]));
    Ok(integral_report(EstimateKind::GH, family, point, lhs, rhs))
}

/// `∫ f'(u) u² ≤ ∫ f(u) u`, the stability inequality tested with `ψ = u`.
pub fn check_basic_energy(family: &NonlinearityFamily, point: &BranchPoint) -> Result<EstimateReport, Error> {
    let grid = &point.grid;
    let u = clamped_u(point);
    let lhs = integrate_nodes(grid, |i| family.fp(u[i]) * u[i] * u[i]);
    let rhs = integrate_nodes(grid, |i| family.f(u[i]) * u[i]);
    Ok(integral_report(EstimateKind::BasicEnergy, family, point, lhs, rhs))
}

/// Scalar growth chain at every node with `C₀` computed at `max u`:
/// `f' ≤ C₀ f^γ` and the primitive lower bound. Requires `0 < γ < 2`.
pub fn check_growth_chain(family: &NonlinearityFamily, point: &BranchPoint) -> Result<EstimateReport, Error> {
    let gamma = family.gamma_limits().gamma_limsup;
    let u = clamped_u(point);
    let top = u.iter().copied().fold(0.0, f64::max);
    let c0 = family.growth_constant(top)?;
    let (mut margin, mut lhs, mut rhs) = (f64::INFINITY, 0.0, 0.0);
    for &t in &u {
        let d = family.eval(t)?;
        let bound = c0 * pow(d.f, gamma);
        let (plhs, prhs) = primitive_growth_bound(family, t, c0)?;
        for (small, big) in [(d.fp, bound), (prhs, plhs)] {
            // Each inequality is measured relative to its own size.
            let rel = (big - small) / big.abs().max(small.abs()).max(1.0);
            if rel < margin {
                (margin, lhs, rhs) = (rel, small, big);
            }
        }
    }
    Ok(report(EstimateKind::GrowthChain, family, point, lhs, rhs, margin, 1.0))
}

/// The four inequalities of [`EstimateKind`] except the growth chain.
pub fn evaluate_point(family: &NonlinearityFamily, point: &BranchPoint) -> Result<Vec<EstimateReport>, Error> {
    Ok(alloc::vec![
        check_pointwise_bound(family, point)?,
        check_energy_estimate(family, point)?,
        check_gh_estimate(family, point)?,
        check_basic_energy(family, point)?,
    ])
}

/// [`evaluate_point`] at every sample, with post-fold reports marked.
pub fn evaluate_branch(family: &NonlinearityFamily, branch: &Branch) -> Result<Vec<EstimateReport>, Error> {
    let pre = branch.pre_fold_len();
    let mut out = Vec::with_capacity(4 * branch.points.len());
    for (k, point) in branch.points.iter().enumerate() {
        for mut r in evaluate_point(family, point)? {
            r.pre_fold = k < pre;
            out.push(r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum IntegralKind {
    /// `∫ f(u)^{3/2} / (√u + 1)`.
    Crucial,
    /// `∫ f(u)`.
    FIntegral,
    /// `∫ f(u)²`.
    FSquared,
    /// `∫ f'(u)^{2/γ}`.
    #[cfg_attr(feature = "serde", serde(rename = "fprime-power"))]
    FPrimePower,
}

impl IntegralKind {
    pub fn tag(&self) -> &'static str {
        match self {
            IntegralKind::Crucial => "crucial",
            IntegralKind::FIntegral => "f-integral",
            IntegralKind::FSquared => "f-squared",
            IntegralKind::FPrimePower => "fprime-power",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BranchSupremum {
    pub name: IntegralKind,
    pub values: Vec<f64>,
    pub sup: f64,
    /// Least-squares slope of `value / sup` per continuation step over the
    /// last quarter of the samples (at least two).
    pub trend: f64,
}

impl BranchSupremum {
    pub fn new(name: IntegralKind, values: Vec<f64>) -> Self {
        let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let trend = trend(&values, sup);
        Self { name, values, sup, trend }
    }
}

fn trend(values: &[f64], sup: f64) -> f64 {
    let len = values.len();
    if len < 2 || !(sup.abs() > 0.0) {
        return 0.0;
    }
    let k = (len / 4).max(2);
    let tail = &values[len - k..];
    let mean_x = (k - 1) as f64 / 2.0;
    let mean_y = tail.iter().sum::<f64>() / (k as f64 * sup);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in tail.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y / sup - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Integral of a function of `u` over the domain.
pub fn integral_of(point: &BranchPoint, h: impl Fn(f64) -> f64) -> f64 {
    let u = clamped_u(point);
    integrate_nodes(&point.grid, |i| h(u[i]))
}

pub fn crucial_integral(family: &NonlinearityFamily, point: &BranchPoint) -> f64 {
    integral_of(point, |t| pow(family.f(t), 1.5) / (sqrt(t) + 1.0))
}

pub fn f_integral(family: &NonlinearityFamily, point: &BranchPoint) -> f64 {
    integral_of(point, |t| family.f(t))
}

pub fn f_squared_integral(family: &NonlinearityFamily, point: &BranchPoint) -> f64 {
    integral_of(point, |t| {
        let f = family.f(t);
        f * f
    })
}

/// `∫ f'(u)^{2/γ}` with `γ` the family's growth index.
pub fn fprime_power_integral(family: &NonlinearityFamily, point: &BranchPoint) -> f64 {
    let exponent = 2.0 / family.gamma_limits().gamma_limsup;
    integral_of(point, |t| pow(family.fp(t), exponent))
}

fn supremum(branch: &Branch, name: IntegralKind, h: impl Fn(&BranchPoint) -> f64) -> BranchSupremum {
    BranchSupremum::new(name, branch.pre_fold().iter().map(h).collect())
}

/// `∫ f^{3/2}(u)/(√u+1)` and `∫ f(u)` along the pre-fold branch; regular
/// families only.
pub fn check_crucial_integrals(
    family: &NonlinearityFamily,
    branch: &Branch,
) -> Result<(BranchSupremum, BranchSupremum), Error> {
    if family.regime() != Regime::Regular {
        return Err(Error::InvalidParameter("the crucial integral bound concerns regular families"));
    }
    Ok((
        supremum(branch, IntegralKind::Crucial, |p| crucial_integral(family, p)),
        supremum(branch, IntegralKind::FIntegral, |p| f_integral(family, p)),
    ))
}

/// `∫ f²(u)` along the pre-fold branch. Needs `liminf f f''/f'² > 0` for a
/// regular family, or `p > 1` for MEMS.
pub fn check_l2(family: &NonlinearityFamily, branch: &Branch) -> Result<BranchSupremum, Error> {
    let admissible = match *family {
        NonlinearityFamily::Mems { p } => p > 1.0,
        _ => family.gamma_limits().delta_liminf > 0.0,
    };
    if !admissible {
        return Err(Error::InvalidParameter(
            "the L² bound needs liminf f f''/f'² > 0 (regular families) or p > 1 (MEMS)",
        ));
    }
    Ok(supremum(branch, IntegralKind::FSquared, |p| f_squared_integral(family, p)))
}

/// `∫ f'(u)^{2/γ}` along the pre-fold branch, for `0 < γ < 2`.
pub fn check_fprime_integral(family: &NonlinearityFamily, branch: &Branch) -> Result<BranchSupremum, Error> {
    let gamma = family.gamma_limits().gamma_limsup;
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::OutOfRange { what: "gamma", value: gamma, range: "(0, 2)" });
    }
    Ok(supremum(branch, IntegralKind::FPrimePower, |p| fprime_power_integral(family, p)))
}

/// `α ≥ (p+1)N/(4p)`: a uniform `L^α` bound on `f(u)` keeps MEMS solutions
/// away from touchdown.
pub fn classify_holder_criterion(family: &NonlinearityFamily, alpha: f64, dim: usize) -> Result<bool, Error> {
    let NonlinearityFamily::Mems { p } = *family else {
        return Err(Error::InvalidParameter("the Hölder criterion concerns the MEMS family"));
    };
    if !(alpha > 1.0) {
        return Err(Error::OutOfRange { what: "alpha", value: alpha, range: "(1, ∞)" });
    }
    Ok(alpha >= (p + 1.0) * dim as f64 / (4.0 * p))
}
