//! Integrability-exponent bootstrap and the regularity-dimension predictor.
//!
//! Given uniform bounds on `∫ f^q(u)` and `∫ f^α(u) / (u^β + 1)` along a
//! sequence of solutions, the exponent of the `L^q` bound on `f(u)` improves
//! through
//!
//! ```text
//! q_{n+1} = α N q_n / (N q_n + β (N − 4 q_n)),      1 ≤ q_n ≤ N/4,
//! ```
//!
//! which either converges monotonically to `(α − β) N / (N − 4β)` (when
//! `α ≤ N/4`) or passes `N/4` after finitely many steps (when `α > N/4`), at
//! which point `u` is bounded. A second recursion improves the integrability
//! of `−Δu` from a uniform `L^q` bound on `f'(u)` with `q > N/4`:
//!
//! ```text
//! q_{i+1} = N q q_i / (N q_i + q (N − 4 q_i)),
//! ```
//!
//! increasing until it exceeds `N q / (4q − N)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::nonlinearity::{NonlinearityFamily, Regime};
use crate::Error;

/// Absolute tolerance on successive iterates.
pub const CONVERGENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentParams {
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub dim: usize,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ExponentParams {
    pub fn new(dim: usize, q: f64, alpha: f64, beta: f64) -> Result<Self, Error> {
        let p = Self { dim, q, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.dim < 2 {
            return Err(Error::OutOfRange { what: "dimension N", value: self.dim as f64, range: "[2, ∞)" });
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(Error::OutOfRange { what: "q", value: self.q, range: "[1, ∞)" });
        }
        if !(self.beta > 0.0) || !self.alpha.is_finite() {
            return Err(Error::OutOfRange { what: "beta", value: self.beta, range: "(0, alpha)" });
        }
        if !(self.beta < self.alpha) {
            return Err(Error::InvalidParameter("beta must be smaller than alpha"));
        }
        Ok(())
    }
}

/// One step of the primal recursion.
pub fn iterate_q(q0: f64, alpha: f64, beta: f64, dim: usize) -> Result<f64, Error> {
    if !(q0 >= 1.0 && q0 <= dim as f64 / 4.0) {
        return Err(Error::OutOfRange { what: "q0", value: q0, range: "[1, N/4]" });
    }
    step_q(q0, alpha, beta, dim)
}

/// The recursion without the `q0 ≥ 1` precondition: a decreasing sequence
/// may settle below 1.
fn step_q(q0: f64, alpha: f64, beta: f64, dim: usize) -> Result<f64, Error> {
    let nd = dim as f64;
    let denominator = nd * q0 + beta * (nd - 4.0 * q0);
    if !(denominator > 0.0) {
        return Err(Error::NonpositiveDenominator { denominator });
    }
    Ok(alpha * nd * q0 / denominator)
}

/// `(α − β) N / (N − 4β)`.
pub fn fixed_point(alpha: f64, beta: f64, dim: usize) -> Result<f64, Error> {
    let nd = dim as f64;
    let denominator = nd - 4.0 * beta;
    if denominator == 0.0 {
        return Err(Error::Singular("N = 4 beta"));
    }
    Ok((alpha - beta) * nd / denominator)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TraceClass {
    IncreasingToFixedPoint,
    DecreasingToFixedPoint,
    /// The starting exponent already is the fixed point.
    AtFixedPoint,
    /// `q_steps > N/4`; `steps = 0` when the start already exceeds `N/4`.
    EscapesAboveNOver4 { steps: usize },
    /// `max_steps` exhausted before convergence or escape.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BootstrapTrace {
    pub params: ExponentParams,
    pub sequence: Vec<f64>,
    pub classification: TraceClass,
    pub fixed_point: Option<f64>,
}

impl BootstrapTrace {
    pub fn is_conclusive(&self) -> bool {
        self.classification != TraceClass::Inconclusive
    }

    /// `|q_{last} − q_{last−1}|`.
    pub fn last_increment(&self) -> f64 {
        match self.sequence.as_slice() {
            [.., a, b] => (b - a).abs(),
            _ => 0.0,
        }
    }
}

/// Iterates the primal recursion until escape above `N/4`, convergence to
/// within [`CONVERGENCE_TOL`], or `max_steps`.
pub fn run_bootstrap(params: ExponentParams, max_steps: usize) -> Result<BootstrapTrace, Error> {
    params.validate()?;
    if max_steps == 0 {
        return Err(Error::InvalidParameter("max_steps must be at least 1"));
    }
    let quarter = params.dim as f64 / 4.0;
    let fixed = fixed_point(params.alpha, params.beta, params.dim).ok();
    let mut sequence = vec![params.q];
    let finish = |sequence: Vec<f64>, classification| BootstrapTrace { params, sequence, classification, fixed_point: fixed };
    if params.q > quarter {
        return Ok(finish(sequence, TraceClass::EscapesAboveNOver4 { steps: 0 }));
    }
    let mut current = params.q;
    for step in 1..=max_steps {
        let next = step_q(current, params.alpha, params.beta, params.dim)?;
        sequence.push(next);
        if next > quarter {
            return Ok(finish(sequence, TraceClass::EscapesAboveNOver4 { steps: step }));
        }
        if (next - current).abs() < CONVERGENCE_TOL {
            let class = if next > params.q {
                TraceClass::IncreasingToFixedPoint
            } else if next < params.q {
                TraceClass::DecreasingToFixedPoint
            } else {
                TraceClass::AtFixedPoint
            };
            return Ok(finish(sequence, class));
        }
        current = next;
    }
    Ok(finish(sequence, TraceClass::Inconclusive))
}

/// Classification predicted analytically from the parameters alone.
pub fn expected_class(params: &ExponentParams) -> TraceClass {
    let quarter = params.dim as f64 / 4.0;
    if params.q > quarter || params.alpha > quarter {
        // The step count is not predicted; callers compare the variant.
        return TraceClass::EscapesAboveNOver4 { steps: 0 };
    }
    let fp = (params.alpha - params.beta) * params.dim as f64 / (params.dim as f64 - 4.0 * params.beta);
    if params.q < fp {
        TraceClass::IncreasingToFixedPoint
    } else if params.q > fp {
        TraceClass::DecreasingToFixedPoint
    } else {
        TraceClass::AtFixedPoint
    }
}

/// One step of the dual recursion, `q > N/4`.
pub fn iterate_dual(q0: f64, q: f64, dim: usize) -> Result<f64, Error> {
    let nd = dim as f64;
    if !(q > nd / 4.0) {
        return Err(Error::OutOfRange { what: "q", value: q, range: "(N/4, ∞)" });
    }
    let denominator = nd * q0 + q * (nd - 4.0 * q0);
    if !(denominator > 0.0) {
        return Err(Error::NonpositiveDenominator { denominator });
    }
    Ok(nd * q * q0 / denominator)
}

/// `N q / (4q − N)`: once an iterate exceeds it, `−Δu` is bounded. The dual
/// map's denominator vanishes exactly there.
pub fn dual_escape_threshold(q: f64, dim: usize) -> f64 {
    let nd = dim as f64;
    nd * q / (4.0 * q - nd)
}

pub fn dual_escapes(q0: f64, q: f64, dim: usize) -> bool {
    q0 > dual_escape_threshold(q, dim)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DualTrace {
    pub sequence: Vec<f64>,
    /// Number of steps after which the threshold was passed. When the last
    /// recorded iterate sits on the pole of the map, the escaping iterate is
    /// unbounded and not recorded.
    pub escaped_after: Option<usize>,
}

/// Iterates the dual recursion from `q0` until it passes
/// [`dual_escape_threshold`] or `max_steps` is reached.
pub fn run_dual_bootstrap(q0: f64, q: f64, dim: usize, max_steps: usize) -> Result<DualTrace, Error> {
    let threshold = dual_escape_threshold(q, dim);
    let mut sequence = vec![q0];
    if q0 > threshold {
        return Ok(DualTrace { sequence, escaped_after: Some(0) });
    }
    let mut current = q0;
    for step in 1..=max_steps {
        match iterate_dual(current, q, dim) {
            Ok(next) => current = next,
            // On the pole the next iterate is unbounded.
            Err(Error::NonpositiveDenominator { .. }) => return Ok(DualTrace { sequence, escaped_after: Some(step) }),
            Err(e) => return Err(e),
        }
        sequence.push(current);
        if current > threshold {
            return Ok(DualTrace { sequence, escaped_after: Some(step) });
        }
    }
    Ok(DualTrace { sequence, escaped_after: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    Regular,
    UnknownByPaper,
}

/// Which sufficient condition decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Rule {
    /// `eᵗ`: `N ≤ 8`; `(1+t)ᵖ`: `N ≤ 8` or `p < N/(N−8)`. Uniform `L²`
    /// bound on `f(u)` fed into the bootstrap (the `N = 8` exponential case
    /// through `∫ f'² = ∫ f² = ∫ f^{N/4}`).
    ExpPowerL2,
    /// `(1−t)^{−p}`, `p > 1`, `p ≠ 3`: `N ≤ 8p/(p+1)` (uniform `L²` bound
    /// plus the Hölder criterion `α ≥ (p+1)N/(4p)`).
    MemsHolder,
    /// Regular family with `γ = limsup f f''/f'² < ∞` and `6 ≤ N < 8/γ`.
    GammaGrowth,
    /// Regular family with `liminf f f''/f'² > 0` and `N ≤ 7`.
    LiminfL2,
    /// Any regular family, `N ≤ 5`.
    LowDimension,
    /// MEMS with `p = 3`: the Hölder embedding step is not available.
    #[cfg_attr(feature = "serde", serde(rename = "mems-p3-excluded"))]
    MemsExponentThreeExcluded,
    /// MEMS with `p ≤ 1`: no uniform `L²` bound is available.
    #[cfg_attr(feature = "serde", serde(rename = "mems-p-at-most-1"))]
    MemsExponentAtMostOne,
    /// No implemented sufficient condition applies.
    #[cfg_attr(feature = "serde", serde(rename = "none"))]
    NoRuleApplies,
}

impl Rule {
    pub fn tag(&self) -> &'static str {
        match self {
            Rule::ExpPowerL2 => "exp-power-l2",
            Rule::MemsHolder => "mems-holder",
            Rule::GammaGrowth => "gamma-growth",
            Rule::LiminfL2 => "liminf-l2",
            Rule::LowDimension => "low-dimension",
            Rule::MemsExponentThreeExcluded => "mems-p3-excluded",
            Rule::MemsExponentAtMostOne => "mems-p-at-most-1",
            Rule::NoRuleApplies => "none",
        }
    }
}

/// Growth indices of a generic regular nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthProfile {
    /// `liminf f f''/f'² > 0` is known.
    pub liminf_positive: bool,
    /// `limsup f f''/f'²`, when finite and known.
    pub gamma_limsup: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegularityVerdict {
    /// `None` for a generic regular nonlinearity described by a
    /// [`GrowthProfile`].
    pub family: Option<NonlinearityFamily>,
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub dim: usize,
    pub verdict: Verdict,
    pub rule: Rule,
}

/// Applies the sufficient conditions for a generic regular nonlinearity, in
/// the order growth index, positive liminf, low dimension.
pub fn predict_regularity_generic(profile: GrowthProfile, dim: usize) -> RegularityVerdict {
    let nd = dim as f64;
    let regular = |rule| RegularityVerdict { family: None, dim, verdict: Verdict::Regular, rule };
    if let Some(gamma) = profile.gamma_limsup {
        if dim >= 6 && gamma * nd < 8.0 {
            return regular(Rule::GammaGrowth);
        }
    }
    if profile.liminf_positive && (6..=7).contains(&dim) {
        return regular(Rule::LiminfL2);
    }
    if dim <= 5 {
        return regular(Rule::LowDimension);
    }
    RegularityVerdict { family: None, dim, verdict: Verdict::UnknownByPaper, rule: Rule::NoRuleApplies }
}

/// Regularity prediction for one of the supported families: family-specific
/// sharp rules first, then the generic ones.
pub fn predict_regularity(family: &NonlinearityFamily, dim: usize) -> RegularityVerdict {
    let nd = dim as f64;
    let with = |verdict, rule| RegularityVerdict { family: Some(*family), dim, verdict, rule };
    match *family {
        NonlinearityFamily::Exponential if dim <= 8 => return with(Verdict::Regular, Rule::ExpPowerL2),
        NonlinearityFamily::Power { p } if dim <= 8 || p * (nd - 8.0) < nd => {
            return with(Verdict::Regular, Rule::ExpPowerL2)
        }
        NonlinearityFamily::Mems { p } => {
            return if p <= 1.0 {
                with(Verdict::UnknownByPaper, Rule::MemsExponentAtMostOne)
            } else if p == 3.0 {
                with(Verdict::UnknownByPaper, Rule::MemsExponentThreeExcluded)
            } else if nd * (p + 1.0) <= 8.0 * p {
                with(Verdict::Regular, Rule::MemsHolder)
            } else {
                with(Verdict::UnknownByPaper, Rule::NoRuleApplies)
            };
        }
        _ => {}
    }
    let limits = family.gamma_limits();
    debug_assert_eq!(limits.regime, Regime::Regular);
    let generic = predict_regularity_generic(
        GrowthProfile { liminf_positive: limits.delta_liminf > 0.0, gamma_limsup: Some(limits.gamma_limsup) },
        dim,
    );
    RegularityVerdict { family: Some(*family), ..generic }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iterate_examples() {
        assert!((iterate_q(1.5, 1.5, 0.5, 6).unwrap() - 1.5).abs() < 1e-15);
        assert!((iterate_q(1.0, 1.5, 0.5, 6).unwrap() - 9.0 / 7.0).abs() < 1e-15);
        assert!((iterate_q(1.5, 2.0, 0.5, 6).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn iterate_domain_errors() {
        assert!(matches!(iterate_q(0.5, 1.5, 0.5, 6), Err(Error::OutOfRange { .. })));
        assert!(matches!(iterate_q(1.6, 1.5, 0.5, 6), Err(Error::OutOfRange { .. })));
        assert!(matches!(iterate_q(1.0, 1.5, -7.0, 8), Err(Error::NonpositiveDenominator { .. })));
    }

    #[test]
    fn fixed_point_examples() {
        assert!((fixed_point(1.5, 0.5, 5).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((fixed_point(1.5, 0.5, 6).unwrap() - 1.5).abs() < 1e-15);
        assert!((fixed_point(1.75, 0.75, 4).unwrap() - 4.0).abs() < 1e-15);
        assert!(matches!(fixed_point(1.5, 1.0, 4), Err(Error::Singular(_))));
    }

    #[test]
    fn trichotomy_examples() {
        let t = run_bootstrap(ExponentParams::new(6, 1.0, 1.5, 0.5).unwrap(), 100_000).unwrap();
        assert_eq!(t.classification, TraceClass::IncreasingToFixedPoint);
        assert!(t.sequence.iter().all(|&q| q <= 1.5));
        assert!(t.sequence.windows(2).all(|w| w[1] >= w[0]));

        let t = run_bootstrap(ExponentParams::new(5, 1.0, 1.5, 0.5).unwrap(), 1000).unwrap();
        assert!(matches!(t.classification, TraceClass::EscapesAboveNOver4 { steps } if steps >= 1));
        assert!(*t.sequence.last().unwrap() > 1.25);

        let t = run_bootstrap(ExponentParams::new(6, 1.5, 1.5, 0.5).unwrap(), 10).unwrap();
        assert_eq!(t.classification, TraceClass::AtFixedPoint);
        assert!(t.sequence.iter().all(|&q| q == 1.5));
    }

    #[test]
    fn decreasing_case_and_inconclusive() {
        // α = 1.8 ≤ N/4 = 2, fixed point (1.3·8)/(8−2) = 1.7333 < q = 2.
        let t = run_bootstrap(ExponentParams::new(8, 2.0, 1.8, 0.5).unwrap(), 100_000).unwrap();
        assert_eq!(t.classification, TraceClass::DecreasingToFixedPoint);
        let t = run_bootstrap(ExponentParams::new(8, 1.0, 1.9, 1.0).unwrap(), 3).unwrap();
        assert_eq!(t.classification, TraceClass::Inconclusive);
        assert!(run_bootstrap(ExponentParams { dim: 8, q: 1.0, alpha: 1.0, beta: 1.0 }, 10).is_err());
        assert!(run_bootstrap(ExponentParams::new(8, 1.0, 2.0, 1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn start_above_quarter_escapes_immediately() {
        let t = run_bootstrap(ExponentParams::new(3, 1.0, 1.5, 0.5).unwrap(), 10).unwrap();
        assert_eq!(t.classification, TraceClass::EscapesAboveNOver4 { steps: 0 });
        assert_eq!(t.sequence, vec![1.0]);
    }

    #[test]
    fn dual_examples() {
        assert!((iterate_dual(2.0, 4.0, 8).unwrap() - 4.0).abs() < 1e-15);
        assert!(iterate_dual(2.0, 2.0, 8).is_err());
        // The escape threshold is a pole of the dual map, not a fixed point.
        let q = 3.0;
        let thr = dual_escape_threshold(q, 8);
        assert!(matches!(iterate_dual(thr, q, 8), Err(Error::NonpositiveDenominator { .. })));
        let trace = run_dual_bootstrap(5.0 / 1.0, 2.0, 5, 1000).unwrap();
        assert!(trace.sequence.windows(2).all(|w| w[1] > w[0]));
        assert!(trace.escaped_after.is_some());
        assert!(dual_escapes(*trace.sequence.last().unwrap(), 2.0, 5));
    }

    #[test]
    fn predictor_examples() {
        let exp = NonlinearityFamily::Exponential;
        assert_eq!(predict_regularity(&exp, 8).verdict, Verdict::Regular);
        assert_eq!(predict_regularity(&exp, 8).rule, Rule::ExpPowerL2);
        assert_eq!(predict_regularity(&exp, 9).verdict, Verdict::UnknownByPaper);
        let mems2 = NonlinearityFamily::Mems { p: 2.0 };
        assert_eq!(predict_regularity(&mems2, 5).rule, Rule::MemsHolder);
        assert_eq!(predict_regularity(&mems2, 6).verdict, Verdict::UnknownByPaper);
        let mems3 = NonlinearityFamily::Mems { p: 3.0 };
        assert_eq!(predict_regularity(&mems3, 4).rule, Rule::MemsExponentThreeExcluded);
        for p in [1.5, 2.0, 9.0, 8.9, 9.1, 20.0] {
            let v = predict_regularity(&NonlinearityFamily::Power { p }, 9).verdict;
            assert_eq!(v == Verdict::Regular, p < 9.0, "p = {p}");
        }
        for fam in [exp, NonlinearityFamily::Power { p: 1.5 }, mems2] {
            assert_eq!(predict_regularity(&fam, 2).verdict, Verdict::Regular);
        }
    }

    #[test]
    fn generic_rules() {
        let none = GrowthProfile::default();
        assert_eq!(predict_regularity_generic(none, 5).rule, Rule::LowDimension);
        assert_eq!(predict_regularity_generic(none, 6).verdict, Verdict::UnknownByPaper);
        let liminf = GrowthProfile { liminf_positive: true, gamma_limsup: None };
        assert_eq!(predict_regularity_generic(liminf, 7).rule, Rule::LiminfL2);
        assert_eq!(predict_regularity_generic(liminf, 8).verdict, Verdict::UnknownByPaper);
        let gamma = GrowthProfile { liminf_positive: false, gamma_limsup: Some(0.5) };
        assert_eq!(predict_regularity_generic(gamma, 15).rule, Rule::GammaGrowth);
        assert_eq!(predict_regularity_generic(gamma, 16).verdict, Verdict::UnknownByPaper);
    }

    proptest! {
        #[test]
        fn iterate_monotone_in_q0(dim in 5usize..40, a in 0.0f64..1.0, b in 0.0f64..1.0, alpha in 0.2f64..10.0, frac in 0.01f64..0.99) {
            let beta = alpha * frac;
            let quarter = dim as f64 / 4.0;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let q1 = 1.0 + lo * (quarter - 1.0);
            let q2 = 1.0 + hi * (quarter - 1.0);
            let x = iterate_q(q1, alpha, beta, dim).unwrap();
            let y = iterate_q(q2, alpha, beta, dim).unwrap();
            prop_assert!(x <= y * (1.0 + 1e-14));
        }

        #[test]
        fn dual_increasing_below_threshold(dim in 4usize..30, qx in 0.01f64..5.0, frac in 0.0f64..0.999) {
            let q = dim as f64 / 4.0 + qx;
            let q0 = 1.0 + frac * (dual_escape_threshold(q, dim) - 1.0).max(0.0);
            if q0 < dual_escape_threshold(q, dim) {
                prop_assert!(iterate_dual(q0, q, dim).unwrap() > q0);
            }
        }
    }
}
