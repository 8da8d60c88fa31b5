//! Nonlinearity families `f` and the derived scalar functions used by the
//! a-priori estimates.
//!
//! Three families are supported:
//!
//! | family        | `f(t)`          | regime                           |
//! |---------------|-----------------|----------------------------------|
//! | `Exponential` | `eᵗ`            | regular, `t ≥ 0`                 |
//! | `Power(p)`    | `(1 + t)ᵖ`, p>1 | regular, `t ≥ 0`                 |
//! | `Mems(p)`     | `(1 − t)⁻ᵖ`, p>0| singular, `0 ≤ t < 1`            |
//!
//! Regular families are smooth, increasing, convex and superlinear with
//! `f(0) = 1`; the MEMS family is increasing and convex on `[0, 1)` and blows
//! up at `t = 1` (touchdown).
//!
//! The auxiliary function `g` is the one that makes `f ≥ g g'` with
//! `g, g', g'' ≥ 0` and `g(0) = 0`:
//!
//! * regular families: `g(t) = √2 (∫₀ᵗ (f − 1))^{1/2}`;
//! * MEMS, `p > 1`:    `g(t) = √(2/(p−1)) ((1 − t)^{−(p−1)/2} − 1)`.
//!
//! and `H(t) = ∫₀ᵗ f''(τ) g(τ) dτ`. For MEMS the integral is elementary:
//! with `c = √(2/(p−1))`,
//!
//! ```text
//! f''(τ) g(τ) = c p (p+1) [ (1−τ)^{−(3p+3)/2} − (1−τ)^{−(p+2)} ]
//! H(t)        = C_p ((1−t)^{−(3p+1)/2} − 1) + C̃_p (1 − (1−t)^{−(p+1)})
//! C_p = 2 c p (p+1) / (3p+1),   C̃_p = c p.
//! ```
//!
//! For the regular families `H` has no elementary closed form and is
//! evaluated by adaptive Gauss–Kronrod quadrature.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::{exp, expm1, log1p, pow, sqrt};

use crate::quadrature::integrate_adaptive;
use crate::Error;

/// Relative accuracy requested from the quadrature behind `H`.
pub const H_QUADRATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum NonlinearityFamily {
    /// `f(t) = eᵗ`.
    Exponential,
    /// `f(t) = (1 + t)ᵖ`, `p > 1`.
    Power { p: f64 },
    /// `f(t) = (1 − t)⁻ᵖ`, `p > 0`, admissible for `t < 1`.
    Mems { p: f64 },
}

/// Regular (superlinear on `[0, ∞)`) versus singular (blow-up at `t = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    Regular,
    Singular,
}

/// `f(t)`, `f'(t)`, `f''(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DerivedScalars {
    pub t: f64,
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
    pub g: f64,
    pub h: f64,
    /// `f f'' / f'²` at `t`.
    pub gamma_at_t: f64,
}

/// Asymptotic growth indices of `f f'' / f'²`: `limsup` and `liminf` as
/// `t → ∞` for regular families, as `t ↗ 1` for the singular one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GrowthLimits {
    pub gamma_limsup: f64,
    pub delta_liminf: f64,
    pub regime: Regime,
}

impl NonlinearityFamily {
    pub fn power(p: f64) -> Result<Self, Error> {
        let fam = Self::Power { p };
        fam.validate()?;
        Ok(fam)
    }

    pub fn mems(p: f64) -> Result<Self, Error> {
        let fam = Self::Mems { p };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            Self::Exponential => Ok(()),
            Self::Power { p } if p.is_finite() && p > 1.0 => Ok(()),
            Self::Power { p } => Err(Error::OutOfRange { what: "power exponent p", value: p, range: "(1, ∞)" }),
            Self::Mems { p } if p.is_finite() && p > 0.0 => Ok(()),
            Self::Mems { p } => Err(Error::OutOfRange { what: "mems exponent p", value: p, range: "(0, ∞)" }),
        }
    }

    pub fn regime(&self) -> Regime {
        match self {
            Self::Mems { .. } => Regime::Singular,
            _ => Regime::Regular,
        }
    }

    /// Upper end of the admissible range (exclusive), if finite.
    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            Self::Mems { .. } => Some(1.0),
            _ => None,
        }
    }

    pub fn check_domain(&self, t: f64) -> Result<(), Error> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::OutOfRange { what: "t", value: t, range: "[0, ∞)" });
        }
        if matches!(self, Self::Mems { .. }) && t >= 1.0 {
            return Err(Error::OutOfRange { what: "t", value: t, range: "[0, 1)" });
        }
        Ok(())
    }

    /// Closed-form `f, f', f''` with range checking.
    pub fn eval(&self, t: f64) -> Result<Derivatives, Error> {
        self.check_domain(t)?;
        Ok(self.eval_unchecked(t))
    }

    /// Closed-form `f, f', f''` on the formula's natural domain (`t > −1`
    /// for power, `t < 1` for MEMS). No range checks and no clamping: inner
    /// solver loops call this on iterates that may dip marginally below zero.
    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> Derivatives {
        match *self {
            Self::Exponential => {
                let e = exp(t);
                Derivatives { f: e, fp: e, fpp: e }
            }
            Self::Power { p } => {
                let base = 1.0 + t;
                let b2 = pow(base, p - 2.0);
                Derivatives { f: b2 * base * base, fp: p * b2 * base, fpp: p * (p - 1.0) * b2 }
            }
            Self::Mems { p } => {
                let s = 1.0 - t;
                let f = pow(s, -p);
                Derivatives { f, fp: p * f / s, fpp: p * (p + 1.0) * f / (s * s) }
            }
        }
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        self.eval_unchecked(t).f
    }

    #[inline]
    pub fn fp(&self, t: f64) -> f64 {
        self.eval_unchecked(t).fp
    }

    #[inline]
    pub fn fpp(&self, t: f64) -> f64 {
        self.eval_unchecked(t).fpp
    }

    /// `∫₀ᵗ f`.
    pub fn primitive(&self, t: f64) -> Result<f64, Error> {
        self.check_domain(t)?;
        Ok(self.excess_primitive_unchecked(t) + t)
    }

    /// `∫₀ᵗ (f − 1)`, evaluated without cancellation near `t = 0`.
    fn excess_primitive_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential => {
                if t.abs() < 0.25 {
                    // t²/2! + t³/3! + …
                    series(t, |k| 1.0 / (k as f64 + 1.0))
                } else {
                    expm1(t) - t
                }
            }
            Self::Power { p } => {
                if t.abs() < 0.25 {
                    // Σ_{k≥2} p(p−1)…(p−k+2)/k! tᵏ
                    power_excess_series(p, t)
                } else {
                    expm1((p + 1.0) * log1p(t)) / (p + 1.0) - t
                }
            }
            Self::Mems { p } => {
                if t.abs() < 0.25 {
                    mems_excess_series(p, t)
                } else if (p - 1.0).abs() < 1e-12 {
                    -log1p(-t) - t
                } else {
                    expm1(-(p - 1.0) * log1p(-t)) / (p - 1.0) - t
                }
            }
        }
    }

    /// The auxiliary function `g`; see the module documentation.
    pub fn g_aux(&self, t: f64) -> Result<f64, Error> {
        self.check_domain(t)?;
        self.g_applicable()?;
        Ok(self.g_unchecked(t))
    }

    fn g_applicable(&self) -> Result<(), Error> {
        match *self {
            Self::Mems { p } if p <= 1.0 => {
                Err(Error::OutOfRange { what: "mems exponent p (auxiliary g)", value: p, range: "(1, ∞)" })
            }
            _ => Ok(()),
        }
    }

    fn g_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential | Self::Power { .. } => {
                sqrt(2.0 * self.excess_primitive_unchecked(t).max(0.0))
            }
            Self::Mems { p } => {
                let c = sqrt(2.0 / (p - 1.0));
                c * expm1(-0.5 * (p - 1.0) * log1p(-t))
            }
        }
    }

    /// `g'(t)`, closed form.
    pub fn g_prime(&self, t: f64) -> Result<f64, Error> {
        self.check_domain(t)?;
        self.g_applicable()?;
        Ok(match *self {
            Self::Exponential | Self::Power { .. } => {
                let g = self.g_unchecked(t);
                let excess = self.f(t) - 1.0;
                if g == 0.0 {
                    // g(t) ≈ √f'(0) t near the origin.
                    sqrt(self.fp(0.0))
                } else {
                    excess / g
                }
            }
            Self::Mems { p } => {
                let c = sqrt(2.0 / (p - 1.0));
                c * 0.5 * (p - 1.0) * pow(1.0 - t, -0.5 * (p + 1.0))
            }
        })
    }

    /// `H(t) = ∫₀ᵗ f''(τ) g(τ) dτ`.
    pub fn h_aux(&self, t: f64) -> Result<f64, Error> {
        self.check_domain(t)?;
        self.g_applicable()?;
        Ok(match *self {
            Self::Mems { p } => mems_h_closed_form(p, t),
            _ => integrate_adaptive(|tau| self.fpp(tau) * self.g_unchecked(tau), 0.0, t, H_QUADRATURE_TOL),
        })
    }

    /// `H` at many points. For the regular families the integral is
    /// accumulated over the sorted abscissae, so each panel is integrated
    /// once.
    pub fn h_aux_many(&self, ts: &[f64]) -> Result<Vec<f64>, Error> {
        self.g_applicable()?;
        for &t in ts {
            self.check_domain(t)?;
        }
        if let Self::Mems { p } = *self {
            return Ok(ts.iter().map(|&t| mems_h_closed_form(p, t)).collect());
        }
        let mut order: Vec<usize> = (0..ts.len()).collect();
        order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
        let mut out = vec![0.0; ts.len()];
        let (mut prev_t, mut acc) = (0.0, 0.0);
        for idx in order {
            let t = ts[idx];
            if t > prev_t {
                acc += integrate_adaptive(|tau| self.fpp(tau) * self.g_unchecked(tau), prev_t, t, H_QUADRATURE_TOL);
                prev_t = t;
            }
            out[idx] = acc;
        }
        Ok(out)
    }

    pub fn derived(&self, t: f64) -> Result<DerivedScalars, Error> {
        let d = self.eval(t)?;
        Ok(DerivedScalars {
            t,
            f: d.f,
            fp: d.fp,
            fpp: d.fpp,
            g: self.g_aux(t)?,
            h: self.h_aux(t)?,
            gamma_at_t: d.f * d.fpp / (d.fp * d.fp),
        })
    }

    /// `limsup` and `liminf` of `f f'' / f'²`. For all three families the
    /// ratio is constant in `t`, so both limits coincide.
    pub fn gamma_limits(&self) -> GrowthLimits {
        let (value, regime) = match *self {
            Self::Exponential => (1.0, Regime::Regular),
            Self::Power { p } => (1.0 - 1.0 / p, Regime::Regular),
            Self::Mems { p } => ((p + 1.0) / p, Regime::Singular),
        };
        GrowthLimits { gamma_limsup: value, delta_liminf: value, regime }
    }

    /// `C₀ = max(1, f'(M) / f^γ(M))`, the constant in `f'(u) ≤ C₀ f^γ(u)`.
    pub fn growth_constant(&self, m: f64) -> Result<f64, Error> {
        let d = self.eval(m)?;
        let gamma = self.gamma_limits().gamma_limsup;
        Ok((d.fp / pow(d.f, gamma)).max(1.0))
    }
}

/// `Σ_{k≥2} tᵏ · c_k` with `c_2 = 1/2` and `c_{k+1} = c_k · ratio(k)`.
fn series(t: f64, ratio: impl Fn(usize) -> f64) -> f64 {
    let mut term = 0.5 * t * t;
    let mut sum = 0.0;
    let mut k = 2usize;
    while k < 200 {
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        term *= t * ratio(k);
        k += 1;
    }
    sum
}

fn power_excess_series(p: f64, t: f64) -> f64 {
    // c_2 = p/2, c_{k+1} = c_k (p − k + 1)/(k + 1)
    p * series(t, |k| (p - k as f64 + 1.0) / (k as f64 + 1.0))
}

fn mems_excess_series(p: f64, t: f64) -> f64 {
    // ∫₀ᵗ ((1−τ)^{−p} − 1) = Σ_{k≥2} p(p+1)…(p+k−2)/k! tᵏ
    p * series(t, |k| (p + k as f64 - 1.0) / (k as f64 + 1.0))
}

fn mems_h_closed_form(p: f64, t: f64) -> f64 {
    let c = sqrt(2.0 / (p - 1.0));
    let cp = 2.0 * c * p * (p + 1.0) / (3.0 * p + 1.0);
    let cp_tilde = c * p;
    let l = -log1p(-t);
    cp * expm1(0.5 * (3.0 * p + 1.0) * l) - cp_tilde * expm1((p + 1.0) * l)
}

impl fmt::Display for NonlinearityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential => write!(f, "exp"),
            Self::Power { p } => write!(f, "power:p={p}"),
            Self::Mems { p } => write!(f, "mems:p={p}"),
        }
    }
}

impl FromStr for NonlinearityFamily {
    type Err = Error;

    /// Grammar: `exp`, `power:p=<real>`, `mems:p=<real>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || Error::ParseFamily(s.to_string());
        if s == "exp" {
            return Ok(Self::Exponential);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let value = rest.strip_prefix("p=").ok_or_else(bad)?;
        let p: f64 = value.trim().parse().map_err(|_| bad())?;
        let fam = match kind {
            "power" => Self::Power { p },
            "mems" => Self::Mems { p },
            _ => return Err(bad()),
        };
        fam.validate().map_err(|e| Error::ParseFamily(format!("{s}: {e}")))?;
        Ok(fam)
    }
}

/// Right-hand side of the fundamental estimate
/// `f'(u) (∫₀ᵘ f)^{1/2} ≥ (f^{3/2}(u) − 1) / (√6 (√u + 1))`, returned as
/// `(lhs, rhs)`.
pub fn fundamental_estimate(family: &NonlinearityFamily, u: f64) -> Result<(f64, f64), Error> {
    let d = family.eval(u)?;
    let lhs = d.fp * sqrt(family.primitive(u)?);
    let rhs = (pow(d.f, 1.5) - 1.0) / (sqrt(6.0) * (sqrt(u) + 1.0));
    Ok((lhs, rhs))
}

/// `(lhs, rhs)` of `√(∫₀ᵘ f) ≥ (f^{2−γ}(u) − 1)^{1/2} / √((2−γ) C₀)` for
/// `0 < γ < 2`.
pub fn primitive_growth_bound(family: &NonlinearityFamily, u: f64, c0: f64) -> Result<(f64, f64), Error> {
    let gamma = family.gamma_limits().gamma_limsup;
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::OutOfRange { what: "gamma", value: gamma, range: "(0, 2)" });
    }
    let f = family.eval(u)?.f;
    let lhs = sqrt(family.primitive(u)?);
    let rhs = sqrt((pow(f, 2.0 - gamma) - 1.0).max(0.0) / ((2.0 - gamma) * c0));
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn eval_examples() {
        let e = NonlinearityFamily::Exponential.eval(0.0).unwrap();
        assert_eq!((e.f, e.fp, e.fpp), (1.0, 1.0, 1.0));
        let p = NonlinearityFamily::power(2.0).unwrap().eval(1.0).unwrap();
        assert!(close(p.f, 4.0, 1e-15) && close(p.fp, 4.0, 1e-15) && close(p.fpp, 2.0, 1e-15));
        let m = NonlinearityFamily::mems(2.0).unwrap().eval(0.5).unwrap();
        assert!(close(m.f, 4.0, 1e-15) && close(m.fp, 16.0, 1e-15) && close(m.fpp, 96.0, 1e-15));
    }

    #[test]
    fn eval_domain_errors() {
        let mems = NonlinearityFamily::mems(2.0).unwrap();
        assert!(mems.eval(1.0).is_err());
        assert!(mems.eval(1.5).is_err());
        assert!(NonlinearityFamily::Exponential.eval(-0.1).is_err());
        assert!(NonlinearityFamily::Exponential.eval(f64::NAN).is_err());
        assert!(mems.eval(0.999_999).is_ok());
    }

    #[test]
    fn parameter_validation() {
        assert!(NonlinearityFamily::power(1.0).is_err());
        assert!(NonlinearityFamily::power(f64::INFINITY).is_err());
        assert!(NonlinearityFamily::mems(0.0).is_err());
        assert!(NonlinearityFamily::mems(0.3).is_ok());
    }

    #[test]
    fn g_examples() {
        for fam in [NonlinearityFamily::Exponential, NonlinearityFamily::Power { p: 3.0 }, NonlinearityFamily::Mems { p: 2.0 }] {
            assert_eq!(fam.g_aux(0.0).unwrap(), 0.0);
            assert_eq!(fam.h_aux(0.0).unwrap(), 0.0);
        }
        let g1 = NonlinearityFamily::Exponential.g_aux(1.0).unwrap();
        assert!(close(g1, sqrt(2.0) * sqrt(core::f64::consts::E - 2.0), 1e-15));
        assert!((g1 - 1.198567).abs() < 1e-6);
        let gm = NonlinearityFamily::Mems { p: 3.0 }.g_aux(0.5).unwrap();
        assert!(close(gm, 1.0, 1e-14));
    }

    #[test]
    fn mems_g_requires_p_above_one() {
        let fam = NonlinearityFamily::Mems { p: 0.5 };
        assert!(fam.g_aux(0.2).is_err());
        assert!(fam.h_aux(0.2).is_err());
        assert!(fam.eval(0.2).is_ok());
    }

    #[test]
    fn power_g_closed_form_matches_literal_formula() {
        let p = 2.5;
        let fam = NonlinearityFamily::Power { p };
        for t in [0.3, 1.0, 4.0, 20.0] {
            let literal = sqrt(2.0) * sqrt(pow(1.0 + t, p + 1.0) / (p + 1.0) - t - 1.0 / (p + 1.0));
            assert!(close(fam.g_aux(t).unwrap(), literal, 1e-13), "t = {t}");
        }
    }

    #[test]
    fn series_branches_are_continuous() {
        for fam in [NonlinearityFamily::Exponential, NonlinearityFamily::Power { p: 2.7 }, NonlinearityFamily::Mems { p: 1.7 }] {
            let below = fam.excess_primitive_unchecked(0.25 - 1e-12);
            let above = fam.excess_primitive_unchecked(0.25 + 1e-12);
            assert!(close(below, above, 1e-10), "{fam}");
        }
    }

    #[test]
    fn gamma_limits_values() {
        let e = NonlinearityFamily::Exponential.gamma_limits();
        assert_eq!((e.gamma_limsup, e.delta_liminf), (1.0, 1.0));
        let p = NonlinearityFamily::Power { p: 4.0 }.gamma_limits();
        assert_eq!(p.gamma_limsup, 0.75);
        let m = NonlinearityFamily::Mems { p: 2.0 }.gamma_limits();
        assert_eq!((m.gamma_limsup, m.regime), (1.5, Regime::Singular));
    }

    #[test]
    fn growth_constants() {
        assert_eq!(NonlinearityFamily::Exponential.growth_constant(3.0).unwrap(), 1.0);
        let c = NonlinearityFamily::Power { p: 3.0 }.growth_constant(2.0).unwrap();
        assert!(close(c, 3.0, 1e-14));
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for s in ["exp", "power:p=2", "mems:p=2", "power:p=1.5", "mems:p=0.25"] {
            let fam: NonlinearityFamily = s.parse().unwrap();
            assert_eq!(fam.to_string(), s);
        }
        for bad in ["", "exp:p=1", "power", "power:p=", "power:q=2", "power:p=0.5", "mems:p=-1", "cosh"] {
            assert!(bad.parse::<NonlinearityFamily>().is_err(), "{bad}");
        }
    }
}
