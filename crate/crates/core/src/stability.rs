//! Smallest eigenvalue of the second variation at a branch point.
//!
//! A solution is semi-stable when `∫ λ f'(u) ψ² ≤ ∫ (Δψ)²` for all admissible
//! `ψ`. Discretely the quadratic form is `ψᵀ Lᵀ W L ψ − λ ψᵀ W F' ψ` with
//! `W` the cell volumes and `F' = diag f'(u)`, relative to `ψᵀ W ψ`. Because
//! `W L` is symmetric this is the `W`-self-adjoint eigenproblem
//!
//! ```text
//! (L² − λ F') ψ = μ ψ,
//! ```
//!
//! whose matrix is exactly the Jacobian block that becomes singular at the
//! discrete fold. It is solved in the symmetric form `S = T² − λ F'` with
//! `T = W^{1/2} L W^{−1/2}` (tridiagonal) by inverse iteration, shifted to
//! just below `μ₁` after bracketing it by bisection on the inertia of
//! `S − σ`.

use alloc::vec::Vec;

use libm::sqrt;

use crate::banded::BandMatrix;
use crate::branch::{BranchPoint, SourceTerm};
use crate::radial::{laplacian_matrix, RadialField, RadialGrid};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenConfig {
    pub max_iterations: usize,
    /// Relative change of the eigenvalue at which iteration stops, measured
    /// against the energy scale `‖Tφ‖² + λ Σ f'(u) φ²`.
    pub rel_tol: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { max_iterations: 500, rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub mu1: f64,
    /// Normalized by `Σ V_i ψ_i² = 1`, positive at the center.
    pub eigenfunction: RadialField,
    pub iterations: usize,
    pub converged: bool,
    /// Shift used by the final inverse iterations.
    pub shift: f64,
}

/// Symmetrized Laplacian `T = W^{1/2} L W^{−1/2}` on the unknown nodes.
pub fn symmetrized_laplacian(grid: &RadialGrid) -> BandMatrix {
    let lap = laplacian_matrix(grid).matrix;
    let sw: Vec<f64> = grid.unknown_weights().into_iter().map(sqrt).collect();
    let n = lap.dim();
    let mut t = BandMatrix::zeros(n, 1, 1);
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            t.set(i, j, sw[i] * lap.get(i, j) / sw[j]);
        }
    }
    t
}

struct Problem {
    t: BandMatrix,
    s: BandMatrix,
    /// `λ f'(u)` at the unknown nodes.
    q: Vec<f64>,
    sw: Vec<f64>,
}

impl Problem {
    fn new<S: SourceTerm + ?Sized>(source: &S, point: &BranchPoint) -> Self {
        let grid = &point.grid;
        let t = symmetrized_laplacian(grid);
        let q: Vec<f64> =
            point.u.unknowns(grid).iter().map(|&u| point.lambda * source.value_slope(u).1).collect();
        let mut s = t.mul(&t);
        for (i, qi) in q.iter().enumerate() {
            s.add(i, i, -qi);
        }
        let sw = grid.unknown_weights().into_iter().map(sqrt).collect();
        Self { t, s, q, sw }
    }

    /// `(φᵀSφ, ‖Tφ‖² + Σ|q|φ²)` for unit `φ`, evaluated through `Tφ` to
    /// avoid the cancellation in `T²φ`.
    fn quotient(&self, phi: &[f64]) -> (f64, f64) {
        let tp = self.t.matvec(phi);
        let kinetic: f64 = tp.iter().map(|x| x * x).sum();
        let potential: f64 = self.q.iter().zip(phi).map(|(q, p)| q * p * p).sum();
        let abs_potential: f64 = self.q.iter().zip(phi).map(|(q, p)| q.abs() * p * p).sum();
        (kinetic - potential, kinetic + abs_potential)
    }

    /// Number of eigenvalues of `S` below `x` (inertia of `LDLᵀ` of `S − x`).
    fn count_below(&self, x: f64) -> usize {
        let n = self.s.dim();
        let kl = self.s.lower_bandwidth();
        // l[i][k] multiplies row i against column i−1−k.
        let mut l = alloc::vec![[0.0f64; 2]; n];
        let mut d = alloc::vec![0.0f64; n];
        let mut negative = 0;
        for j in 0..n {
            for i in j..(j + kl + 1).min(n) {
                let mut a = self.s.get(i, j) - if i == j { x } else { 0.0 };
                for k in j.saturating_sub(kl)..j {
                    let lik = if i - k <= kl { l[i][i - k - 1] } else { 0.0 };
                    let ljk = l[j][j - k - 1];
                    a -= lik * ljk * d[k];
                }
                if i == j {
                    d[j] = if a == 0.0 { -f64::EPSILON * (1.0 + x.abs()) } else { a };
                    if d[j] < 0.0 {
                        negative += 1;
                    }
                } else {
                    l[i][i - j - 1] = a / d[j];
                }
            }
        }
        negative
    }

    /// Lower bound on the spectrum of `S`.
    fn gershgorin_low(&self) -> f64 {
        let n = self.s.dim();
        (0..n)
            .map(|i| {
                let off: f64 = (i.saturating_sub(2)..(i + 3).min(n)).filter(|&j| j != i).map(|j| self.s.get(i, j).abs()).sum();
                self.s.get(i, i) - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Inverse iteration at `shift` from `phi`; returns the unit vector,
    /// its quotient and the iteration count.
    fn inverse_iteration(
        &self,
        mut shift: f64,
        mut phi: Vec<f64>,
        scale: f64,
        config: &EigenConfig,
    ) -> Result<(Vec<f64>, f64, f64, usize), Error> {
        let lu = loop {
            let mut shifted = self.s.clone();
            shifted.shift_diagonal(-shift);
            match shifted.factor() {
                Ok(lu) => break lu,
                Err(_) => shift += 1e-8 * scale,
            }
        };
        normalize(&mut phi);
        let mut mu = self.quotient(&phi).0;
        for it in 1..=config.max_iterations {
            lu.solve_in_place(&mut phi);
            normalize(&mut phi);
            let (next, energy) = self.quotient(&phi);
            let done = it >= 2 && (next - mu).abs() <= config.rel_tol * energy;
            mu = next;
            if done {
                return Ok((phi, mu, shift, it));
            }
        }
        Err(Error::IterationLimit { iterations: config.max_iterations })
    }
}

fn normalize(x: &mut [f64]) {
    let norm = sqrt(x.iter().map(|v| v * v).sum());
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// [`smallest_stability_eigenvalue_with`] with the default configuration.
pub fn smallest_stability_eigenvalue<S: SourceTerm + ?Sized>(
    source: &S,
    point: &BranchPoint,
) -> Result<StabilityReport, Error> {
    smallest_stability_eigenvalue_with(source, point, &EigenConfig::default())
}

/// Smallest eigenvalue `μ₁` of the second variation and its eigenfunction.
pub fn smallest_stability_eigenvalue_with<S: SourceTerm + ?Sized>(
    source: &S,
    point: &BranchPoint,
    config: &EigenConfig,
) -> Result<StabilityReport, Error> {
    let grid = &point.grid;
    let prob = Problem::new(source, point);
    let nodes: Vec<f64> = (grid.first_unknown()..=grid.n).map(|i| grid.node(i)).collect();
    let u = point.u.unknowns(grid);
    let use_u = u.iter().any(|&x| x > 0.0);
    let mut start: Vec<f64> = (0..nodes.len())
        .map(|k| prob.sw[k] * if use_u { u[k].max(0.0) } else { 1.0 - nodes[k] * nodes[k] })
        .collect();
    normalize(&mut start);
    let scale = prob.quotient(&start).1.max(1.0);

    // Bracket μ₁ by bisection on the inertia, then iterate from just below
    // it, where no other eigenvalue competes for the shift.
    let (rq, energy) = prob.quotient(&start);
    let mut lo = prob.gershgorin_low().min(rq) - 1.0;
    let mut hi = rq + 1e-6 * energy;
    while prob.count_below(hi) == 0 {
        hi += energy;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if prob.count_below(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let shift = lo - 1e-8 * (hi - lo).max(1e-12 * scale);
    let (phi, mu, shift, iterations) = prob.inverse_iteration(shift, start, scale, config)?;
    debug_assert!(mu.is_finite());

    let mut psi: Vec<f64> = phi.iter().zip(&prob.sw).map(|(p, s)| p / s).collect();
    if psi.iter().sum::<f64>() < 0.0 {
        psi.iter_mut().for_each(|x| *x = -*x);
    }
    let eigenfunction = RadialField::from_unknowns(grid, &psi);
    let mu1 = rayleigh_quotient(source, point, &eigenfunction);
    Ok(StabilityReport { mu1, eigenfunction, iterations, converged: true, shift })
}

/// `true` iff `μ₁ ≥ −tol`.
pub fn is_semistable<S: SourceTerm + ?Sized>(source: &S, point: &BranchPoint, tol: f64) -> Result<bool, Error> {
    Ok(smallest_stability_eigenvalue(source, point)?.mu1 >= -tol)
}

/// Discrete `(∫(Δψ)² − λ∫f'(u)ψ²) / ∫ψ²` with cell-volume weights; the
/// boundary values of `ψ` are taken as zero.
pub fn rayleigh_quotient<S: SourceTerm + ?Sized>(source: &S, point: &BranchPoint, psi: &RadialField) -> f64 {
    let grid = &point.grid;
    let w = grid.unknown_weights();
    let psi = psi.unknowns(grid);
    let lap = laplacian_matrix(grid).matrix.matvec(psi);
    let u = point.u.unknowns(grid);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..psi.len() {
        let fp = source.value_slope(u[k]).1;
        num += w[k] * (lap[k] * lap[k] - point.lambda * fp * psi[k] * psi[k]);
        den += w[k] * psi[k] * psi[k];
    }
    num / den
}
