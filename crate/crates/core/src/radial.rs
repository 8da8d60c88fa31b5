//! Radial discretization on the unit ball (or an annulus) of `ℝᴺ`.
//!
//! The mesh is uniform, `r_i = r_inner + i h` for `i = 0..=n+1`, with `n`
//! interior nodes. On the ball the center node `r_0 = 0` is an unknown; on an
//! annulus both end nodes are Dirichlet nodes.
//!
//! The Laplacian `Δu = u'' + (N−1) u'/r` is discretized in conservative
//! (flux) form over the dual cells `[r_{i−1/2}, r_{i+1/2}]`:
//!
//! ```text
//! (L u)_i = [ r_{i+½}^{N−1} (u_{i+1} − u_i) − r_{i−½}^{N−1} (u_i − u_{i−1}) ] / (h V_i)
//! V_i     = (r_{i+½}^N − r_{i−½}^N) / N
//! ```
//!
//! This is a centered second-order stencil, exact on constants and on `r²`,
//! and it reduces at the center (`r_{−½} = 0`) to the ghost-node rule
//! `Δu(0) = N u''(0) ≈ 2N (u_1 − u_0)/h²`. Its off-diagonal coefficients are
//! positive in every dimension and `diag(V) L` is symmetric, so the cell
//! volumes `V_i` are the natural discrete `r^{N−1} dr` weights.

use alloc::vec;
use alloc::vec::Vec;

use libm::{pow, tgamma};

use crate::banded::{BandMatrix, SingularPivot};
use crate::quadrature::composite_simpson;
use crate::Error;

/// Default number of interior nodes.
pub const DEFAULT_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialGrid {
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub dim: usize,
    pub n: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    h: f64,
}

impl RadialGrid {
    /// Unit ball of `ℝᴺ` with `n` interior nodes.
    pub fn ball(dim: usize, n: usize) -> Result<Self, Error> {
        Self::annulus(dim, n, 0.0)
    }

    /// Annulus `r_inner < |x| < 1`; `r_inner = 0` gives the ball.
    pub fn annulus(dim: usize, n: usize, r_inner: f64) -> Result<Self, Error> {
        if dim < 2 {
            return Err(Error::OutOfRange { what: "dimension N", value: dim as f64, range: "[2, ∞)" });
        }
        if n < 4 {
            return Err(Error::OutOfRange { what: "interior nodes n", value: n as f64, range: "[4, ∞)" });
        }
        if !(0.0..1.0).contains(&r_inner) {
            return Err(Error::OutOfRange { what: "r_inner", value: r_inner, range: "[0, 1)" });
        }
        let h = (1.0 - r_inner) / (n as f64 + 1.0);
        Ok(Self { dim, n, r_inner, r_outer: 1.0, h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn is_ball(&self) -> bool {
        self.r_inner == 0.0
    }

    /// Total node count, `n + 2`.
    pub fn len(&self) -> usize {
        self.n + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n + 1 {
            self.r_outer
        } else {
            self.r_inner + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Index of the first unknown node (0 on the ball, 1 on an annulus).
    pub fn first_unknown(&self) -> usize {
        if self.is_ball() {
            0
        } else {
            1
        }
    }

    pub fn unknown_count(&self) -> usize {
        self.n + 1 - self.first_unknown()
    }

    /// `r_{i+½}^{N−1}`.
    fn face(&self, i: usize) -> f64 {
        pow(self.r_inner + (i as f64 + 0.5) * self.h, (self.dim - 1) as f64)
    }

    /// Dual-cell volume `V_i` per unit solid angle for node `i`; boundary
    /// nodes get their half cell.
    pub fn cell_volume(&self, i: usize) -> f64 {
        let nd = self.dim as f64;
        let lo = if i == 0 { self.r_inner } else { self.node(i) - 0.5 * self.h };
        let hi = if i == self.n + 1 { self.r_outer } else { self.node(i) + 0.5 * self.h };
        (pow(hi, nd) - pow(lo, nd)) / nd
    }

    /// Cell volumes of the unknown nodes, in unknown order.
    pub fn unknown_weights(&self) -> Vec<f64> {
        (self.first_unknown()..=self.n).map(|i| self.cell_volume(i)).collect()
    }

    /// Surface measure of the unit sphere `S^{N−1}`, `2π^{N/2} / Γ(N/2)`.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.dim)
    }

    /// Volume of the domain.
    pub fn volume(&self) -> f64 {
        let nd = self.dim as f64;
        self.sphere_area() * (pow(self.r_outer, nd) - pow(self.r_inner, nd)) / nd
    }
}

/// `|S^{N−1}| = 2π^{N/2} / Γ(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * pow(core::f64::consts::PI, half) / tgamma(half)
}

/// Samples of a radial function on all grid nodes (boundary nodes included).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialField {
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn zeros(grid: &RadialGrid) -> Self {
        Self { values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { values: grid.nodes().into_iter().map(f).collect() }
    }

    pub fn from_values(grid: &RadialGrid, values: Vec<f64>) -> Result<Self, Error> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter("field length does not match grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field has non-finite entries"));
        }
        Ok(Self { values })
    }

    /// Embeds values at the unknown nodes, with zero Dirichlet data.
    pub fn from_unknowns(grid: &RadialGrid, unknowns: &[f64]) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[grid.first_unknown()..=grid.n].copy_from_slice(unknowns);
        Self { values }
    }

    pub fn unknowns<'a>(&'a self, grid: &RadialGrid) -> &'a [f64] {
        &self.values[grid.first_unknown()..=grid.n]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// Discrete operator on the unknown nodes plus its coupling to Dirichlet
/// boundary values.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    pub matrix: BandMatrix,
    /// Coefficient multiplying the inner boundary value in the first unknown
    /// row (annulus only).
    pub inner_coupling: Option<f64>,
    /// Coefficient multiplying the outer boundary value in the last unknown
    /// row.
    pub outer_coupling: f64,
    first_unknown: usize,
}

impl BandedOperator {
    /// Applies the operator with the Dirichlet values read from `field`'s
    /// boundary nodes; returns values at the unknown nodes.
    pub fn apply(&self, field: &RadialField) -> Vec<f64> {
        let n_unk = self.matrix.dim();
        let first = self.first_unknown;
        let mut out = self.matrix.matvec(&field.values[first..first + n_unk]);
        if let Some(c) = self.inner_coupling {
            out[0] += c * field.values[0];
        }
        out[n_unk - 1] += self.outer_coupling * field.values[first + n_unk];
        out
    }

    /// Applies the operator to unknown-node values with zero boundary data.
    pub fn apply_homogeneous(&self, unknowns: &[f64]) -> Vec<f64> {
        self.matrix.matvec(unknowns)
    }

    /// Solves `A x = b` with zero boundary data.
    pub fn solve_homogeneous(&self, b: &[f64]) -> Result<Vec<f64>, SingularPivot> {
        Ok(self.matrix.factor()?.solve(b))
    }
}

/// Discrete Laplacian `L ≈ Δ` on the unknown nodes (tridiagonal).
pub fn laplacian_matrix(grid: &RadialGrid) -> BandedOperator {
    let first = grid.first_unknown();
    let m = grid.unknown_count();
    let h = grid.h();
    let mut a = BandMatrix::zeros(m, 1, 1);
    let mut inner_coupling = None;
    let mut outer_coupling = 0.0;
    for row in 0..m {
        let i = first + row;
        let vol_h = grid.cell_volume(i) * h;
        let right = grid.face(i) / vol_h;
        let left = if i == 0 { 0.0 } else { grid.face(i - 1) / vol_h };
        a.set(row, row, -(left + right));
        if row + 1 < m {
            a.set(row, row + 1, right);
        } else {
            outer_coupling = right;
        }
        if row > 0 {
            a.set(row, row - 1, left);
        } else if i > 0 {
            inner_coupling = Some(left);
        }
    }
    BandedOperator { matrix: a, inner_coupling, outer_coupling, first_unknown: first }
}

/// `L²` with homogeneous Navier data (`u = Δu = 0` on the boundary).
pub fn biharmonic_matrix(grid: &RadialGrid) -> BandedOperator {
    let lap = laplacian_matrix(grid);
    BandedOperator {
        matrix: lap.matrix.mul(&lap.matrix),
        inner_coupling: None,
        outer_coupling: 0.0,
        first_unknown: lap.first_unknown,
    }
}

/// Solves `Δ²u = rhs` with Navier conditions as the coupled pair
/// `−Lu = v`, `−Lv = rhs`. `rhs` is given at the unknown nodes; returns
/// `(u, v)` as full fields.
pub fn solve_navier_biharmonic(grid: &RadialGrid, rhs: &[f64]) -> Result<(RadialField, RadialField), SingularPivot> {
    let mut neg_lap = laplacian_matrix(grid).matrix;
    for i in 0..neg_lap.dim() {
        for j in i.saturating_sub(1)..(i + 2).min(neg_lap.dim()) {
            let v = neg_lap.get(i, j);
            neg_lap.set(i, j, -v);
        }
    }
    let lu = neg_lap.factor()?;
    let v = lu.solve(rhs);
    let u = lu.solve(&v);
    Ok((RadialField::from_unknowns(grid, &u), RadialField::from_unknowns(grid, &v)))
}

/// `∫_Ω h dx = |S^{N−1}| ∫ h(r) r^{N−1} dr` by composite Simpson.
pub fn integrate_radial(field: &RadialField, grid: &RadialGrid) -> f64 {
    let nd = (grid.dim - 1) as f64;
    let samples: Vec<f64> = field
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * pow(grid.node(i), nd))
        .collect();
    grid.sphere_area() * composite_simpson(&samples, grid.h())
}

/// Integrates `integrand(i)` sampled at every node, with the radial weight.
pub fn integrate_nodes(grid: &RadialGrid, integrand: impl Fn(usize) -> f64) -> f64 {
    let field = RadialField { values: (0..grid.len()).map(integrand).collect() };
    integrate_radial(&field, grid)
}

/// Radial derivative `u'(r)`: centered differences inside, second-order
/// one-sided differences at the ends, `u'(0) = 0` at the ball center.
pub fn radial_gradient(field: &RadialField, grid: &RadialGrid) -> RadialField {
    let u = &field.values;
    let h = grid.h();
    let last = grid.n + 1;
    let mut d = vec![0.0; grid.len()];
    for i in 1..last {
        d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    d[0] = if grid.is_ball() { 0.0 } else { (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h) };
    d[last] = (3.0 * u[last] - 4.0 * u[last - 1] + u[last - 2]) / (2.0 * h);
    RadialField { values: d }
}

/// `c(s, N)` with `Δ² r^s = c r^{s−4}`, i.e. `s (s+N−2) (s−2) (s+N−4)`.
pub fn radial_power_bilaplacian(s: f64, dim: usize) -> f64 {
    let nd = dim as f64;
    s * (s + nd - 2.0) * (s - 2.0) * (s + nd - 4.0)
}

/// `c(s, N)` with `Δ r^s = c r^{s−2}`.
pub fn radial_power_laplacian(s: f64, dim: usize) -> f64 {
    s * (s + dim as f64 - 2.0)
}

/// `Δ(a log r) = a (N−2) r^{−2}`; returns the coefficient.
pub fn log_laplacian(a: f64, dim: usize) -> f64 {
    a * (dim as f64 - 2.0)
}

/// `Δ²(a log r) = −2a (N−2)(N−4) r^{−4}`; returns the coefficient.
pub fn log_bilaplacian(a: f64, dim: usize) -> f64 {
    let nd = dim as f64;
    -2.0 * a * (nd - 2.0) * (nd - 4.0)
}

/// Weighted discrete inner product `Σ V_i a_i b_i` over all nodes.
pub fn weighted_dot(grid: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
    (0..grid.len()).map(|i| grid.cell_volume(i) * a[i] * b[i]).sum()
}

/// Manufactured Navier profile `(1−r²)² + (4/N)(1−r²)` with
/// `Δ²u = 8N(N+2)`, `−Δu = 4(N+2)(1−r²)`.
pub fn manufactured_profile(dim: usize) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64, f64) {
    let nd = dim as f64;
    let u = move |r: f64| {
        let s = 1.0 - r * r;
        s * s + 4.0 / nd * s
    };
    let v = move |r: f64| 4.0 * (nd + 2.0) * (1.0 - r * r);
    (u, v, 8.0 * nd * (nd + 2.0))
}

/// Max-norm distance between two sample vectors.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
