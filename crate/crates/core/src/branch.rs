//! Minimal-branch continuation for `Δ²u = λ f(u)` with Navier data on the
//! ball.
//!
//! The problem is written as the second-order pair `−Δu = v`, `−Δv = λ f(u)`
//! and discretized with the radial Laplacian `L`. The amplitude `m = u(0)` is
//! the continuation parameter, so `λ` is an unknown closed by the constraint
//! `u_0 = m`. Interleaving `(u_i, v_i)` makes the Jacobian at fixed `λ`
//! pentadiagonal; the `λ` column and the constraint row border it and are
//! eliminated by block elimination (two band solves per Newton step).
//!
//! Along the branch `λ(m)` increases up to the fold, where `λ` attains its
//! maximum `λ*` and the smallest eigenvalue of the linearization crosses
//! zero.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::banded::BandMatrix;
use crate::nonlinearity::NonlinearityFamily;
use crate::radial::{laplacian_matrix, RadialField, RadialGrid};
use crate::Error;
use libm::sqrt;

/// A right-hand side `f` for the Newton solver.
pub trait SourceTerm {
    /// `(f(t), f'(t))`, without domain checks.
    fn value_slope(&self, t: f64) -> (f64, f64);

    /// Iterates must stay below this level by the touchdown guard.
    fn touchdown_level(&self) -> Option<f64> {
        None
    }

    /// Iterates must stay strictly above this level.
    fn lower_level(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

impl SourceTerm for NonlinearityFamily {
    #[inline]
    fn value_slope(&self, t: f64) -> (f64, f64) {
        let d = self.eval_unchecked(t);
        (d.f, d.fp)
    }

    fn touchdown_level(&self) -> Option<f64> {
        self.upper_bound()
    }

    fn lower_level(&self) -> f64 {
        match self {
            NonlinearityFamily::Power { .. } => -1.0,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// `f ≡ c`; with amplitude `m = 1 + 4/N` and `c = 1` the solution is the
/// manufactured profile of [`crate::radial::manufactured_profile`] and
/// `λ = 8N(N+2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSource(pub f64);

impl SourceTerm for ConstantSource {
    fn value_slope(&self, _t: f64) -> (f64, f64) {
        (self.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    /// Tolerance on the scaled max-norm residual. The last Newton
    /// correction must also be below `0.1 √newton_tol` relative to the
    /// solution.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Initial amplitude step.
    pub amplitude_step: f64,
    pub max_amplitude_step: f64,
    /// Continuation gives up once a failing step has been halved below this.
    pub min_amplitude_step: f64,
    /// Cap on `Δm · f'(m)/f(m)`, the relative change of `f` at the center
    /// per step.
    pub max_log_step: f64,
    /// Line-search backtracking factor.
    pub damping: f64,
    /// Touchdown margin `ε_td`: MEMS iterates must keep `max u < 1 − ε_td`.
    pub mems_guard: f64,
    /// Steps converging in at most this many Newton iterations double the
    /// amplitude step.
    pub fast_iterations: usize,
    /// Stop this many points after the first fold; `None` marches to
    /// `m_max`.
    pub stop_after_fold: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 50,
            amplitude_step: 0.05,
            max_amplitude_step: 0.5,
            min_amplitude_step: 1e-7,
            max_log_step: 0.01,
            damping: 0.5,
            mems_guard: 1e-6,
            fast_iterations: 3,
            stop_after_fold: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let positive = [
            ("newton_tol", self.newton_tol),
            ("amplitude_step", self.amplitude_step),
            ("max_amplitude_step", self.max_amplitude_step),
            ("min_amplitude_step", self.min_amplitude_step),
            ("max_log_step", self.max_log_step),
            ("mems_guard", self.mems_guard),
        ];
        for (what, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::OutOfRange { what, value, range: "(0, ∞)" });
            }
        }
        if self.newton_tol < 100.0 * f64::EPSILON {
            return Err(Error::OutOfRange { what: "newton_tol", value: self.newton_tol, range: "[100 ε, ∞)" });
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::OutOfRange { what: "damping", value: self.damping, range: "(0, 1)" });
        }
        if self.max_newton == 0 {
            return Err(Error::InvalidParameter("max_newton must be at least 1"));
        }
        if self.min_amplitude_step > self.max_amplitude_step {
            return Err(Error::InvalidParameter("min_amplitude_step exceeds max_amplitude_step"));
        }
        Ok(())
    }
}

/// A converged point `(u, v = −Δu, λ)` of the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub grid: RadialGrid,
    /// `u(0)`.
    pub m: f64,
    pub lambda: f64,
    pub u: RadialField,
    pub v: RadialField,
    pub residual_norm: f64,
    pub newton_iters: usize,
}

impl BranchPoint {
    /// `λ = 0`, `u = v = 0`.
    pub fn trivial(grid: &RadialGrid) -> Self {
        Self {
            grid: *grid,
            m: 0.0,
            lambda: 0.0,
            u: RadialField::zeros(grid),
            v: RadialField::zeros(grid),
            residual_norm: 0.0,
            newton_iters: 0,
        }
    }

    pub fn u_center(&self) -> f64 {
        self.u.values[0]
    }

    pub fn max_u(&self) -> f64 {
        self.u.max()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("Newton iteration failed after {iterations} iterations, residual {residual:e}")]
    NewtonDiverged { iterations: usize, residual: f64, last: Box<BranchPoint> },
    #[error("touchdown: max u = {max_u} reached 1 − ε_td")]
    Touchdown { max_u: f64, last: Box<BranchPoint> },
}

impl SolveError {
    /// The last iterate, when the failure happened inside Newton.
    pub fn last_iterate(&self) -> Option<&BranchPoint> {
        match self {
            SolveError::Invalid(_) => None,
            SolveError::NewtonDiverged { last, .. } | SolveError::Touchdown { last, .. } => Some(last),
        }
    }
}

/// Sampled minimal branch, ordered by increasing amplitude.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// Largest sampled `λ`, refined by a parabola through the three samples
    /// bracketing the first interior maximum.
    pub lambda_star_estimate: f64,
    pub fold_detected: bool,
    /// Index of the sample with the largest `λ` at the first fold.
    pub fold_index: Option<usize>,
    /// Amplitude at the parabola's vertex.
    pub fold_amplitude: Option<f64>,
}

impl Branch {
    /// Number of leading points with `m` not beyond the interpolated fold.
    pub fn pre_fold_len(&self) -> usize {
        match self.fold_amplitude {
            Some(mf) => self.points.iter().take_while(|p| p.m <= mf).count(),
            None => self.points.len(),
        }
    }

    pub fn pre_fold(&self) -> &[BranchPoint] {
        &self.points[..self.pre_fold_len()]
    }

    pub fn post_fold(&self) -> &[BranchPoint] {
        &self.points[self.pre_fold_len()..]
    }

    fn push(&mut self, point: BranchPoint) {
        self.lambda_star_estimate = self.lambda_star_estimate.max(point.lambda);
        self.points.push(point);
        if self.fold_index.is_some() {
            return;
        }
        let k = self.points.len();
        if k < 3 {
            return;
        }
        let (a, b, c) = (&self.points[k - 3], &self.points[k - 2], &self.points[k - 1]);
        if b.lambda > a.lambda && b.lambda >= c.lambda {
            let (mf, lf) = parabola_vertex([a.m, b.m, c.m], [a.lambda, b.lambda, c.lambda]);
            self.fold_detected = true;
            self.fold_index = Some(k - 2);
            self.fold_amplitude = Some(mf);
            self.lambda_star_estimate = self.lambda_star_estimate.max(lf);
        }
    }
}

/// Vertex of the parabola through three points with a middle maximum,
/// clamped to the sampled interval.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    if !(a < 0.0) {
        return (x[1], y[1]);
    }
    let xv = (0.5 * (x[0] + x[1]) - d01 / (2.0 * a)).clamp(x[0], x[2]);
    let yv = y[0] + d01 * (xv - x[0]) + a * (xv - x[0]) * (xv - x[1]);
    (xv, yv.max(y[1]))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("continuation stopped at m = {at_m} after {} points: {source}", partial.points.len())]
pub struct ContinuationError {
    /// Everything computed before the failure.
    pub partial: Branch,
    pub at_m: f64,
    #[source]
    pub source: SolveError,
}

enum Admissibility {
    Ok,
    Touchdown(f64),
    BelowDomain,
}

/// The discrete augmented system for one amplitude.
struct System<'a, S: ?Sized> {
    source: &'a S,
    grid: RadialGrid,
    lap: BandMatrix,
    diag: Vec<f64>,
    m: f64,
    ceiling: Option<f64>,
}

impl<'a, S: SourceTerm + ?Sized> System<'a, S> {
    fn new(source: &'a S, grid: &RadialGrid, m: f64, guard: f64) -> Self {
        let lap = laplacian_matrix(grid).matrix;
        let diag = (0..lap.dim()).map(|i| lap.get(i, i).abs()).collect();
        Self { source, grid: *grid, lap, diag, m, ceiling: source.touchdown_level().map(|l| l - guard) }
    }

    fn nodes(&self) -> usize {
        self.lap.dim()
    }

    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.nodes();
        let u = (0..n).map(|k| x[2 * k]).collect();
        let v = (0..n).map(|k| x[2 * k + 1]).collect();
        (u, v, x[2 * n])
    }

    fn join(u: &[f64], v: &[f64], lambda: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * u.len() + 1);
        for (a, b) in u.iter().zip(v) {
            x.push(*a);
            x.push(*b);
        }
        x.push(lambda);
        x
    }

    fn admissible(&self, x: &[f64]) -> Admissibility {
        let n = self.nodes();
        let mut max_u = f64::NEG_INFINITY;
        for k in 0..n {
            let u = x[2 * k];
            if !u.is_finite() || u <= self.source.lower_level() {
                return Admissibility::BelowDomain;
            }
            max_u = max_u.max(u);
        }
        match self.ceiling {
            Some(c) if max_u >= c => Admissibility::Touchdown(max_u),
            _ => Admissibility::Ok,
        }
    }

    /// Residual vector `(−Lu − v, −Lv − λ f(u))` interleaved, then
    /// `u_0 − m`.
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.nodes();
        let (u, v, lambda) = self.split(x);
        let lu = self.lap.matvec(&u);
        let lv = self.lap.matvec(&v);
        let mut r = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            r.push(-lu[k] - v[k]);
            r.push(-lv[k] - lambda * self.source.value_slope(u[k]).0);
        }
        r.push(u[0] - self.m);
        r
    }

    /// `max(‖δu‖∞/max(1,‖u‖∞), ‖δv‖∞/max(1,‖v‖∞), |δλ|/max(1,λ))`.
    fn relative_size(&self, x: &[f64], delta: &[f64]) -> f64 {
        let n = self.nodes();
        let (mut su, mut sv, mut du, mut dv) = (1.0f64, 1.0f64, 0.0f64, 0.0f64);
        for k in 0..n {
            su = su.max(x[2 * k].abs());
            sv = sv.max(x[2 * k + 1].abs());
            du = du.max(delta[2 * k].abs());
            dv = dv.max(delta[2 * k + 1].abs());
        }
        (du / su).max(dv / sv).max(delta[2 * n].abs() / x[2 * n].abs().max(1.0))
    }

    /// Row-scaled residual: each equation divided by its diagonal
    /// coefficient and by the size of the unknown it determines.
    fn norm(&self, x: &[f64], r: &[f64]) -> f64 {
        let n = self.nodes();
        let (mut su, mut sv) = (1.0f64, 1.0f64);
        for k in 0..n {
            su = su.max(x[2 * k].abs());
            sv = sv.max(x[2 * k + 1].abs());
        }
        if r.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let mut worst = r[2 * n].abs() / self.m.abs().max(1.0);
        for k in 0..n {
            worst = worst.max(r[2 * k].abs() / (self.diag[k] * su));
            worst = worst.max(r[2 * k + 1].abs() / (self.diag[k] * sv));
        }
        worst
    }

    /// Newton correction `δ` with `J δ = −r`.
    fn step(&self, x: &[f64], r: &[f64]) -> Option<Vec<f64>> {
        let n = self.nodes();
        let lambda = x[2 * n];
        let mut a = BandMatrix::zeros(2 * n, 2, 2);
        let mut border = vec![0.0; 2 * n];
        for k in 0..n {
            let (iu, iv) = (2 * k, 2 * k + 1);
            for j in k.saturating_sub(1)..(k + 2).min(n) {
                let c = -self.lap.get(k, j);
                a.set(iu, 2 * j, c);
                a.set(iv, 2 * j + 1, c);
            }
            a.set(iu, iv, -1.0);
            let (f, fp) = self.source.value_slope(x[iu]);
            a.set(iv, iu, -lambda * fp);
            border[iv] = -f;
        }
        let lu = a.factor().ok()?;
        let y = lu.solve(&r[..2 * n]);
        let z = lu.solve(&border);
        if z[0] == 0.0 {
            return None;
        }
        let dlambda = (r[2 * n] - y[0]) / z[0];
        let mut delta: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| -yi - dlambda * zi).collect();
        delta.push(dlambda);
        if delta.iter().all(|d| d.is_finite()) {
            Some(delta)
        } else {
            None
        }
    }

    fn point(&self, x: &[f64], residual_norm: f64, newton_iters: usize) -> BranchPoint {
        let (u, v, lambda) = self.split(x);
        BranchPoint {
            grid: self.grid,
            m: self.m,
            lambda,
            u: RadialField::from_unknowns(&self.grid, &u),
            v: RadialField::from_unknowns(&self.grid, &v),
            residual_norm,
            newton_iters,
        }
    }

    /// `u = m φ` with `φ` the normalized Navier profile, `v = −L u` and the
    /// least-squares `λ` for `−Lv = λ f(u)`.
    fn initial_guess(&self) -> Vec<f64> {
        let nd = self.grid.dim as f64;
        let n = self.nodes();
        let u: Vec<f64> = (0..n)
            .map(|k| {
                let s = 1.0 - self.grid.node(k) * self.grid.node(k);
                self.m * (s * s + 4.0 / nd * s) / (1.0 + 4.0 / nd)
            })
            .collect();
        let v: Vec<f64> = self.lap.matvec(&u).iter().map(|x| -x).collect();
        let lv = self.lap.matvec(&v);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..n {
            let f = self.source.value_slope(u[k]).0;
            num += -lv[k] * f;
            den += f * f;
        }
        let lambda = if den > 0.0 { num / den } else { 0.0 };
        Self::join(&u, &v, lambda)
    }
}

/// Solves the augmented system at amplitude `m` by damped Newton, starting
/// from `guess` (or from a scaled profile).
pub fn solve_at_amplitude<S: SourceTerm + ?Sized>(
    source: &S,
    grid: &RadialGrid,
    m: f64,
    guess: Option<&BranchPoint>,
    config: &SolverConfig,
) -> Result<BranchPoint, SolveError> {
    config.validate()?;
    if !grid.is_ball() {
        return Err(Error::InvalidParameter("amplitude continuation is defined on the ball").into());
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::OutOfRange { what: "amplitude m", value: m, range: "(0, ∞)" }.into());
    }
    if let Some(level) = source.touchdown_level() {
        if !(m < level - config.mems_guard) {
            return Err(Error::OutOfRange { what: "amplitude m", value: m, range: "(0, 1 − ε_td)" }.into());
        }
    }
    let sys = System::new(source, grid, m, config.mems_guard);
    let mut x = match guess {
        Some(g) => {
            if g.grid != *grid {
                return Err(Error::InvalidParameter("guess lives on a different grid").into());
            }
            System::<S>::join(g.u.unknowns(grid), g.v.unknowns(grid), g.lambda)
        }
        None => sys.initial_guess(),
    };
    if let Admissibility::Touchdown(max_u) = sys.admissible(&x) {
        return Err(SolveError::Touchdown { max_u, last: Box::new(sys.point(&x, f64::INFINITY, 0)) });
    }
    let mut r = sys.residual(&x);
    let mut res = sys.norm(&x, &r);
    // The row-scaled residual weakens like h² under refinement, so a point is
    // only accepted after a Newton correction of relative size `step_tol`.
    let step_tol = 0.1 * sqrt(config.newton_tol);
    let mut last_step = f64::INFINITY;
    for iter in 0..=config.max_newton {
        if res <= config.newton_tol && last_step <= step_tol {
            let point = sys.point(&x, res, iter);
            if point.lambda > 0.0 {
                return Ok(point);
            }
            return Err(SolveError::NewtonDiverged { iterations: iter, residual: res, last: Box::new(point) });
        }
        if iter == config.max_newton {
            break;
        }
        let Some(delta) = sys.step(&x, &r) else {
            return Err(SolveError::NewtonDiverged { iterations: iter, residual: res, last: Box::new(sys.point(&x, res, iter)) });
        };
        let mut t = 1.0;
        let mut hit_touchdown = None;
        loop {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            match sys.admissible(&trial) {
                Admissibility::Ok => {
                    let r_trial = sys.residual(&trial);
                    let res_trial = sys.norm(&trial, &r_trial);
                    if res_trial <= (1.0 - 1e-4 * t) * res || res_trial <= config.newton_tol {
                        last_step = t * sys.relative_size(&x, &delta);
                        x = trial;
                        r = r_trial;
                        res = res_trial;
                        break;
                    }
                }
                Admissibility::Touchdown(max_u) => hit_touchdown = Some(max_u),
                Admissibility::BelowDomain => {}
            }
            t *= config.damping;
            if t < 1e-8 {
                let last = Box::new(sys.point(&x, res, iter + 1));
                return Err(match hit_touchdown {
                    Some(max_u) => SolveError::Touchdown { max_u, last },
                    None => SolveError::NewtonDiverged { iterations: iter + 1, residual: res, last },
                });
            }
        }
    }
    Err(SolveError::NewtonDiverged {
        iterations: config.max_newton,
        residual: res,
        last: Box::new(sys.point(&x, res, config.max_newton)),
    })
}

/// Secant predictor from the last two points, or a rescaling of the only
/// point.
fn predict(points: &[BranchPoint], m: f64) -> Option<BranchPoint> {
    match points {
        [] => None,
        [p] => {
            let s = m / p.m;
            let mut g = p.clone();
            g.u = p.u.map(|x| s * x);
            g.v = p.v.map(|x| s * x);
            g.lambda *= s;
            Some(g)
        }
        [.., a, b] => {
            let s = (m - b.m) / (b.m - a.m);
            let lerp = |x: &RadialField, y: &RadialField| RadialField {
                values: x.values.iter().zip(&y.values).map(|(p, q)| q + s * (q - p)).collect(),
            };
            let mut g = b.clone();
            g.u = lerp(&a.u, &b.u);
            g.v = lerp(&a.v, &b.v);
            g.lambda = b.lambda + s * (b.lambda - a.lambda);
            Some(g)
        }
    }
}

/// Marches the amplitude from a small value to `m_max`, warm-starting each
/// solve, halving the step on failure and doubling it after fast
/// convergence.
pub fn continue_branch<S: SourceTerm + ?Sized>(
    source: &S,
    grid: &RadialGrid,
    m_max: f64,
    config: &SolverConfig,
) -> Result<Branch, ContinuationError> {
    let fail = |partial: Branch, at_m, source: SolveError| ContinuationError { partial, at_m, source };
    if let Err(e) = config.validate() {
        return Err(fail(Branch::default(), 0.0, e.into()));
    }
    if !(m_max > 0.0 && m_max.is_finite()) {
        let e = Error::OutOfRange { what: "m_max", value: m_max, range: "(0, ∞)" };
        return Err(fail(Branch::default(), m_max, e.into()));
    }
    if let Some(level) = source.touchdown_level() {
        if !(m_max < level - config.mems_guard) {
            let e = Error::OutOfRange { what: "m_max", value: m_max, range: "(0, 1 − ε_td)" };
            return Err(fail(Branch::default(), m_max, e.into()));
        }
    }
    let cap = |m: f64| {
        let (f, fp) = source.value_slope(m);
        let geometric = if fp > 0.0 { config.max_log_step * f / fp } else { f64::INFINITY };
        config.max_amplitude_step.min(geometric)
    };

    let mut branch = Branch::default();
    let mut step = config.amplitude_step.min(config.max_amplitude_step);
    let mut after_fold = 0usize;
    loop {
        let last_m = branch.points.last().map_or(0.0, |p| p.m);
        let h = step.min(cap(last_m));
        let m = (last_m + h).min(m_max);
        let mut guess = predict(&branch.points, m);
        if let (Some(g), Some(level)) = (&guess, source.touchdown_level()) {
            if g.u.max() >= level - config.mems_guard {
                guess = branch.points.last().cloned();
            }
        }
        match solve_at_amplitude(source, grid, m, guess.as_ref(), config) {
            Ok(point) => {
                let fast = point.newton_iters <= config.fast_iterations;
                let had_fold = branch.fold_detected;
                branch.push(point);
                if had_fold || branch.fold_detected {
                    after_fold = branch.points.len() - 1 - branch.fold_index.unwrap_or(0);
                }
                if m >= m_max {
                    return Ok(branch);
                }
                if let Some(limit) = config.stop_after_fold {
                    if branch.fold_detected && after_fold >= limit {
                        return Ok(branch);
                    }
                }
                step = if fast { (2.0 * h).min(config.max_amplitude_step) } else { h };
            }
            Err(e) => {
                if matches!(e, SolveError::Invalid(_)) {
                    return Err(fail(branch, m, e));
                }
                step = 0.5 * h;
                if step < config.min_amplitude_step {
                    return Err(fail(branch, m, e));
                }
            }
        }
    }
}

/// `(min u, min v)` over the grid.
pub fn pointwise_positivity_check(point: &BranchPoint) -> (f64, f64) {
    (point.u.min(), point.v.min())
}
