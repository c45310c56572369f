//! Implicit finite differences for `v_t = (v^m)_xx + v - v^m` on a bounded
//! interval.
//!
//! Each step solves for `u = v^m` with Newton's method. Backward Euler reads
//! `u^p - v_old - dt N(u) = 0` with `N(u) = D2 u + u^p - u`; the other schemes
//! change only the constant part and the factor in front of `N`. The Jacobian
//! is tridiagonal with a positive diagonal and negative off-diagonals.

use alloc::vec;
use alloc::vec::Vec;

use crate::barriers::{Barriers, Family};
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::grid::{Field, Grid1D};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    BackwardEuler,
    CrankNicolson,
    /// Two-step backward differentiation; the first step is backward Euler.
    Bdf2,
}

/// How the two end nodes are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// `v = f` at both ends, `f` the family's lower barrier.
    DirichletFromBarrier(Family),
    /// `(v^m)_x = (f^m)_x` at both ends.
    NeumannFromBarrier(Family),
    /// End values frozen at those of the initial field.
    FrozenDirichlet,
    /// `(v^m)_x = 0` at both ends.
    ZeroFlux,
}

impl BoundaryMode {
    fn family(self) -> Option<Family> {
        match self {
            BoundaryMode::DirichletFromBarrier(f) | BoundaryMode::NeumannFromBarrier(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Max-norm of the Newton residual, in units of `v`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Steps between stored snapshots; the last step is always stored.
    pub record_every: usize,
    /// Family whose barriers bound the run, checked at every snapshot.
    pub sandwich: Option<Family>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::BackwardEuler,
            newton_tol: 1e-12,
            max_newton: 50,
            record_every: 500,
            sandwich: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStat {
    pub iterations: u32,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxSample {
    pub tau: f64,
    pub x0: f64,
    pub value: f64,
}

/// `min_x (v - f_lower)` and `min_x (f_upper - v)` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichMargin {
    pub tau: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub snapshots: Vec<Field>,
    /// One entry per step with an interior maximum.
    pub max_track: Vec<MaxSample>,
    pub sandwich_margins: Vec<SandwichMargin>,
    pub newton_stats: Vec<NewtonStat>,
}

impl EvolutionResult {
    pub fn last(&self) -> &Field {
        self.snapshots
            .last()
            .expect("at least the initial snapshot")
    }

    /// Snapshot whose time is closest to `tau`.
    pub fn snapshot_near(&self, tau: f64) -> &Field {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.tau - tau).abs().total_cmp(&(b.tau - tau).abs()))
            .expect("at least the initial snapshot")
    }

    pub fn worst_sandwich(&self) -> f64 {
        self.sandwich_margins
            .iter()
            .map(|s| s.lower.min(s.upper))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy)]
enum Closure {
    Dirichlet(f64, f64),
    /// Prescribed `(v^m)_x` at the left and right ends.
    Flux(f64, f64),
}

#[derive(Debug, Clone)]
pub struct Solver<'a> {
    exp: Exponents,
    config: SolverConfig,
    mode: BoundaryMode,
    barriers: Option<&'a Barriers>,
}

struct Workspace {
    u: Vec<f64>,
    rhs: Vec<f64>,
    res: Vec<f64>,
    diag: Vec<f64>,
    sub: Vec<f64>,
    sup: Vec<f64>,
    delta: Vec<f64>,
    scratch: Vec<f64>,
    trial: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            rhs: vec![0.0; n],
            res: vec![0.0; n],
            diag: vec![0.0; n],
            sub: vec![0.0; n],
            sup: vec![0.0; n],
            delta: vec![0.0; n],
            scratch: vec![0.0; n],
            trial: vec![0.0; n],
        }
    }
}

impl<'a> Solver<'a> {
    pub fn new(
        exp: Exponents,
        config: SolverConfig,
        mode: BoundaryMode,
        barriers: Option<&'a Barriers>,
    ) -> Result<Self> {
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(Error::param("dt", "dt > 0", config.dt));
        }
        if !(config.newton_tol > 0.0) {
            return Err(Error::param(
                "newton_tol",
                "newton_tol > 0",
                config.newton_tol,
            ));
        }
        if config.max_newton == 0 {
            return Err(Error::param("max_newton", "max_newton >= 1", 0.0));
        }
        if config.record_every == 0 {
            return Err(Error::param("record_every", "record_every >= 1", 0.0));
        }
        let needs_barriers = mode.family().is_some() || config.sandwich.is_some();
        if needs_barriers && barriers.is_none() {
            return Err(Error::param(
                "boundary",
                "barrier-driven modes need barrier parameters",
                f64::NAN,
            ));
        }
        Ok(Self {
            exp,
            config,
            mode,
            barriers,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn closure(&self, grid: &Grid1D, tau: f64, frozen: (f64, f64)) -> Closure {
        let (x0, x1) = (grid.x_min(), grid.x_max());
        match (self.mode, self.barriers) {
            (BoundaryMode::DirichletFromBarrier(fam), Some(b)) => Closure::Dirichlet(
                self.exp.pow_m(b.lower(fam, x0, tau)),
                self.exp.pow_m(b.lower(fam, x1, tau)),
            ),
            (BoundaryMode::NeumannFromBarrier(fam), Some(b)) => {
                Closure::Flux(b.lower_flux(fam, x0, tau), b.lower_flux(fam, x1, tau))
            }
            (BoundaryMode::ZeroFlux, _) => Closure::Flux(0.0, 0.0),
            _ => Closure::Dirichlet(frozen.0, frozen.1),
        }
    }

    /// One step from `field` to `field.tau + dt`.
    pub fn step(&self, field: &Field, dt: f64) -> Result<(Field, NewtonStat)> {
        if let Some(b) = self.barriers {
            b.check_tau(field.tau + dt)?;
        }
        let n = field.grid.nx();
        let mut ws = Workspace::new(n);
        let u_old: Vec<f64> = field.values.iter().map(|&v| self.exp.pow_m(v)).collect();
        let frozen = (u_old[0], u_old[n - 1]);
        let stat = self.advance(
            &mut ws,
            &field.grid,
            &field.values,
            None,
            &u_old,
            field.tau,
            dt,
            frozen,
        )?;
        let values: Vec<f64> = ws.u.iter().map(|&u| self.exp.pow_p(u)).collect();
        Ok((Field::new(field.grid, field.tau + dt, values)?, stat))
    }

    /// Integrates `initial` up to `tau_end`, recording diagnostics.
    pub fn evolve(&self, initial: Field, tau_end: f64) -> Result<EvolutionResult> {
        let tau0 = initial.tau;
        if !(tau_end > tau0) {
            return Err(Error::param("tau_end", "tau_end > initial tau", tau_end));
        }
        if let Some(b) = self.barriers {
            b.check_tau(tau_end)?;
        }
        let steps = math::ceil((tau_end - tau0) / self.config.dt - 1e-9).max(1.0) as usize;
        let dt = (tau_end - tau0) / steps as f64;
        let grid = initial.grid;
        let n = grid.nx();
        let mut ws = Workspace::new(n);
        let mut v = initial.values.clone();
        let mut v_prev: Option<Vec<f64>> = None;
        let mut u_old: Vec<f64> = v.iter().map(|&v| self.exp.pow_m(v)).collect();
        let frozen = (u_old[0], u_old[n - 1]);

        let mut out = EvolutionResult {
            snapshots: Vec::with_capacity(steps / self.config.record_every + 2),
            max_track: Vec::with_capacity(steps + 1),
            sandwich_margins: Vec::new(),
            newton_stats: Vec::with_capacity(steps),
        };
        self.record(&mut out, &initial, true);
        for s in 1..=steps {
            let tau_prev = tau0 + (s - 1) as f64 * dt;
            let tau = tau0 + s as f64 * dt;
            let stat = self
                .advance(
                    &mut ws,
                    &grid,
                    &v,
                    v_prev.as_deref(),
                    &u_old,
                    tau_prev,
                    dt,
                    frozen,
                )
                .map_err(|e| match e {
                    Error::NewtonDiverged {
                        residual,
                        iterations,
                        ..
                    } => Error::NewtonDiverged {
                        tau,
                        residual,
                        iterations,
                    },
                    Error::NonPositive { index, .. } => Error::NonPositive { tau, index },
                    other => other,
                })?;
            out.newton_stats.push(stat);
            u_old.copy_from_slice(&ws.u);
            if self.config.scheme == Scheme::Bdf2 {
                let prev = v_prev.get_or_insert_with(|| vec![0.0; n]);
                prev.copy_from_slice(&v);
            }
            for (vi, &ui) in v.iter_mut().zip(&ws.u) {
                *vi = self.exp.pow_p(ui);
            }
            let keep = s % self.config.record_every == 0 || s == steps;
            if let Ok((x0, value)) = max_of(&grid, &v) {
                out.max_track.push(MaxSample { tau, x0, value });
            }
            if keep {
                let field = Field::new(grid, tau, v.clone())?;
                self.record(&mut out, &field, false);
            }
        }
        Ok(out)
    }

    fn record(&self, out: &mut EvolutionResult, field: &Field, initial: bool) {
        if initial {
            if let Ok((x0, value)) = max_of(&field.grid, &field.values) {
                out.max_track.push(MaxSample {
                    tau: field.tau,
                    x0,
                    value,
                });
            }
        }
        if let (Some(fam), Some(b)) = (self.config.sandwich, self.barriers) {
            let (mut lo, mut hi) = (f64::INFINITY, f64::INFINITY);
            for (i, &v) in field.values.iter().enumerate() {
                let x = field.grid.x(i);
                lo = lo.min(v - b.lower(fam, x, field.tau));
                hi = hi.min(b.upper(fam, x, field.tau) - v);
            }
            out.sandwich_margins.push(SandwichMargin {
                tau: field.tau,
                lower: lo,
                upper: hi,
            });
        }
        out.snapshots.push(field.clone());
    }

    /// Newton solve for `ws.u` at `tau + dt` given `v_old`, `u_old` at `tau`
    /// and, for the two-step scheme, `v_prev` at `tau - dt`.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        ws: &mut Workspace,
        grid: &Grid1D,
        v_old: &[f64],
        v_prev: Option<&[f64]>,
        u_old: &[f64],
        tau: f64,
        dt: f64,
        frozen: (f64, f64),
    ) -> Result<NewtonStat> {
        let n = v_old.len();
        let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
        let exp = &self.exp;
        let new_closure = self.closure(grid, tau + dt, frozen);

        // The step solves u^p - rhs - c N(u) = 0.
        let c = match (self.config.scheme, v_prev) {
            (Scheme::CrankNicolson, _) => {
                let old_closure = self.closure(grid, tau, frozen);
                for i in 0..n {
                    let lap = laplacian(u_old, i, grid.dx(), old_closure);
                    ws.rhs[i] = v_old[i] + 0.5 * dt * (lap + v_old[i] - u_old[i]);
                }
                0.5 * dt
            }
            (Scheme::Bdf2, Some(prev)) => {
                for i in 0..n {
                    ws.rhs[i] = (4.0 * v_old[i] - prev[i]) / 3.0;
                }
                2.0 * dt / 3.0
            }
            _ => {
                ws.rhs.copy_from_slice(v_old);
                dt
            }
        };
        ws.u.copy_from_slice(u_old);
        let dirichlet = match new_closure {
            Closure::Dirichlet(l, r) => {
                ws.u[0] = l;
                ws.u[n - 1] = r;
                true
            }
            Closure::Flux(..) => false,
        };
        let mut residual = f64::INFINITY;
        for it in 0..=self.config.max_newton {
            residual = 0.0;
            for i in 0..n {
                let u = ws.u[i];
                let upm1 = exp.pow_p_minus_1(u);
                let up = upm1 * u;
                if dirichlet && (i == 0 || i == n - 1) {
                    ws.res[i] = 0.0;
                    ws.diag[i] = 1.0;
                    ws.sub[i] = 0.0;
                    ws.sup[i] = 0.0;
                    continue;
                }
                let lap = laplacian(&ws.u, i, grid.dx(), new_closure);
                let f = up - ws.rhs[i] - c * (lap + up - u);
                ws.res[i] = f;
                residual = residual.max(f.abs());
                ws.diag[i] = exp.p() * upm1 * (1.0 - c) + c * (2.0 * inv_dx2 + 1.0);
                let (lo, hi) = if i == 0 {
                    (0.0, -2.0 * c * inv_dx2)
                } else if i == n - 1 {
                    (-2.0 * c * inv_dx2, 0.0)
                } else {
                    (-c * inv_dx2, -c * inv_dx2)
                };
                ws.sub[i] = lo;
                ws.sup[i] = hi;
            }
            if residual <= self.config.newton_tol {
                return Ok(NewtonStat {
                    iterations: it as u32,
                    residual,
                });
            }
            if it == self.config.max_newton {
                break;
            }
            for r in ws.res.iter_mut() {
                *r = -*r;
            }
            thomas(
                &ws.sub,
                &ws.diag,
                &ws.sup,
                &ws.res,
                &mut ws.delta,
                &mut ws.scratch,
            );
            let mut scale = 1.0;
            loop {
                let mut ok = true;
                for i in 0..n {
                    let t = ws.u[i] + scale * ws.delta[i];
                    ws.trial[i] = t;
                    ok &= t > 0.0;
                }
                if ok {
                    break;
                }
                scale *= 0.5;
                if scale < 1e-12 {
                    let index = ws.trial.iter().position(|&t| t <= 0.0).unwrap_or(0);
                    return Err(Error::NonPositive {
                        tau: tau + dt,
                        index,
                    });
                }
            }
            core::mem::swap(&mut ws.u, &mut ws.trial);
        }
        Err(Error::NewtonDiverged {
            tau: tau + dt,
            residual,
            iterations: self.config.max_newton,
        })
    }
}

/// Second difference with ghost nodes at the ends for flux closures.
#[inline]
fn laplacian(u: &[f64], i: usize, dx: f64, closure: Closure) -> f64 {
    let n = u.len();
    let inv = 1.0 / (dx * dx);
    if i > 0 && i < n - 1 {
        return (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
    }
    match closure {
        // End rows are pinned; their value is never used.
        Closure::Dirichlet(..) => 0.0,
        Closure::Flux(gl, gr) => {
            if i == 0 {
                (2.0 * u[1] - 2.0 * u[0] - 2.0 * dx * gl) * inv
            } else {
                (2.0 * u[n - 2] - 2.0 * u[n - 1] + 2.0 * dx * gr) * inv
            }
        }
    }
}

/// Tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], x: &mut [f64], c: &mut [f64]) {
    let n = diag.len();
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i + 1] * x[i + 1];
    }
}

fn max_of(grid: &Grid1D, v: &[f64]) -> Result<(f64, f64)> {
    let n = v.len();
    let mut k = 0;
    for (i, &vi) in v.iter().enumerate() {
        if vi > v[k] {
            k = i;
        }
    }
    if k == 0 || k == n - 1 {
        return Err(Error::BoundaryMaximum { index: k });
    }
    let (a, b, c) = (v[k - 1], v[k], v[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom < 0.0 {
        0.5 * (a - c) / denom
    } else {
        0.0
    };
    Ok((grid.x(k) + shift * grid.dx(), b - 0.25 * (a - c) * shift))
}

/// Sub-grid location and value of the maximum by a parabola through the
/// discrete argmax and its neighbours.
pub fn max_tracker(field: &Field) -> Result<(f64, f64)> {
    max_of(&field.grid, &field.values)
}

/// Trapezoid-rule `int |a - b| dx`.
pub fn l1_distance(a: &Field, b: &Field) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let n = a.values.len();
    let d = |i: usize| (a.values[i] - b.values[i]).abs();
    let inner: f64 = (1..n - 1).map(d).sum();
    Ok(a.grid.dx() * (inner + 0.5 * (d(0) + d(n - 1))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    /// Largest `distance(tau) / bound(tau)` over recorded times.
    pub worst_ratio: f64,
    pub tau_at_worst: f64,
    pub holds: bool,
}

/// Checks `|A - B|_1(tau) <= e^((1 - m M^(m-1))(tau - tau_1)) |A - B|_1(tau_1) (1 + eps)`
/// on matching snapshots.
pub fn contraction_check(
    a: &[Field],
    b: &[Field],
    bound: f64,
    exp: &Exponents,
    eps: f64,
) -> Result<ContractionReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::GridMismatch);
    }
    if !(bound > 0.0) {
        return Err(Error::param("M", "M > 0", bound));
    }
    let rate = 1.0 - exp.m() * math::powf(bound, exp.m() - 1.0);
    let d0 = l1_distance(&a[0], &b[0])?;
    let tau1 = a[0].tau;
    let mut worst = ContractionReport {
        worst_ratio: 0.0,
        tau_at_worst: tau1,
        holds: true,
    };
    for (fa, fb) in a.iter().zip(b) {
        if (fa.tau - fb.tau).abs() > 1e-9 {
            return Err(Error::GridMismatch);
        }
        let d = l1_distance(fa, fb)?;
        let allowed = math::exp(rate * (fa.tau - tau1)) * d0;
        let ratio = if allowed > 0.0 {
            d / allowed
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > worst.worst_ratio {
            worst.worst_ratio = ratio;
            worst.tau_at_worst = fa.tau;
        }
    }
    worst.holds = worst.worst_ratio <= 1.0 + eps;
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::xi_k;

    fn e3() -> Exponents {
        Exponents::new(3).unwrap()
    }

    #[test]
    fn tridiagonal_solve() {
        let sub = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [-1.0, -1.0, -1.0, 0.0];
        let x_true = [1.0, -2.0, 3.0, 0.5];
        let mut rhs = [0.0; 4];
        for i in 0..4 {
            rhs[i] = diag[i] * x_true[i]
                + if i > 0 { sub[i] * x_true[i - 1] } else { 0.0 }
                + if i < 3 { sup[i] * x_true[i + 1] } else { 0.0 };
        }
        let (mut x, mut c) = ([0.0; 4], [0.0; 4]);
        thomas(&sub, &diag, &sup, &rhs, &mut x, &mut c);
        for i in 0..4 {
            assert!((x[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn one_is_a_fixed_point() {
        let g = Grid1D::new(-1.0, 1.0, 21).unwrap();
        let f = Field::from_fn(g, -5.0, |_| 1.0).unwrap();
        let s = Solver::new(
            e3(),
            SolverConfig::default(),
            BoundaryMode::FrozenDirichlet,
            None,
        )
        .unwrap();
        let (next, stat) = s.step(&f, 1e-3).unwrap();
        assert!(next.values.iter().all(|&v| v == 1.0));
        assert_eq!(stat.iterations, 0);
    }

    #[test]
    fn constant_solution_one_step() {
        let e = e3();
        let (k, tau, dt) = (0.1, -10.0, 1e-3);
        let g = Grid1D::new(-1.0, 1.0, 21).unwrap();
        let xi0 = xi_k(k, tau, &e).unwrap();
        let f = Field::from_fn(g, tau, |_| xi0).unwrap();
        let s = Solver::new(e, SolverConfig::default(), BoundaryMode::ZeroFlux, None).unwrap();
        let (next, _) = s.step(&f, dt).unwrap();
        let want = xi_k(k, tau + dt, &e).unwrap();
        assert!(next.values.iter().all(|&v| (v - want).abs() < 1e-8));
    }

    #[test]
    fn max_tracker_symmetric_and_boundary() {
        let g = Grid1D::new(-2.0, 2.0, 401).unwrap();
        let c = 0.123;
        let f = Field::from_fn(g, 0.0, |x| 5.0 - (x - c) * (x - c)).unwrap();
        let (x0, vmax) = max_tracker(&f).unwrap();
        assert!((x0 - c).abs() < 1e-9 && (vmax - 5.0).abs() < 1e-12);
        let flat = Field::from_fn(g, 0.0, |_| 0.5).unwrap();
        assert!(matches!(
            max_tracker(&flat),
            Err(Error::BoundaryMaximum { .. })
        ));
    }

    #[test]
    fn l1_basics() {
        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        let a = Field::from_fn(g, 0.0, |x| 1.0 + x).unwrap();
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        let b = Field::from_fn(g, 0.0, |x| 1.0 + 2.0 * x).unwrap();
        assert!((l1_distance(&a, &b).unwrap() - 0.5).abs() < 1e-14);
        let other = Field::from_fn(Grid1D::new(0.0, 2.0, 101).unwrap(), 0.0, |_| 1.0).unwrap();
        assert!(l1_distance(&a, &other).is_err());
    }
}
