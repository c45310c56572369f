//! Traveling waves `v(x - lambda t)` of the rescaled equation, normalised by
//! `v(0) = 1/2`, and the radial self-similar profile they come from.
//!
//! The wave ODE `(v^m)'' + lambda v' + v - v^m = 0` is integrated in
//! `u = v^m`, where it reads `u'' + lambda p u^(p-1) u' + u^p - u = 0`. The
//! origin is a saddle whose unstable branch is the wave, so we start on it
//! and march forward until the deficit `1 - v` is tiny.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exponents::{gamma_roots, Exponents};
use crate::fit::fit_line;
use crate::math;
use crate::ode::rk4_step;
use crate::transforms;

/// Storage stops once `1 - v` drops below this; tails take over beyond.
const DEFICIT_FLOOR: f64 = 1e-7;
/// Starting amplitude of `u` on the unstable branch.
const SEED: f64 = 1e-8;
/// Smallest `v` we are willing to store.
const VALUE_FLOOR: f64 = 1e-300;

/// Value, log-value, deficit and scaled derivatives of a wave at one point.
///
/// Derivatives are divided by the value so far tails neither underflow nor
/// lose precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveJet {
    pub value: f64,
    pub ln_value: f64,
    pub deficit: f64,
    /// `v' / v`
    pub slope_ratio: f64,
    /// `v'' / v`
    pub curvature_ratio: f64,
}

impl WaveJet {
    pub fn slope(&self) -> f64 {
        self.slope_ratio * self.value
    }

    pub fn curvature(&self) -> f64 {
        self.curvature_ratio * self.value
    }
}

/// Least-squares tail constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// `C` in `1 - v ~ C e^(-gamma x)`.
    pub c_lambda: f64,
    pub gamma_fit: f64,
    /// `A` in `v ~ A e^(slope x)` as `x -> -inf`.
    pub left_amp: f64,
    pub left_slope: f64,
}

/// A sampled monotone wave on the grid `x_i = (first + i) dx`.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    lambda: f64,
    exp: Exponents,
    gamma: f64,
    dx: f64,
    first: i64,
    v: Vec<f64>,
    dv: Vec<f64>,
    d2v: Vec<f64>,
    ln_left_amp: f64,
    right_amp: f64,
    tail_fit: Option<TailFit>,
}

/// Solves for the wave of speed `lambda` on `domain = (lo, hi)` with spacing `dx`.
///
/// Nodes right of the point where `1 - v < 1e-7` are not stored; the
/// exponential tail is more accurate than `1 - v` in doubles beyond it.
pub fn solve_wave(
    lambda: f64,
    exp: &Exponents,
    domain: (f64, f64),
    dx: f64,
) -> Result<WaveProfile> {
    let gamma = gamma_roots(lambda, exp)?.gamma_small;
    let (lo, hi) = domain;
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::param("dx", "dx > 0", dx));
    }
    if !(lo < 0.0) {
        return Err(Error::param("domain.lo", "domain must contain 0", lo));
    }
    if !(hi > 0.0) {
        return Err(Error::param("domain.hi", "domain must contain 0", hi));
    }
    let p = exp.p();
    let rhs = |_x: f64, y: &[f64; 2]| -> [f64; 2] {
        let (u, w) = (y[0], y[1]);
        let upm1 = exp.pow_p_minus_1(u);
        [w, u - upm1 * u - lambda * p * upm1 * w]
    };
    // Second-order point on the unstable branch: u = e + b e^p.
    let b = -(1.0 + lambda * p) / (p * p - 1.0);
    let seed = |eps: f64| [eps + b * exp.pow_p(eps), eps + p * b * exp.pow_p(eps)];
    let u_half = math::powf(0.5, exp.m());

    // Pass 1: find where the branch seeded at x = 0 crosses v = 1/2.
    let mut y = seed(SEED);
    let mut x = 0.0;
    let max_steps = (1e4 / dx) as usize;
    let mut crossing = None;
    for _ in 0..max_steps {
        let next = rk4_step(&rhs, x, &y, dx);
        check_state(&next, x + dx)?;
        if next[0] >= u_half {
            let t = hermite_root(y[0], y[1], next[0], next[1], dx, u_half);
            crossing = Some(x + t * dx);
            break;
        }
        y = next;
        x += dx;
    }
    let x_c = crossing.ok_or(Error::ShootingFailed {
        reason: "never reached v = 1/2",
        x,
    })?;

    // Pass 2: restart so that the crossing lands on x = 0, a grid node.
    let i_lo = math::ceil(lo / dx) as i64;
    let i_hi = math::floor(hi / dx) as i64;
    let i_start = i_lo.min(math::floor(-x_c / dx) as i64);
    let eps = SEED * math::exp(i_start as f64 * dx + x_c);
    if !(exp.pow_p(eps) > VALUE_FLOOR) {
        return Err(Error::param(
            "domain.lo",
            "v at the left end must stay above 1e-300",
            lo,
        ));
    }
    let mut y = seed(eps);
    let mut i = i_start;
    let cap = (i_hi - i_lo + 1).max(0) as usize;
    let (mut vs, mut dvs, mut d2vs) = (
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
    );
    loop {
        if i >= i_lo {
            let (u, w) = (y[0], y[1]);
            let upm1 = exp.pow_p_minus_1(u);
            let v = upm1 * u;
            if 1.0 - v < DEFICIT_FLOOR {
                break;
            }
            let wp = u - v - lambda * p * upm1 * w;
            let upm2 = if u > 0.0 { upm1 / u } else { 0.0 };
            vs.push(v);
            dvs.push(p * upm1 * w);
            d2vs.push(p * (p - 1.0) * upm2 * w * w + p * upm1 * wp);
        }
        if i >= i_hi {
            break;
        }
        y = rk4_step(&rhs, i as f64 * dx, &y, dx);
        i += 1;
        check_state(&y, i as f64 * dx)?;
    }
    if vs.len() < 4 || (i_lo + vs.len() as i64) <= 0 {
        return Err(Error::ShootingFailed {
            reason: "domain too small to hold the profile around x = 0",
            x: hi,
        });
    }
    Ok(WaveProfile::assemble(
        lambda, *exp, gamma, dx, i_lo, vs, dvs, d2vs,
    ))
}

fn check_state(y: &[f64; 2], x: f64) -> Result<()> {
    if !(y[0].is_finite() && y[1].is_finite()) {
        return Err(Error::ShootingFailed {
            reason: "non-finite state",
            x,
        });
    }
    if y[0] <= 0.0 || y[0] >= 1.0 {
        return Err(Error::ShootingFailed {
            reason: "profile left (0, 1)",
            x,
        });
    }
    if y[1] <= 0.0 {
        return Err(Error::ShootingFailed {
            reason: "profile stopped increasing",
            x,
        });
    }
    Ok(())
}

/// Cubic Hermite basis on `[0, 1]` applied to values and scaled slopes.
#[inline]
fn hermite(y0: f64, m0: f64, y1: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * m1
}

#[inline]
fn hermite_slope(y0: f64, m0: f64, y1: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    (6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * m1
}

/// Fraction `t` in `[0, 1]` where the Hermite interpolant through
/// `(y0, dy0)`, `(y1, dy1)` over a step `h` hits `target`.
fn hermite_root(y0: f64, dy0: f64, y1: f64, dy1: f64, h: f64, target: f64) -> f64 {
    let (m0, m1) = (dy0 * h, dy1 * h);
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if hermite(y0, m0, y1, m1, mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// `v''/v` from the wave ODE given `ln v` and `l = v'/v`.
///
/// Written so that `1 - v^(1-m)` never cancels near `v = 1`.
#[inline]
fn curvature_ratio(exp: &Exponents, lambda: f64, ln_v: f64, l: f64) -> f64 {
    let m = exp.m();
    let a = (1.0 - m) * ln_v;
    let v_pow = math::exp(a);
    (-math::expm1(a) - lambda * l * v_pow - m * (m - 1.0) * l * l) / m
}

/// `ln v` from a value and its deficit, using whichever is accurate.
#[inline]
fn ln_from(v: f64, deficit: f64) -> f64 {
    if deficit < 0.5 {
        math::ln_one_minus(deficit)
    } else {
        math::ln(v)
    }
}

impl WaveProfile {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        lambda: f64,
        exp: Exponents,
        gamma: f64,
        dx: f64,
        first: i64,
        v: Vec<f64>,
        dv: Vec<f64>,
        d2v: Vec<f64>,
    ) -> Self {
        let x0 = first as f64 * dx;
        let xn = (first + v.len() as i64 - 1) as f64 * dx;
        let ln_left_amp = math::ln(v[0]) - exp.p() * x0;
        let right_amp = (1.0 - v[v.len() - 1]) * math::exp(gamma * xn);
        let mut out = Self {
            lambda,
            exp,
            gamma,
            dx,
            first,
            v,
            dv,
            d2v,
            ln_left_amp,
            right_amp,
            tail_fit: None,
        };
        out.tail_fit = wave_tail_fit(&out).ok();
        out
    }

    /// Builds a profile from nodal values and slopes on `x_i = (first + i) dx`;
    /// second derivatives come from the ODE.
    pub fn from_nodes(
        lambda: f64,
        exp: &Exponents,
        dx: f64,
        first: i64,
        values: Vec<f64>,
        slopes: Vec<f64>,
    ) -> Result<Self> {
        let gamma = gamma_roots(lambda, exp)?.gamma_small;
        if values.len() < 4 || values.len() != slopes.len() {
            return Err(Error::InsufficientData {
                what: "wave nodes",
                samples: values.len().min(slopes.len()),
            });
        }
        if values.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::param("values", "0 < v < 1", f64::NAN));
        }
        let d2v = values
            .iter()
            .zip(&slopes)
            .map(|(&v, &dv)| {
                let ln_v = ln_from(v, 1.0 - v);
                v * curvature_ratio(exp, lambda, ln_v, dv / v)
            })
            .collect();
        Ok(Self::assemble(
            lambda, *exp, gamma, dx, first, values, slopes, d2v,
        ))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn exponents(&self) -> &Exponents {
        &self.exp
    }

    /// Exact slow decay rate used for the right tail.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.dx
    }

    /// Grid index of the first node; `x_0 = first * dx`.
    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.v.len()).map(|i| self.x(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn slopes(&self) -> &[f64] {
        &self.dv
    }

    pub fn tail_fit(&self) -> Option<&TailFit> {
        self.tail_fit.as_ref()
    }

    /// Covered interval `[x_first, x_last]`.
    pub fn span(&self) -> (f64, f64) {
        (self.x(0), self.x(self.v.len() - 1))
    }

    /// Full evaluation at `s`, including beyond the stored grid.
    pub fn jet(&self, s: f64) -> WaveJet {
        let (x0, xn) = self.span();
        let (ln_value, deficit, slope_ratio) = if s < x0 {
            let ln_v = self.ln_left_amp + self.exp.p() * s;
            (ln_v, -math::expm1(ln_v), self.exp.p())
        } else if s > xn {
            let d = self.right_amp * math::exp(-self.gamma * s);
            (math::ln_one_minus(d), d, self.gamma * d / (1.0 - d))
        } else {
            let pos = (s - x0) / self.dx;
            let i = (math::floor(pos) as usize).min(self.v.len() - 2);
            let t = pos - i as f64;
            let h = self.dx;
            let v = hermite(
                self.v[i],
                self.dv[i] * h,
                self.v[i + 1],
                self.dv[i + 1] * h,
                t,
            );
            let dv = hermite(
                self.dv[i],
                self.d2v[i] * h,
                self.dv[i + 1],
                self.d2v[i + 1] * h,
                t,
            );
            let d = 1.0 - v;
            (ln_from(v, d), d, dv / v)
        };
        let value = if deficit < 0.5 {
            1.0 - deficit
        } else {
            math::exp(ln_value)
        };
        WaveJet {
            value,
            ln_value,
            deficit,
            slope_ratio,
            curvature_ratio: curvature_ratio(&self.exp, self.lambda, ln_value, slope_ratio),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.jet(s).value
    }

    /// `1 - v(s)`, accurate deep in the right tail.
    pub fn deficit(&self, s: f64) -> f64 {
        self.jet(s).deficit
    }

    pub fn slope(&self, s: f64) -> f64 {
        self.jet(s).slope()
    }

    /// Max over interior nodes of the three-point residual of
    /// `(v^m)'' + lambda v' + v - v^m`.
    pub fn ode_residual(&self) -> f64 {
        let h = self.dx;
        let vm: Vec<f64> = self.v.iter().map(|&v| self.exp.pow_m(v)).collect();
        (1..self.v.len() - 1)
            .map(|i| {
                let lap = (vm[i + 1] - 2.0 * vm[i] + vm[i - 1]) / (h * h);
                let adv = self.lambda * (self.v[i + 1] - self.v[i - 1]) / (2.0 * h);
                (lap + adv + self.v[i] - vm[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Right-tail fit of `ln(1 - v)` on `{1e-6 <= 1 - v <= 1e-3}`.
/// Returns `(c, gamma)` with `1 - v ~ c e^(-gamma x)`.
pub fn fit_right_tail(xs: &[f64], vs: &[f64]) -> Result<(f64, f64)> {
    let (wx, wy): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(vs)
        .filter(|(_, &v)| (1e-6..=1e-3).contains(&(1.0 - v)))
        .map(|(&x, &v)| (x, math::ln(1.0 - v)))
        .unzip();
    if wx.len() < 10 {
        return Err(Error::InsufficientTail {
            side: "right",
            samples: wx.len(),
        });
    }
    let fit = fit_line(&wx, &wy).ok_or(Error::InsufficientTail {
        side: "right",
        samples: wx.len(),
    })?;
    Ok((math::exp(fit.intercept), -fit.slope))
}

/// Left-tail fit of `ln v` on `{1e-6 <= v <= 1e-3}`.
/// Returns `(amp, slope)` with `v ~ amp e^(slope x)`.
pub fn fit_left_tail(xs: &[f64], vs: &[f64]) -> Result<(f64, f64)> {
    let (wx, wy): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(vs)
        .filter(|(_, &v)| (1e-6..=1e-3).contains(&v))
        .map(|(&x, &v)| (x, math::ln(v)))
        .unzip();
    if wx.len() < 10 {
        return Err(Error::InsufficientTail {
            side: "left",
            samples: wx.len(),
        });
    }
    let fit = fit_line(&wx, &wy).ok_or(Error::InsufficientTail {
        side: "left",
        samples: wx.len(),
    })?;
    Ok((math::exp(fit.intercept), fit.slope))
}

/// Both tail fits of a solved profile.
pub fn wave_tail_fit(profile: &WaveProfile) -> Result<TailFit> {
    let xs = profile.xs();
    let (c_lambda, gamma_fit) = fit_right_tail(&xs, profile.values())?;
    let (left_amp, left_slope) = fit_left_tail(&xs, profile.values())?;
    Ok(TailFit {
        c_lambda,
        gamma_fit,
        left_amp,
        left_slope,
    })
}

/// The explicit steady state of the `lambda = 0` problem,
/// `(k_n e^(2x/(n-2)) / (1 + e^(4x/(n-2))))^((n+2)/2)` with `k_n = sqrt(4n/(n-2))`.
pub fn stationary_soliton(x: f64, exp: &Exponents) -> f64 {
    let n = f64::from(exp.n());
    let kn = math::sqrt(4.0 * n / (n - 2.0));
    let y = 2.0 * x / (n - 2.0);
    // e^y / (1 + e^(2y)) = 1 / (2 cosh y), written to avoid overflow.
    let sech_half = if y.abs() < 300.0 {
        0.5 / math::cosh(y)
    } else {
        math::exp(-y.abs())
    };
    math::powf(kn * sech_half, 0.5 * (n + 2.0))
}

/// Radial solution of `Delta f^m + alpha f + beta r f' = 0`, `f(0) = mu`.
#[derive(Debug, Clone)]
pub struct EllipticProfile {
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Radii: 0, then `dr e^(k dr)`.
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

/// Integrates the radial profile from a Taylor start at `r = dr` out to
/// `r_max`, stepping `dr` in `ln r`.
pub fn solve_elliptic_profile(
    mu: f64,
    lambda: f64,
    exp: &Exponents,
    r_max: f64,
    dr: f64,
) -> Result<EllipticProfile> {
    gamma_roots(lambda, exp)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::param("mu", "mu > 0", mu));
    }
    if !(dr > 0.0 && dr < 0.5) {
        return Err(Error::param("dr", "0 < dr < 0.5", dr));
    }
    if !(r_max > 1.0) {
        return Err(Error::param("r_max", "r_max > 1", r_max));
    }
    let (m, p) = (exp.m(), exp.p());
    let n = f64::from(exp.n());
    let beta = lambda / (2.0 * m);
    let alpha = (2.0 * beta + 1.0) / (1.0 - m);

    // g = f^m, written in s = ln r where the 1/r singularity disappears:
    // g_ss = -(n-2) g_s - r^2 (alpha g^p + beta p g^(p-1) g_s).
    let rhs = |s: f64, y: &[f64; 2]| -> [f64; 2] {
        let (g, gs) = (y[0], y[1]);
        let r2 = math::exp(2.0 * s);
        let gpm1 = exp.pow_p_minus_1(g.max(0.0));
        [
            gs,
            -(n - 2.0) * gs - r2 * (alpha * gpm1 * g + beta * p * gpm1 * gs),
        ]
    };

    let mut r_out = alloc::vec![0.0];
    let mut f_out = alloc::vec![mu];
    let mut df_out = alloc::vec![0.0];
    let mut push = |r: f64, y: &[f64; 2]| -> Result<()> {
        let g = y[0];
        if !(g > 0.0) {
            return Err(Error::BlowDown { r });
        }
        let gpm1 = exp.pow_p_minus_1(g);
        r_out.push(r);
        f_out.push(gpm1 * g);
        df_out.push(p * gpm1 * y[1] / r);
        Ok(())
    };
    // Taylor start forced by the equation: g = mu^m - alpha mu r^2 / (2n).
    let c2 = -alpha * mu / (2.0 * n);
    let s0 = math::ln(dr);
    let mut y = [math::powf(mu, m) + c2 * dr * dr, 2.0 * c2 * dr * dr];
    push(dr, &y)?;
    let steps = math::ceil((math::ln(r_max) - s0) / dr) as usize;
    for k in 0..steps {
        let s = s0 + k as f64 * dr;
        y = rk4_step(&rhs, s, &y, dr);
        push(math::exp(s + dr), &y)?;
    }
    Ok(EllipticProfile {
        mu,
        lambda,
        alpha,
        beta,
        r: r_out,
        values: f_out,
        slopes: df_out,
    })
}

/// Maps a radial profile to a wave, translates it so that `v(0) = 1/2`, and
/// resamples it on the grid `i dx`.
pub fn elliptic_to_wave(prof: &EllipticProfile, exp: &Exponents, dx: f64) -> Result<WaveProfile> {
    if !(dx > 0.0) {
        return Err(Error::param("dx", "dx > 0", dx));
    }
    let stretch = 2.0 / f64::from(exp.n() - 2);
    let mut xs = Vec::with_capacity(prof.r.len());
    let mut vs = Vec::with_capacity(prof.r.len());
    let mut dvs = Vec::with_capacity(prof.r.len());
    for ((&r, &f), &df) in prof.r.iter().zip(&prof.values).zip(&prof.slopes).skip(1) {
        let x = transforms::radius_to_x(r, exp);
        let v = transforms::radial_to_wave(x, f, exp);
        xs.push(x);
        vs.push(v);
        dvs.push(v * (exp.p() + stretch * r * df / f));
    }
    let k = vs
        .iter()
        .position(|&v| v >= 0.5)
        .filter(|&k| k > 0)
        .ok_or(Error::ShootingFailed {
            reason: "1/2-crossing outside the covered range",
            x: *xs.last().unwrap_or(&0.0),
        })?;
    let h = xs[k] - xs[k - 1];
    let t = hermite_root(vs[k - 1], dvs[k - 1], vs[k], dvs[k], h, 0.5);
    let shift = xs[k - 1] + t * h;

    let lo = xs[0] - shift;
    let hi = xs[xs.len() - 1] - shift;
    let first = math::ceil(lo / dx) as i64;
    let last = math::floor(hi / dx) as i64;
    let mut values = Vec::new();
    let mut slopes = Vec::new();
    let mut j = 0usize;
    for i in first..=last {
        let x = i as f64 * dx + shift;
        while j + 2 < xs.len() && xs[j + 1] < x {
            j += 1;
        }
        let h = xs[j + 1] - xs[j];
        let t = ((x - xs[j]) / h).clamp(0.0, 1.0);
        let v = hermite(vs[j], dvs[j] * h, vs[j + 1], dvs[j + 1] * h, t);
        let dv = hermite_slope(vs[j], dvs[j] * h, vs[j + 1], dvs[j + 1] * h, t) / h;
        if !(v < 1.0) {
            break;
        }
        values.push(v);
        slopes.push(dv);
    }
    WaveProfile::from_nodes(prof.lambda, exp, dx, first, values, slopes)
}
