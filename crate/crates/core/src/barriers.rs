//! Closed-form lower and upper barriers built from two opposite traveling
//! waves and the spatially constant solution `xi_k`.
//!
//! Ingredients at `(x, tau)` with reparametrised time `s = f(tau)`:
//! `a = v_lambda(x - lambda s + h)`, `b = v_lambda'(-x - lambda' s + h')`,
//! `c = xi_k(tau)`. Lower barriers combine them as
//! `(sum a_i^(1-p) - (N - 1))^(-1/(p-1))`. Upper barriers take the minimum
//! of the same ingredients with `s = tau`, where the waves are exact
//! solutions.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::math;
use crate::wave::{solve_wave, WaveProfile};

/// Largest admissible `k`.
pub const K_MAX: f64 = 0.5;
/// The horizon must sit below this time.
pub const TAU0_PRIME: f64 = -2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Both waves and the plateau.
    Five,
    /// Both waves.
    Four,
    /// Left wave and the plateau.
    Three,
}

impl Family {
    pub fn from_count(n: u8) -> Option<Self> {
        match n {
            5 => Some(Family::Five),
            4 => Some(Family::Four),
            3 => Some(Family::Three),
            _ => None,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Family::Five => 5,
            Family::Four => 4,
            Family::Three => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub h: f64,
    pub h_prime: f64,
    pub k: f64,
    pub q: f64,
    pub tau_bar0: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            lambda_prime: 2.0,
            h: 0.0,
            h_prime: 0.0,
            k: 0.1,
            q: -1.0,
            tau_bar0: -10.0,
        }
    }
}

impl BarrierParams {
    pub fn validate(&self, exp: &Exponents) -> Result<()> {
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", "lambda > 1", self.lambda));
        }
        if !(self.lambda_prime > 1.0 && self.lambda_prime.is_finite()) {
            return Err(Error::param(
                "lambda_prime",
                "lambda' > 1",
                self.lambda_prime,
            ));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(Error::param("h", "h >= 0", self.h));
        }
        if !(self.h_prime >= 0.0 && self.h_prime.is_finite()) {
            return Err(Error::param("h_prime", "h' >= 0", self.h_prime));
        }
        if !(self.k > 0.0 && self.k <= K_MAX) {
            return Err(Error::param("k", "0 < k <= 0.5", self.k));
        }
        let alpha = exp.alpha();
        let limit = TAU0_PRIME.min(-1.0 / alpha);
        if !(self.tau_bar0 < limit) {
            return Err(Error::param(
                "tau_bar0",
                "tau_bar0 < min(-2, -p/(p-1))",
                self.tau_bar0,
            ));
        }
        if !(self.k * math::exp(alpha * TAU0_PRIME) < 0.5) {
            return Err(Error::param("k", "k e^((p-1)/p tau0') < 1/2", self.k));
        }
        // (1 + alpha t) e^(alpha t) is smallest at t = -2/alpha.
        let t = self.tau_bar0.min(-2.0 / alpha);
        let g_min = (1.0 + alpha * t) * math::exp(alpha * t);
        if !(self.q.is_finite() && 1.0 + self.q * g_min > 0.0) {
            return Err(Error::param("q", "f'(tau) > 0 for tau <= tau_bar0", self.q));
        }
        Ok(())
    }
}

/// `(1 - k e^((p-1)tau/p))^(p/(p-1))`.
pub fn xi_k(k: f64, tau: f64, exp: &Exponents) -> Result<f64> {
    let base = k * math::exp(exp.alpha() * tau);
    if !(base < 1.0) {
        return Err(Error::OutsideValidity { what: "xi_k", tau });
    }
    Ok(math::exp(ln_xi(k, tau, exp)))
}

#[inline]
fn ln_xi(k: f64, tau: f64, exp: &Exponents) -> f64 {
    exp.p() / (exp.p() - 1.0) * math::ln1p(-k * math::exp(exp.alpha() * tau))
}

/// `tau (1 + q e^((p-1)tau/p))`.
pub fn time_reparam(tau: f64, q: f64, exp: &Exponents) -> f64 {
    tau * (1.0 + q * math::exp(exp.alpha() * tau))
}

/// Derivative of [`time_reparam`].
pub fn time_reparam_rate(tau: f64, q: f64, exp: &Exponents) -> f64 {
    let a = exp.alpha();
    1.0 + q * (1.0 + a * tau) * math::exp(a * tau)
}

/// One ingredient: log-value, deficit, and `d_x`, `d_xx`, `d_tau` divided by
/// the value.
#[derive(Debug, Clone, Copy)]
struct Part {
    ln_v: f64,
    deficit: f64,
    dx: f64,
    dxx: f64,
    dtau: f64,
}

/// Lower barrier with the quantities the residual needs.
#[derive(Debug, Clone, Copy)]
struct Combined {
    ln_f: f64,
    deficit: f64,
    /// `G_x / G`, `G_xx / G`, `f_tau / f` with `G = sum a_i^(1-p) - (N-1)`.
    gx: f64,
    gxx: f64,
    ftau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingPoints {
    pub tau: f64,
    /// Left wave meets right wave.
    pub x_tau: f64,
    /// Left wave meets the plateau.
    pub y_tau: f64,
    /// Right wave meets the plateau.
    pub z_tau: f64,
}

impl CrossingPoints {
    pub fn ordered(&self) -> bool {
        self.y_tau < self.x_tau && self.x_tau < self.z_tau
    }
}

/// A validated barrier family member with its two wave profiles.
#[derive(Debug, Clone)]
pub struct Barriers {
    params: BarrierParams,
    exp: Exponents,
    wave: Arc<WaveProfile>,
    wave_prime: Arc<WaveProfile>,
}

impl Barriers {
    pub fn new(
        params: BarrierParams,
        exp: Exponents,
        wave: Arc<WaveProfile>,
        wave_prime: Arc<WaveProfile>,
    ) -> Result<Self> {
        params.validate(&exp)?;
        if wave.lambda() != params.lambda {
            return Err(Error::param(
                "wave.lambda",
                "wave speed must equal lambda",
                wave.lambda(),
            ));
        }
        if wave_prime.lambda() != params.lambda_prime {
            return Err(Error::param(
                "wave_prime.lambda",
                "wave speed must equal lambda'",
                wave_prime.lambda(),
            ));
        }
        if wave.exponents() != &exp || wave_prime.exponents() != &exp {
            return Err(Error::param(
                "wave.n",
                "waves must share the dimension",
                f64::from(exp.n()),
            ));
        }
        Ok(Self {
            params,
            exp,
            wave,
            wave_prime,
        })
    }

    /// Solves both waves on a default domain and builds the barriers.
    pub fn solve(params: BarrierParams, exp: Exponents, wave_dx: f64) -> Result<Self> {
        params.validate(&exp)?;
        let domain = (-10.0, 120.0);
        let wave = Arc::new(solve_wave(params.lambda, &exp, domain, wave_dx)?);
        let wave_prime = if params.lambda_prime == params.lambda {
            wave.clone()
        } else {
            Arc::new(solve_wave(params.lambda_prime, &exp, domain, wave_dx)?)
        };
        Self::new(params, exp, wave, wave_prime)
    }

    /// Same waves, different shifts or plateau parameters.
    pub fn with_params(&self, params: BarrierParams) -> Result<Self> {
        Self::new(params, self.exp, self.wave.clone(), self.wave_prime.clone())
    }

    pub fn params(&self) -> &BarrierParams {
        &self.params
    }

    pub fn exponents(&self) -> &Exponents {
        &self.exp
    }

    pub fn wave(&self) -> &WaveProfile {
        &self.wave
    }

    pub fn wave_prime(&self) -> &WaveProfile {
        &self.wave_prime
    }

    /// Errors unless `tau <= tau_bar0`.
    pub fn check_tau(&self, tau: f64) -> Result<()> {
        if tau <= self.params.tau_bar0 + 1e-9 {
            Ok(())
        } else {
            Err(Error::OutsideValidity {
                what: "barriers beyond tau_bar0",
                tau,
            })
        }
    }

    pub fn xi(&self, tau: f64) -> f64 {
        math::exp(ln_xi(self.params.k, tau, &self.exp))
    }

    pub fn time(&self, tau: f64) -> f64 {
        time_reparam(tau, self.params.q, &self.exp)
    }

    fn left(&self, x: f64, s: f64, rate: f64) -> Part {
        let pr = &self.params;
        let j = self.wave.jet(x - pr.lambda * s + pr.h);
        Part {
            ln_v: j.ln_value,
            deficit: j.deficit,
            dx: j.slope_ratio,
            dxx: j.curvature_ratio,
            dtau: -pr.lambda * rate * j.slope_ratio,
        }
    }

    fn right(&self, x: f64, s: f64, rate: f64) -> Part {
        let pr = &self.params;
        let j = self.wave_prime.jet(-x - pr.lambda_prime * s + pr.h_prime);
        Part {
            ln_v: j.ln_value,
            deficit: j.deficit,
            dx: -j.slope_ratio,
            dxx: j.curvature_ratio,
            dtau: -pr.lambda_prime * rate * j.slope_ratio,
        }
    }

    fn plateau(&self, tau: f64) -> Part {
        let ln_v = ln_xi(self.params.k, tau, &self.exp);
        Part {
            ln_v,
            deficit: -math::expm1(ln_v),
            dx: 0.0,
            dxx: 0.0,
            // xi' / xi = 1 - xi^(m-1)
            dtau: -math::expm1((self.exp.m() - 1.0) * ln_v),
        }
    }

    /// Ingredients of the lower barrier, whose waves run on the reparametrised
    /// time.
    fn parts(&self, family: Family, x: f64, tau: f64) -> ([Part; 3], usize) {
        let s = self.time(tau);
        let rate = time_reparam_rate(tau, self.params.q, &self.exp);
        self.parts_at(family, x, tau, s, rate)
    }

    /// Ingredients of the upper barrier: exact waves on `tau` itself.
    fn exact_parts(&self, family: Family, x: f64, tau: f64) -> ([Part; 3], usize) {
        self.parts_at(family, x, tau, tau, 1.0)
    }

    fn parts_at(&self, family: Family, x: f64, tau: f64, s: f64, rate: f64) -> ([Part; 3], usize) {
        let a = self.left(x, s, rate);
        let filler = a;
        match family {
            Family::Five => ([a, self.right(x, s, rate), self.plateau(tau)], 3),
            Family::Four => ([a, self.right(x, s, rate), filler], 2),
            Family::Three => ([a, self.plateau(tau), filler], 2),
        }
    }

    fn combine(&self, parts: &[Part]) -> Combined {
        let p = self.exp.p();
        let mut ls = [0.0; 3];
        let mut l_max: f64 = 0.0;
        for (l, part) in ls.iter_mut().zip(parts) {
            *l = (1.0 - p) * part.ln_v;
            l_max = l_max.max(*l);
        }
        let ls = &ls[..parts.len()];
        let extra = (parts.len() - 1) as f64;
        // ln G, with G = sum e^(L_i) - (N - 1) >= 1.
        let ln_g = if l_max > 30.0 {
            let s: f64 = ls.iter().map(|l| math::exp(l - l_max)).sum();
            l_max + math::ln(s - extra * math::exp(-l_max))
        } else {
            math::ln1p(ls.iter().map(|&l| math::expm1(l)).sum())
        };
        let ln_f = -ln_g / (p - 1.0);
        let (mut sx, mut sxx, mut st) = (0.0, 0.0, 0.0);
        for (l, part) in ls.iter().zip(parts) {
            let rho = math::exp(l - ln_g);
            sx += rho * part.dx;
            sxx += rho * (part.dxx - p * part.dx * part.dx);
            st += rho * part.dtau;
        }
        Combined {
            ln_f,
            deficit: -math::expm1(ln_f),
            gx: (1.0 - p) * sx,
            gxx: (1.0 - p) * sxx,
            ftau: st,
        }
    }

    pub fn lower(&self, family: Family, x: f64, tau: f64) -> f64 {
        let (parts, n) = self.parts(family, x, tau);
        math::exp(self.combine(&parts[..n]).ln_f)
    }

    /// `1 - lower`, accurate when the barrier is close to 1.
    pub fn lower_deficit(&self, family: Family, x: f64, tau: f64) -> f64 {
        let (parts, n) = self.parts(family, x, tau);
        self.combine(&parts[..n]).deficit
    }

    /// `(f^m)_x` of the lower barrier.
    pub fn lower_flux(&self, family: Family, x: f64, tau: f64) -> f64 {
        let (parts, n) = self.parts(family, x, tau);
        let c = self.combine(&parts[..n]);
        let beta = -1.0 / (self.exp.p() * (self.exp.p() - 1.0));
        math::exp(self.exp.m() * c.ln_f) * beta * c.gx
    }

    /// `f_tau - (f^m)_xx - f + f^m` for the lower barrier; non-positive for
    /// a subsolution.
    pub fn subsolution_residual(&self, family: Family, x: f64, tau: f64) -> f64 {
        let (parts, n) = self.parts(family, x, tau);
        let c = self.combine(&parts[..n]);
        let p = self.exp.p();
        let beta = -1.0 / (p * (p - 1.0));
        let f = math::exp(c.ln_f);
        let phi = math::exp(self.exp.m() * c.ln_f);
        let phi_xx = phi * (beta * (beta - 1.0) * c.gx * c.gx + beta * c.gxx);
        f * c.ftau - phi_xx - f + phi
    }

    pub fn upper(&self, family: Family, x: f64, tau: f64) -> f64 {
        let (parts, n) = self.exact_parts(family, x, tau);
        let ln_min = parts[..n].iter().map(|p| p.ln_v).fold(0.0, f64::min);
        math::exp(ln_min)
    }

    /// Minimum of the lower barrier's own ingredients, i.e. the upper
    /// barrier's formula on the reparametrised time.
    pub fn ingredient_min(&self, family: Family, x: f64, tau: f64) -> f64 {
        let (parts, n) = self.parts(family, x, tau);
        math::exp(parts[..n].iter().map(|p| p.ln_v).fold(0.0, f64::min))
    }

    pub fn upper_deficit(&self, family: Family, x: f64, tau: f64) -> f64 {
        let (parts, n) = self.exact_parts(family, x, tau);
        parts[..n].iter().map(|p| p.deficit).fold(0.0, f64::max)
    }

    /// Roots of `a = b`, `a = xi`, `b = xi` without the ordering check.
    pub fn crossing_roots(&self, tau: f64) -> Result<CrossingPoints> {
        let s = tau;
        let rate = 1.0;
        let ln_xi = self.plateau(tau).ln_v;
        let x_tau = bisect(
            |x| self.left(x, s, rate).ln_v - self.right(x, s, rate).ln_v,
            "x(tau)",
            tau,
        )?;
        let y_tau = bisect(|x| self.left(x, s, rate).ln_v - ln_xi, "y(tau)", tau)?;
        let z_tau = bisect(|x| ln_xi - self.right(x, s, rate).ln_v, "z(tau)", tau)?;
        Ok(CrossingPoints {
            tau,
            x_tau,
            y_tau,
            z_tau,
        })
    }

    /// As [`Barriers::crossing_roots`] but insists on `y < x < z`.
    pub fn crossing_points(&self, tau: f64) -> Result<CrossingPoints> {
        let c = self.crossing_roots(tau)?;
        if c.ordered() {
            Ok(c)
        } else {
            Err(Error::CrossingsUnordered {
                tau,
                y: c.y_tau,
                x: c.x_tau,
                z: c.z_tau,
            })
        }
    }

    /// Where the minimum in the upper barrier switches ingredient.
    pub fn upper_kinks(&self, family: Family, tau: f64) -> Result<Vec<f64>> {
        let c = self.crossing_roots(tau)?;
        Ok(match family {
            Family::Five if c.ordered() => alloc::vec![c.y_tau, c.z_tau],
            Family::Five | Family::Four => alloc::vec![c.x_tau],
            Family::Three => alloc::vec![c.y_tau],
        })
    }

    pub fn lower_samples(&self, family: Family, xs: &[f64], tau: f64) -> Vec<f64> {
        xs.iter().map(|&x| self.lower(family, x, tau)).collect()
    }

    pub fn upper_samples(&self, family: Family, xs: &[f64], tau: f64) -> Vec<f64> {
        xs.iter().map(|&x| self.upper(family, x, tau)).collect()
    }
}

/// Root of an increasing function, bracket grown from `[-64, 64]`.
fn bisect(g: impl Fn(f64) -> f64, what: &'static str, tau: f64) -> Result<f64> {
    let mut half = 64.0;
    let (mut a, mut b);
    loop {
        a = -half;
        b = half;
        if g(a) < 0.0 && g(b) > 0.0 {
            break;
        }
        half *= 2.0;
        if half > 1e6 {
            return Err(Error::NoSignChange { what, tau });
        }
    }
    for _ in 0..200 {
        if b - a <= 1e-10 {
            break;
        }
        let mid = 0.5 * (a + b);
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolutionReport {
    pub max_residual: f64,
    pub x: f64,
    pub tau: f64,
}

/// Largest subsolution residual of `family` over the sample points.
pub fn check_subsolution(
    barriers: &Barriers,
    family: Family,
    taus: &[f64],
    xs: &[f64],
) -> Result<SubsolutionReport> {
    let mut worst = SubsolutionReport {
        max_residual: f64::NEG_INFINITY,
        x: f64::NAN,
        tau: f64::NAN,
    };
    for &tau in taus {
        barriers.check_tau(tau)?;
        for &x in xs {
            let r = barriers.subsolution_residual(family, x, tau);
            if r > worst.max_residual || r.is_nan() {
                worst = SubsolutionReport {
                    max_residual: r,
                    x,
                    tau,
                };
                if r.is_nan() {
                    return Ok(worst);
                }
            }
        }
    }
    Ok(worst)
}

/// Outcome of [`validate_horizon`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonReport {
    pub tau_bar0: f64,
    pub subsolution: SubsolutionReport,
    pub tightenings: usize,
}

/// Pushes `tau_bar0` down (doubling its magnitude) until the subsolution
/// residual over `[tau_bar0 - span, tau_bar0]` is below `tol` and the
/// crossing points exist. At most `max_tightenings` attempts.
pub fn validate_horizon(
    barriers: &Barriers,
    family: Family,
    dx: f64,
    tol: f64,
    max_tightenings: usize,
) -> Result<(Barriers, HorizonReport)> {
    let span = 30.0;
    let mut current = barriers.clone();
    let mut last = f64::NAN;
    for attempt in 0..=max_tightenings {
        let pr = *current.params();
        let taus: Vec<f64> = (0..=30)
            .map(|i| pr.tau_bar0 - span * i as f64 / 30.0)
            .collect();
        let deepest = pr.tau_bar0 - span;
        let reach_l = pr.lambda * deepest.abs() + pr.h + 20.0;
        let reach_r = pr.lambda_prime * deepest.abs() + pr.h_prime + 20.0;
        let nx = ((reach_l + reach_r) / dx) as usize + 1;
        let xs: Vec<f64> = (0..nx).map(|i| -reach_l + i as f64 * dx).collect();
        let report = check_subsolution(&current, family, &taus, &xs)?;
        let crossings_ok = taus.iter().all(|&t| current.crossing_roots(t).is_ok());
        last = report.max_residual;
        if report.max_residual <= tol && crossings_ok {
            return Ok((
                current,
                HorizonReport {
                    tau_bar0: pr.tau_bar0,
                    subsolution: report,
                    tightenings: attempt,
                },
            ));
        }
        current = current.with_params(BarrierParams {
            tau_bar0: 2.0 * pr.tau_bar0,
            ..pr
        })?;
    }
    Err(Error::BarrierValidation {
        tau_bar0: current.params().tau_bar0,
        residual: last,
    })
}

/// One kink of a sampled upper barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkJump {
    pub x: f64,
    /// One-sided derivatives of `f^m` from the left and from the right.
    pub left_flux: f64,
    pub right_flux: f64,
}

impl KinkJump {
    /// A minimum of supersolutions may only bend down at a kink.
    pub fn is_concave(&self, tol: f64) -> bool {
        self.left_flux >= self.right_flux - tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionCheck {
    /// Max of `(f^m)'' + f - f^m` over smooth interior nodes.
    pub max_residual: f64,
    pub kinks: Vec<KinkJump>,
}

impl SupersolutionCheck {
    pub fn passes(&self, residual_tol: f64, flux_tol: f64) -> bool {
        self.max_residual <= residual_tol && self.kinks.iter().all(|k| k.is_concave(flux_tol))
    }
}

/// Elliptic supersolution test on samples `values[i] = f(x_min + i dx)`.
/// Nodes within `2 dx` of a kink are left to the flux-jump test.
pub fn check_supersolution(
    values: &[f64],
    x_min: f64,
    dx: f64,
    exp: &Exponents,
    kinks: &[f64],
) -> SupersolutionCheck {
    let g: Vec<f64> = values.iter().map(|&v| exp.pow_m(v)).collect();
    let n = g.len();
    let near_kink = |x: f64| kinks.iter().any(|&k| (x - k).abs() <= 2.0 * dx);
    let mut worst = f64::NEG_INFINITY;
    for i in 1..n.saturating_sub(1) {
        if near_kink(x_min + i as f64 * dx) {
            continue;
        }
        let lap = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (dx * dx);
        worst = worst.max(lap + values[i] - g[i]);
    }
    let jumps = kinks
        .iter()
        .filter_map(|&k| {
            let pos = (k - x_min) / dx;
            let il = math::floor(pos);
            if il < 2.0 || il + 3.0 >= n as f64 {
                return None;
            }
            let il = il as usize;
            let ir = il + 1;
            let left = (3.0 * g[il] - 4.0 * g[il - 1] + g[il - 2]) / (2.0 * dx);
            let right = (-3.0 * g[ir] + 4.0 * g[ir + 1] - g[ir + 2]) / (2.0 * dx);
            Some(KinkJump {
                x: k,
                left_flux: left,
                right_flux: right,
            })
        })
        .collect();
    SupersolutionCheck {
        max_residual: worst,
        kinks: jumps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(params: BarrierParams) -> Barriers {
        Barriers::solve(params, Exponents::new(3).unwrap(), 1e-3).unwrap()
    }

    #[test]
    fn xi_values() {
        let e = Exponents::new(3).unwrap();
        let base: f64 = 1.0 - 0.1 * libm::exp(-8.0);
        assert!((xi_k(0.1, -10.0, &e).unwrap() - base.powf(1.25)).abs() < 1e-15);
        assert!((xi_k(0.1, -10.0, &e).unwrap() - 0.9999580).abs() < 1e-7);
        assert!(xi_k(1e-300, 5.0, &e).unwrap() == 1.0);
        assert!(xi_k(0.5, 1.0, &e).is_err());
        // Leading-order expansion at tau = -20.
        let d = 1.0 - xi_k(0.1, -20.0, &e).unwrap();
        let lead = 1.25 * 0.1 * libm::exp(-16.0);
        assert!((d / lead - 1.0).abs() < 1e-3);
    }

    #[test]
    fn xi_solves_its_ode() {
        let e = Exponents::new(3).unwrap();
        for tau in [-20.0, -10.0, -3.0] {
            let k = 0.3;
            // Analytic derivative of the closed form.
            let base = 1.0 - k * libm::exp(0.8 * tau);
            let d = 1.25 * libm::pow(base, 0.25) * (-k * 0.8 * libm::exp(0.8 * tau));
            let xi = xi_k(k, tau, &e).unwrap();
            assert!((d - (xi - libm::pow(xi, 0.2))).abs() < 1e-10);
        }
    }

    #[test]
    fn reparametrised_time() {
        let e = Exponents::new(3).unwrap();
        let f = time_reparam(-10.0, 1.0, &e);
        assert!((f - (-10.0 * (1.0 + libm::exp(-8.0)))).abs() < 1e-14);
        assert!((f + 10.003355).abs() < 1e-6);
        assert_eq!(time_reparam(-7.0, 0.0, &e), -7.0);
        let mut tau = -5.0;
        while tau > -60.0 {
            let r = time_reparam_rate(tau, 1.0, &e);
            assert!(r > 0.0 && r <= 1.0, "{tau} {r}");
            let h = 1e-6;
            let fd = (time_reparam(tau + h, 1.0, &e) - time_reparam(tau - h, 1.0, &e)) / (2.0 * h);
            assert!((fd - r).abs() < 1e-8);
            tau -= 0.5;
        }
    }

    #[test]
    fn lower_is_one_when_ingredients_are() {
        let b = setup(BarrierParams::default());
        // Very deep in the past everything is 1 to double precision.
        for fam in [Family::Five, Family::Four, Family::Three] {
            assert_eq!(b.lower(fam, 0.0, -200.0), 1.0);
        }
    }

    #[test]
    fn residual_matches_finite_differences() {
        let b = setup(BarrierParams::default());
        let e = *b.exponents();
        for fam in [Family::Five, Family::Four, Family::Three] {
            for &(x, tau) in &[(0.0, -12.0), (-22.0, -12.0), (5.0, -15.0), (25.0, -11.0)] {
                let hx = 1e-3;
                let ht = 1e-5;
                let f = |x: f64, t: f64| b.lower(fam, x, t);
                let fm = |x: f64| e.pow_m(f(x, tau));
                let ft = (f(x, tau + ht) - f(x, tau - ht)) / (2.0 * ht);
                let lap = (fm(x + hx) - 2.0 * fm(x) + fm(x - hx)) / (hx * hx);
                let v = f(x, tau);
                let fd = ft - lap - v + e.pow_m(v);
                let an = b.subsolution_residual(fam, x, tau);
                assert!(
                    (fd - an).abs() < 2e-5,
                    "{fam:?} x={x} tau={tau}: {fd} vs {an}"
                );
                let flux_fd = (fm(x + hx) - fm(x - hx)) / (2.0 * hx);
                assert!((flux_fd - b.lower_flux(fam, x, tau)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lone_wave_residual_sign_follows_q() {
        // With k tiny the family-3 residual is lambda v' (1 - f'(tau)).
        for q in [1.0, -1.0] {
            let b = setup(BarrierParams {
                k: 1e-12,
                q,
                ..BarrierParams::default()
            });
            let e = *b.exponents();
            let tau = -12.0;
            let rate = time_reparam_rate(tau, q, &e);
            for x in [-26.0, -24.0, -20.0] {
                let s = x - 2.0 * b.time(tau);
                let want = 2.0 * b.wave().slope(s) * (1.0 - rate);
                let got = b.subsolution_residual(Family::Three, x, tau);
                assert!((got - want).abs() < 1e-6 * want.abs(), "{got} {want}");
                assert_eq!(got > 0.0, q > 0.0);
            }
        }
    }

    #[test]
    fn symmetric_crossing_is_zero() {
        let b = setup(BarrierParams::default());
        let c = b.crossing_roots(-25.0).unwrap();
        assert!(c.x_tau.abs() < 1e-9);
        assert!((c.y_tau + c.z_tau).abs() < 1e-8);
    }

    #[test]
    fn supersolution_examples() {
        let e = Exponents::new(3).unwrap();
        let xi = xi_k(0.1, -10.0, &e).unwrap();
        let flat = alloc::vec![xi; 50];
        let r = check_supersolution(&flat, 0.0, 0.01, &e, &[]);
        assert_eq!(r.max_residual, xi - e.pow_m(xi));
        let ones = alloc::vec![1.0; 50];
        assert_eq!(
            check_supersolution(&ones, 0.0, 0.01, &e, &[]).max_residual,
            0.0
        );

        let b = setup(BarrierParams::default());
        let dx = 1e-2;
        let xs: Vec<f64> = (0..2001).map(|i| -10.0 + i as f64 * dx).collect();
        let vs: Vec<f64> = xs.iter().map(|&x| b.wave().value(x)).collect();
        let r = check_supersolution(&vs, -10.0, dx, &e, &[]);
        // Equals -lambda v' up to O(dx^2).
        assert!(r.max_residual <= 10.0 * dx * dx);
        for i in (200..1500).step_by(100) {
            let g = |j: usize| e.pow_m(vs[j]);
            let lap = (g(i + 1) - 2.0 * g(i) + g(i - 1)) / (dx * dx);
            let res = lap + vs[i] - g(i);
            let want = -2.0 * b.wave().slope(xs[i]);
            assert!((res - want).abs() < 10.0 * dx * dx, "{res} {want}");
        }
    }
}
