//! Ancient solutions as limits of runs started ever deeper in the past, the
//! singular parameter limits, and the asymptotic checks run on them.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::barriers::{Barriers, Family, K_MAX};
use crate::error::{Error, Result};
use crate::executor::{Executor, Job};
use crate::exponents::{gamma_roots, rate_d};
use crate::fit::fit_line;
use crate::grid::{Field, Grid1D};
use crate::math;
use crate::solver::{BoundaryMode, EvolutionResult, Scheme, Solver, SolverConfig};

/// Half-width of the comparison window around the symmetry point.
pub const WINDOW: f64 = 20.0;
/// Extra room beyond the outermost front at the start of a run.
pub const DOMAIN_MARGIN: f64 = 8.0;

/// Which barrier supplies `v(., -a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialData {
    #[default]
    Upper,
    Lower,
}

/// Grid centred at `(h' - h)/2` wide enough for fronts started at `-depth`.
pub fn domain_for(barriers: &Barriers, depth: f64, dx: f64, margin: f64) -> Result<Grid1D> {
    let pr = barriers.params();
    let half = pr.lambda.max(pr.lambda_prime) * depth + pr.h.max(pr.h_prime) + margin;
    Grid1D::centered(0.5 * (pr.h_prime - pr.h), half, dx)
}

/// Solver settings the experiments use unless told otherwise.
pub fn experiment_solver() -> SolverConfig {
    SolverConfig {
        scheme: Scheme::Bdf2,
        record_every: 100,
        ..SolverConfig::default()
    }
}

/// Barrier data of `family` at `tau` on `grid`.
pub fn initial_field(
    barriers: &Barriers,
    family: Family,
    grid: Grid1D,
    tau: f64,
    initial: InitialData,
) -> Result<Field> {
    Field::from_fn(grid, tau, |x| match initial {
        InitialData::Upper => barriers.upper(family, x, tau),
        InitialData::Lower => barriers.lower(family, x, tau),
    })
}

fn run_from(
    barriers: &Barriers,
    family: Family,
    grid: Grid1D,
    depth: f64,
    tau_end: f64,
    solver: SolverConfig,
    initial: InitialData,
) -> Result<EvolutionResult> {
    let init = initial_field(barriers, family, grid, -depth, initial)?;
    let s = Solver::new(
        *barriers.exponents(),
        solver,
        BoundaryMode::DirichletFromBarrier(family),
        Some(barriers),
    )?;
    s.evolve(init, tau_end)
}

/// Max-norm of `a - b` at the nodes of `a` inside `[lo, hi]`; `b` is sampled.
fn window_gap(a: &Field, b: &Field, lo: f64, hi: f64) -> f64 {
    a.window(lo, hi)
        .map(|i| (a.values[i] - b.sample(a.grid.x(i))).abs())
        .fold(0.0, f64::max)
}

/// Max-norm of the difference of forward differences on `[lo, hi]`.
fn window_slope_gap(a: &Field, b: &Field, lo: f64, hi: f64) -> f64 {
    let dx = a.grid.dx();
    let r = a.window(lo, hi);
    (r.start..r.end.saturating_sub(1))
        .map(|i| {
            let x = a.grid.x(i);
            let da = (a.values[i + 1] - a.values[i]) / dx;
            let db = (b.sample(x + dx) - b.sample(x)) / dx;
            (da - db).abs()
        })
        .fold(0.0, f64::max)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncientConfig {
    pub family: Family,
    /// Start depths `a_j`; run `j` starts at `tau = -a_j`.
    pub starts: Vec<f64>,
    pub tau_star: f64,
    pub dx: f64,
    pub solver: SolverConfig,
    pub initial: InitialData,
    pub margin: f64,
    pub window: f64,
}

impl Default for AncientConfig {
    fn default() -> Self {
        Self {
            family: Family::Five,
            starts: alloc::vec![15.0, 20.0, 25.0, 30.0],
            tau_star: -10.0,
            dx: 0.01,
            solver: experiment_solver(),
            initial: InitialData::Upper,
            margin: DOMAIN_MARGIN,
            window: WINDOW,
        }
    }
}

/// Per-run diagnostics of an ancient construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunChecks {
    /// Smallest sandwich margin over snapshots.
    pub worst_sandwich: f64,
    /// Largest pointwise increase between consecutive snapshots.
    pub max_increase: f64,
    /// Largest `|x0 - (h' - h)/2|` over tracked maxima, when the run is symmetric.
    pub argmax_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncientRun {
    pub params: crate::barriers::BarrierParams,
    pub family: Family,
    pub starts: Vec<f64>,
    pub tau_star: f64,
    pub window: (f64, f64),
    pub runs: Vec<EvolutionResult>,
    pub checks: Vec<RunChecks>,
    /// Field of the deepest run at `tau_star`.
    pub limit_estimate: Field,
    /// Window max-norm gaps between consecutive runs at `tau_star`.
    pub cauchy_gaps: Vec<f64>,
    /// Same for forward differences.
    pub cauchy_slope_gaps: Vec<f64>,
}

impl AncientRun {
    pub fn deepest(&self) -> &EvolutionResult {
        self.runs.last().expect("non-empty run list")
    }

    pub fn gaps_strictly_decreasing(&self) -> bool {
        strictly_decreasing(&self.cauchy_gaps)
    }

    pub fn worst_sandwich(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.worst_sandwich)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_increase(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_increase)
            .fold(0.0, f64::max)
    }

    pub fn worst_argmax_offset(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter_map(|c| c.argmax_offset)
            .reduce(f64::max)
    }
}

/// `20 (dx^2 + dt)`, the slack allowed on the sandwich.
pub fn sandwich_tolerance(dx: f64, dt: f64) -> f64 {
    20.0 * (dx * dx + dt)
}

/// Runs the family from each start depth to `tau_star` with Dirichlet data
/// from its lower barrier and compares the results.
pub fn build_ancient<E: Executor>(
    barriers: &Barriers,
    cfg: &AncientConfig,
    exec: &E,
) -> Result<AncientRun> {
    let pr = *barriers.params();
    if cfg.starts.is_empty() {
        return Err(Error::InsufficientData {
            what: "start depths",
            samples: 0,
        });
    }
    if !cfg.starts.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::param(
            "starts",
            "start depths strictly increasing",
            cfg.starts[0],
        ));
    }
    barriers.check_tau(cfg.tau_star)?;
    for &a in &cfg.starts {
        if !(a > -pr.tau_bar0 && -a < cfg.tau_star) {
            return Err(Error::param(
                "starts",
                "a_j > -tau_bar0 and -a_j < tau_star",
                a,
            ));
        }
    }
    let solver = SolverConfig {
        sandwich: Some(cfg.family),
        ..cfg.solver
    };
    let family = cfg.family;
    let jobs: Vec<Job<'_, Result<EvolutionResult>>> = cfg
        .starts
        .iter()
        .map(|&a| {
            let job: Job<'_, Result<EvolutionResult>> = Box::new(move || {
                let grid = domain_for(barriers, a, cfg.dx, cfg.margin)?;
                run_from(barriers, family, grid, a, cfg.tau_star, solver, cfg.initial)
            });
            job
        })
        .collect();
    let mut runs = Vec::with_capacity(cfg.starts.len());
    for (j, r) in exec.run_all(jobs).into_iter().enumerate() {
        runs.push(r.map_err(|e| Error::in_run(j, e))?);
    }

    let center = 0.5 * (pr.h_prime - pr.h);
    let window = (center - cfg.window, center + cfg.window);
    let symmetric = pr.lambda == pr.lambda_prime && family != Family::Three;
    let checks = runs
        .iter()
        .map(|r| {
            let mut max_increase: f64 = 0.0;
            for w in r.snapshots.windows(2) {
                for (a, b) in w[0].values.iter().zip(&w[1].values) {
                    max_increase = max_increase.max(b - a);
                }
            }
            let argmax_offset = symmetric.then(|| {
                r.max_track
                    .iter()
                    .map(|m| (m.x0 - center).abs())
                    .fold(0.0, f64::max)
            });
            RunChecks {
                worst_sandwich: r.worst_sandwich(),
                max_increase,
                argmax_offset,
            }
        })
        .collect();
    let finals: Vec<&Field> = runs.iter().map(|r| r.last()).collect();
    let cauchy_gaps = finals
        .windows(2)
        .map(|w| window_gap(w[0], w[1], window.0, window.1))
        .collect();
    let cauchy_slope_gaps = finals
        .windows(2)
        .map(|w| window_slope_gap(w[0], w[1], window.0, window.1))
        .collect();
    let limit_estimate = finals[finals.len() - 1].clone();
    Ok(AncientRun {
        params: pr,
        family,
        starts: cfg.starts.clone(),
        tau_star: cfg.tau_star,
        window,
        runs,
        checks,
        limit_estimate,
        cauchy_gaps,
        cauchy_slope_gaps,
    })
}

/// One sweep run per parameter value plus a target run, all on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub depth: f64,
    pub tau_star: f64,
    pub dx: f64,
    pub solver: SolverConfig,
    pub initial: InitialData,
    pub margin: f64,
    pub window: f64,
}

impl SweepConfig {
    /// Starts from the lower barrier, whose plateau term is active at any depth.
    pub fn k_limit() -> Self {
        Self {
            initial: InitialData::Lower,
            ..Self::h_prime_limit()
        }
    }

    pub fn h_prime_limit() -> Self {
        Self {
            depth: 30.0,
            tau_star: -10.0,
            dx: 0.01,
            solver: experiment_solver(),
            initial: InitialData::Upper,
            margin: DOMAIN_MARGIN,
            window: WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSweep {
    pub parameter: &'static str,
    pub values: Vec<f64>,
    /// Window max-norm gap of each run to the target at `tau_star`.
    pub gaps: Vec<f64>,
    /// Largest amount by which a later run falls below an earlier one.
    pub ordering_violation: f64,
    pub window: (f64, f64),
    pub fields: Vec<Field>,
    pub target: Field,
}

impl LimitSweep {
    pub fn gaps_decreasing(&self) -> bool {
        strictly_decreasing(&self.gaps)
    }

    pub fn ordered(&self, tol: f64) -> bool {
        self.ordering_violation <= tol
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep<E: Executor>(
    parameter: &'static str,
    values: &[f64],
    variants: Vec<Barriers>,
    family: Family,
    target: (Barriers, Family),
    grid: Grid1D,
    cfg: &SweepConfig,
    exec: &E,
) -> Result<LimitSweep> {
    let solver = SolverConfig {
        sandwich: None,
        ..cfg.solver
    };
    let mut jobs: Vec<Job<'_, Result<EvolutionResult>>> = variants
        .iter()
        .map(|b| {
            let job: Job<'_, Result<EvolutionResult>> = Box::new(move || {
                run_from(
                    b,
                    family,
                    grid,
                    cfg.depth,
                    cfg.tau_star,
                    solver,
                    cfg.initial,
                )
            });
            job
        })
        .collect();
    let (tb, tf) = (&target.0, target.1);
    jobs.push(Box::new(move || {
        run_from(tb, tf, grid, cfg.depth, cfg.tau_star, solver, cfg.initial)
    }));
    let mut finals = Vec::with_capacity(values.len() + 1);
    for (j, r) in exec.run_all(jobs).into_iter().enumerate() {
        let mut r = r.map_err(|e| Error::in_run(j, e))?;
        finals.push(r.snapshots.pop().expect("final snapshot"));
    }
    let target = finals.pop().expect("target run");
    let center = 0.5 * (grid.x_min() + grid.x_max());
    let window = (center - cfg.window, center + cfg.window);
    let gaps = finals
        .iter()
        .map(|f| window_gap(f, &target, window.0, window.1))
        .collect();
    let mut ordering_violation: f64 = 0.0;
    for w in finals.windows(2) {
        for (a, b) in w[0].values.iter().zip(&w[1].values) {
            ordering_violation = ordering_violation.max(a - b);
        }
    }
    Ok(LimitSweep {
        parameter,
        values: values.to_vec(),
        gaps,
        ordering_violation,
        window,
        fields: finals,
        target,
    })
}

/// Family-5 runs for decreasing `k`, compared with the family-4 run.
pub fn k_to_zero_limit<E: Executor>(
    barriers: &Barriers,
    ks: &[f64],
    cfg: &SweepConfig,
    exec: &E,
) -> Result<LimitSweep> {
    if ks.len() < 2 {
        return Err(Error::InsufficientData {
            what: "k sequence",
            samples: ks.len(),
        });
    }
    if !ks.windows(2).all(|w| w[1] < w[0]) || !(ks[0] <= K_MAX) {
        return Err(Error::param(
            "ks",
            "k values strictly decreasing in (0, 0.5]",
            ks[0],
        ));
    }
    let pr = *barriers.params();
    let variants = ks
        .iter()
        .map(|&k| barriers.with_params(crate::barriers::BarrierParams { k, ..pr }))
        .collect::<Result<Vec<_>>>()?;
    barriers.check_tau(cfg.tau_star)?;
    let grid = domain_for(barriers, cfg.depth, cfg.dx, cfg.margin)?;
    sweep(
        "k",
        ks,
        variants,
        Family::Five,
        (barriers.clone(), Family::Four),
        grid,
        cfg,
        exec,
    )
}

/// Family-5 runs for increasing `h'`, compared with the family-3 run.
pub fn h_prime_to_infinity<E: Executor>(
    barriers: &Barriers,
    h_primes: &[f64],
    cfg: &SweepConfig,
    exec: &E,
) -> Result<LimitSweep> {
    if h_primes.len() < 2 {
        return Err(Error::InsufficientData {
            what: "h' sequence",
            samples: h_primes.len(),
        });
    }
    if !h_primes.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::param(
            "h_primes",
            "h' values strictly increasing",
            h_primes[0],
        ));
    }
    let pr = *barriers.params();
    let variants = h_primes
        .iter()
        .map(|&h_prime| barriers.with_params(crate::barriers::BarrierParams { h_prime, ..pr }))
        .collect::<Result<Vec<_>>>()?;
    barriers.check_tau(cfg.tau_star)?;
    let wp = variants.last().expect("at least two values").params();
    let half = wp.lambda.max(wp.lambda_prime) * cfg.depth + wp.h.max(wp.h_prime) + cfg.margin;
    let grid = Grid1D::centered(0.0, half, cfg.dx)?;
    sweep(
        "h_prime",
        h_primes,
        variants,
        Family::Five,
        (barriers.clone(), Family::Three),
        grid,
        cfg,
        exec,
    )
}

/// Candidate limits of a co-moving trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    Zero,
    One,
    WaveLeft,
    WaveRight,
    Plateau,
}

/// Limit of `v(x + c tau, tau)` as `tau -> -infinity` for each family.
pub fn expected_limit(family: Family, c: f64, lambda: f64, lambda_prime: f64) -> Limit {
    let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
    if eq(c, lambda) {
        return Limit::WaveLeft;
    }
    if c > lambda {
        return Limit::Zero;
    }
    match family {
        Family::Three => Limit::Plateau,
        _ if eq(c, -lambda_prime) => Limit::WaveRight,
        _ if c < -lambda_prime => Limit::Zero,
        _ => Limit::One,
    }
}

/// Distances of the trace at one time to each candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub tau: f64,
    pub zero: f64,
    pub one: f64,
    pub wave_left: f64,
    pub wave_right: f64,
    /// `max |v - xi_k(tau)| / (1 - xi_k(tau))` on `[A, 2A]`.
    pub plateau: f64,
}

impl ScanSample {
    /// Plateau when the trace resolves the plateau deficit to 10%, otherwise
    /// the nearest of the remaining candidates.
    pub fn classify(&self) -> Limit {
        if self.plateau <= 0.1 {
            return Limit::Plateau;
        }
        let mut best = (Limit::Zero, self.zero);
        for cand in [
            (Limit::One, self.one),
            (Limit::WaveLeft, self.wave_left),
            (Limit::WaveRight, self.wave_right),
        ] {
            if cand.1 < best.1 {
                best = cand;
            }
        }
        best.0
    }

    pub fn distance_to(&self, limit: Limit) -> f64 {
        match limit {
            Limit::Zero => self.zero,
            Limit::One => self.one,
            Limit::WaveLeft => self.wave_left,
            Limit::WaveRight => self.wave_right,
            Limit::Plateau => self.plateau,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedScan {
    pub speed: f64,
    pub cutoff: f64,
    /// Ordered from the deepest time upward.
    pub samples: Vec<ScanSample>,
    /// Classification at the deepest sample.
    pub limit: Limit,
}

impl SpeedScan {
    /// Distance to the detected limit shrinks as the trace goes deeper.
    pub fn converging(&self) -> bool {
        match (self.samples.first(), self.samples.last()) {
            (Some(deep), Some(shallow)) => {
                deep.distance_to(self.limit) <= shallow.distance_to(self.limit)
            }
            _ => false,
        }
    }
}

/// Deepest time at which the co-moving window `[-A, 2A] + c tau` stays on
/// the grid.
pub fn deepest_scan_tau(grid: &Grid1D, c: f64, cutoff: f64) -> f64 {
    if c > 0.0 {
        (grid.x_min() + cutoff) / c
    } else if c < 0.0 {
        (grid.x_max() - 2.0 * cutoff) / c
    } else {
        f64::NEG_INFINITY
    }
}

/// Traces `v(x + c tau, tau)` for snapshots with `tau` in `tau_window` and
/// classifies the deepest one. Waves and constants are compared on
/// `[-A, A]`, the plateau on `[A, 2A]`.
pub fn speed_scan(
    run: &EvolutionResult,
    barriers: &Barriers,
    c: f64,
    cutoff: f64,
    tau_window: (f64, f64),
) -> Result<SpeedScan> {
    if !(cutoff > 0.0) {
        return Err(Error::param("cutoff", "A > 0", cutoff));
    }
    let pr = barriers.params();
    let mut samples = Vec::new();
    for f in &run.snapshots {
        if f.tau < tau_window.0 - 1e-9 || f.tau > tau_window.1 + 1e-9 {
            continue;
        }
        let shift = c * f.tau;
        if shift - cutoff < f.grid.x_min() || shift + 2.0 * cutoff > f.grid.x_max() {
            return Err(Error::WindowOutsideDomain {
                speed: c,
                tau: f.tau,
            });
        }
        let dx = f.grid.dx();
        let steps = math::round(cutoff / dx) as usize;
        let mut s = ScanSample {
            tau: f.tau,
            zero: 0.0,
            one: 0.0,
            wave_left: 0.0,
            wave_right: 0.0,
            plateau: 0.0,
        };
        for i in 0..=2 * steps {
            let y = -cutoff + i as f64 * dx;
            let v = f.sample(y + shift);
            s.zero = s.zero.max(v.abs());
            s.one = s.one.max((v - 1.0).abs());
            s.wave_left = s.wave_left.max((v - barriers.wave().value(y + pr.h)).abs());
            s.wave_right = s
                .wave_right
                .max((v - barriers.wave_prime().value(-y + pr.h_prime)).abs());
        }
        let xi = barriers.xi(f.tau);
        let deficit = 1.0 - xi;
        for i in 0..=steps {
            let y = cutoff + i as f64 * dx;
            let v = f.sample(y + shift);
            s.plateau = s.plateau.max((v - xi).abs() / deficit);
        }
        samples.push(s);
    }
    let first = samples.first().ok_or(Error::InsufficientData {
        what: "snapshots in the scan window",
        samples: 0,
    })?;
    let limit = first.classify();
    Ok(SpeedScan {
        speed: c,
        cutoff,
        samples,
        limit,
    })
}

/// Fitted exponential rate of a decaying quantity, with its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub expected: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub passes: bool,
}

fn fit_rate(taus: &[f64], values: &[f64], what: &'static str) -> Result<(f64, usize)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 1e-14)
        .map(|(&t, &v)| (t, math::ln(v)))
        .unzip();
    let fit = fit_line(&xs, &ys).ok_or(Error::InsufficientData {
        what,
        samples: xs.len(),
    })?;
    Ok((fit.slope, fit.samples))
}

/// Rate at which the maximum of the deepest run approaches its limit.
///
/// Family 4: slope of `ln(1 - max v)`, expected `rate_d` within 5%.
/// Families 5 and 3: slope of `ln|max v - xi_k|`, expected at least
/// `0.95 (p - 1)/p`.
pub fn max_asymptotics(
    run: &AncientRun,
    barriers: &Barriers,
    window: (f64, f64),
) -> Result<RateFit> {
    let exp = barriers.exponents();
    let pr = barriers.params();
    let deepest = run.deepest();
    let (mut taus, mut gaps) = (Vec::new(), Vec::new());
    for f in &deepest.snapshots {
        if f.tau < window.0 - 1e-9 || f.tau > window.1 + 1e-9 {
            continue;
        }
        let top = f.max();
        let gap = match run.family {
            Family::Four => 1.0 - top,
            _ => (top - barriers.xi(f.tau)).abs(),
        };
        taus.push(f.tau);
        gaps.push(gap);
    }
    if let Some(&last) = gaps.last() {
        if !(last < 1e-2) {
            return Err(Error::InsufficientData {
                what: "window not deep enough for 1 - max v < 1e-2",
                samples: gaps.len(),
            });
        }
    }
    match run.family {
        Family::Four => {
            let (rate, samples) = fit_rate(&taus, &gaps, "1 - max v")?;
            let expected = rate_d(pr.lambda, pr.lambda_prime, exp)?;
            Ok(RateFit {
                rate,
                expected,
                window,
                samples,
                passes: ((rate - expected) / expected).abs() <= 0.05,
            })
        }
        _ => {
            let expected = exp.alpha();
            if gaps.iter().all(|&g| g <= 1e-14) && !gaps.is_empty() {
                // The maximum equals xi_k to working precision.
                return Ok(RateFit {
                    rate: f64::INFINITY,
                    expected,
                    window,
                    samples: gaps.len(),
                    passes: true,
                });
            }
            let (rate, samples) = fit_rate(&taus, &gaps, "|max v - xi_k|")?;
            Ok(RateFit {
                rate,
                expected,
                window,
                samples,
                passes: rate >= 0.95 * expected,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub taus: Vec<f64>,
    /// `e^((1-m)(tau_bar0 - tau)) int (min - combined) dx` for the family-4
    /// ingredients on a common time.
    pub integrals: Vec<f64>,
    pub fit: RateFit,
}

/// Weighted `L1` distance between the family-4 lower barrier and the
/// minimum of its ingredients per time, with its fitted decay rate against
/// `gamma gamma' / p` (10% band).
pub fn uniqueness_gap_quadrature(
    barriers: &Barriers,
    taus: &[f64],
    dx: f64,
) -> Result<UniquenessReport> {
    if taus.len() < 3 {
        return Err(Error::InsufficientData {
            what: "quadrature times",
            samples: taus.len(),
        });
    }
    if !(dx > 0.0) {
        return Err(Error::param("dx", "dx > 0", dx));
    }
    let exp = barriers.exponents();
    let pr = barriers.params();
    let p = exp.p();
    let mut integrals = Vec::with_capacity(taus.len());
    for &tau in taus {
        barriers.check_tau(tau)?;
        let s = barriers.time(tau).abs();
        let lo = -(pr.lambda * s + pr.h + 30.0);
        let hi = pr.lambda_prime * s + pr.h_prime + 30.0;
        let n = math::ceil((hi - lo) / dx) as usize;
        let h = (hi - lo) / n as f64;
        let g = |x: f64| {
            barriers.ingredient_min(Family::Four, x, tau) - barriers.lower(Family::Four, x, tau)
        };
        let mut sum = 0.0;
        let mut peak: f64 = 0.0;
        for i in 0..=n {
            let gi = g(lo + i as f64 * h);
            if gi < 0.0 {
                return Err(Error::NonPositive { tau, index: i });
            }
            peak = peak.max(gi);
            sum += if i == 0 || i == n { 0.5 * gi } else { gi };
        }
        let (gl, gr) = (g(lo), g(hi));
        for (side, edge, inner) in [("left", gl, g(lo + 1.0)), ("right", gr, g(hi - 1.0))] {
            if edge > 1e-6 * peak && edge >= inner {
                return Err(Error::NonIntegrableTail { side, tau });
            }
        }
        // Both tails decay at least like e^(p^2 |x|).
        let tails = (gl + gr) / (p * p);
        let weight = math::exp(exp.alpha() * (pr.tau_bar0 - tau));
        integrals.push(weight * (sum * h + tails));
    }
    let (rate, samples) = fit_rate(taus, &integrals, "uniqueness integrals")?;
    let g1 = gamma_roots(pr.lambda, exp)?.gamma_small;
    let g2 = gamma_roots(pr.lambda_prime, exp)?.gamma_small;
    let expected = g1 * g2 / p;
    let (t0, t1) = taus
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| {
            (a.min(t), b.max(t))
        });
    Ok(UniquenessReport {
        taus: taus.to_vec(),
        integrals,
        fit: RateFit {
            rate,
            expected,
            window: (t0, t1),
            samples,
            passes: ((rate - expected) / expected).abs() <= 0.1,
        },
    })
}

/// Fitted slopes of the crossing points against their asymptotic rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingFit {
    pub x_slope: f64,
    pub y_slope: f64,
    pub z_slope: f64,
    /// `(gamma - gamma') / p`, `gamma / p`, `-gamma' / p`.
    pub expected: [f64; 3],
    pub samples: usize,
}

impl CrossingFit {
    /// Each slope within `rel` of its rate; a zero rate must be met to 1e-8.
    pub fn within(&self, rel: f64) -> bool {
        let ok = |got: f64, want: f64| {
            if want == 0.0 {
                got.abs() <= 1e-8
            } else {
                ((got - want) / want).abs() <= rel
            }
        };
        ok(self.x_slope, self.expected[0])
            && ok(self.y_slope, self.expected[1])
            && ok(self.z_slope, self.expected[2])
    }
}

/// Line fits of `x(tau)`, `y(tau)`, `z(tau)` over `taus`.
pub fn crossing_asymptotics(barriers: &Barriers, taus: &[f64]) -> Result<CrossingFit> {
    let mut cols = [Vec::new(), Vec::new(), Vec::new()];
    for &tau in taus {
        let c = barriers.crossing_roots(tau)?;
        cols[0].push(c.x_tau);
        cols[1].push(c.y_tau);
        cols[2].push(c.z_tau);
    }
    let slope = |ys: &[f64]| {
        fit_line(taus, ys)
            .map(|f| f.slope)
            .ok_or(Error::InsufficientData {
                what: "crossing times",
                samples: taus.len(),
            })
    };
    let exp = barriers.exponents();
    let pr = barriers.params();
    let g1 = gamma_roots(pr.lambda, exp)?.gamma_small;
    let g2 = gamma_roots(pr.lambda_prime, exp)?.gamma_small;
    let p = exp.p();
    let x_expected = if pr.lambda == pr.lambda_prime {
        0.0
    } else {
        (g1 - g2) / p
    };
    Ok(CrossingFit {
        x_slope: slope(&cols[0])?,
        y_slope: slope(&cols[1])?,
        z_slope: slope(&cols[2])?,
        expected: [x_expected, g1 / p, -g2 / p],
        samples: taus.len(),
    })
}

/// Largest violations of the pointwise barrier relations on a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingReport {
    /// `max (f_lower - f_upper)` over all families.
    pub sandwich: f64,
    /// `max (f5 - min(f4, f3))` for the lower barriers.
    pub lower_families: f64,
    /// Same for the upper barriers.
    pub upper_families: f64,
    pub samples: usize,
}

impl OrderingReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.sandwich <= tol && self.lower_families <= tol && self.upper_families <= tol
    }
}

pub fn barrier_orderings(barriers: &Barriers, xs: &[f64], taus: &[f64]) -> Result<OrderingReport> {
    let mut r = OrderingReport {
        sandwich: f64::NEG_INFINITY,
        lower_families: f64::NEG_INFINITY,
        upper_families: f64::NEG_INFINITY,
        samples: 0,
    };
    for &tau in taus {
        barriers.check_tau(tau)?;
        for &x in xs {
            let lo = [Family::Five, Family::Four, Family::Three].map(|f| barriers.lower(f, x, tau));
            let up = [Family::Five, Family::Four, Family::Three].map(|f| barriers.upper(f, x, tau));
            for i in 0..3 {
                r.sandwich = r.sandwich.max(lo[i] - up[i]);
            }
            r.lower_families = r.lower_families.max(lo[0] - lo[1].min(lo[2]));
            r.upper_families = r.upper_families.max(up[0] - up[1].min(up[2]));
            r.samples += 1;
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::BarrierParams;
    use crate::exponents::Exponents;

    fn barriers() -> Barriers {
        let e = Exponents::new(3).unwrap();
        Barriers::solve(BarrierParams::default(), e, 1e-3).unwrap()
    }

    #[test]
    fn expected_table() {
        use Limit::*;
        let (l, lp) = (2.0, 2.0);
        let cs = [-4.0, -2.0, 0.0, 2.0, 4.0];
        let five: Vec<Limit> = cs
            .iter()
            .map(|&c| expected_limit(Family::Five, c, l, lp))
            .collect();
        assert_eq!(five, [Zero, WaveRight, One, WaveLeft, Zero]);
        let three: Vec<Limit> = cs
            .iter()
            .map(|&c| expected_limit(Family::Three, c, l, lp))
            .collect();
        assert_eq!(three, [Plateau, Plateau, Plateau, WaveLeft, Zero]);
    }

    #[test]
    fn classify_prefers_plateau() {
        let s = ScanSample {
            tau: -20.0,
            zero: 1.0,
            one: 1e-9,
            wave_left: 0.5,
            wave_right: 0.5,
            plateau: 0.01,
        };
        assert_eq!(s.classify(), Limit::Plateau);
        let s = ScanSample { plateau: 3.0, ..s };
        assert_eq!(s.classify(), Limit::One);
    }

    #[test]
    fn domain_centres_on_symmetry_point() {
        let b = barriers();
        let b = b
            .with_params(BarrierParams {
                h: 1.0,
                h_prime: 5.0,
                ..*b.params()
            })
            .unwrap();
        let g = domain_for(&b, 15.0, 0.01, 8.0).unwrap();
        assert!((0.5 * (g.x_min() + g.x_max()) - 2.0).abs() < 1e-9);
        assert!(g.x_max() - 2.0 >= 2.0 * 15.0 + 5.0 + 8.0 - 1e-9);
    }

    #[test]
    fn scan_window_limits() {
        let g = Grid1D::centered(0.0, 68.0, 0.01).unwrap();
        assert!((deepest_scan_tau(&g, 4.0, 5.0) + 15.75).abs() < 1e-9);
        assert!((deepest_scan_tau(&g, -4.0, 5.0) + 14.5).abs() < 1e-9);
        assert_eq!(deepest_scan_tau(&g, 0.0, 5.0), f64::NEG_INFINITY);
    }

    #[test]
    fn build_rejects_bad_starts() {
        let b = barriers();
        let cfg = AncientConfig {
            starts: alloc::vec![20.0, 15.0],
            ..AncientConfig::default()
        };
        assert!(build_ancient(&b, &cfg, &crate::executor::Sequential).is_err());
        let cfg = AncientConfig {
            starts: alloc::vec![5.0],
            ..AncientConfig::default()
        };
        assert!(build_ancient(&b, &cfg, &crate::executor::Sequential).is_err());
    }

    #[test]
    fn crossing_slopes_symmetric_and_not() {
        let b = barriers();
        let taus: Vec<f64> = (0..=20).map(|i| -40.0 + i as f64).collect();
        let fit = crossing_asymptotics(&b, &taus).unwrap();
        assert_eq!(fit.expected[0], 0.0);
        assert!(fit.within(0.05), "{fit:?}");
        let e = Exponents::new(3).unwrap();
        let asym = Barriers::solve(
            BarrierParams {
                lambda_prime: 3.0,
                ..BarrierParams::default()
            },
            e,
            1e-3,
        )
        .unwrap();
        let fit = crossing_asymptotics(&asym, &taus).unwrap();
        assert!(fit.expected[0] > 0.0);
        assert!(fit.within(0.05), "{fit:?}");
    }

    #[test]
    fn barrier_relations_on_samples() {
        let b = barriers();
        let xs: Vec<f64> = (0..=200).map(|i| -80.0 + 0.8 * i as f64).collect();
        let r = barrier_orderings(&b, &xs, &[-40.0, -25.0, -10.0]).unwrap();
        assert_eq!(r.samples, 603);
        assert!(r.holds(1e-12), "{r:?}");
    }

    #[test]
    fn uniqueness_integrand_and_rate() {
        let b = barriers();
        let taus: Vec<f64> = (0..=6).map(|i| -40.0 + 5.0 * i as f64).collect();
        let r = uniqueness_gap_quadrature(&b, &taus, 0.02).unwrap();
        assert!(r.integrals.iter().all(|&i| i.is_finite() && i > 0.0));
        assert!(r.fit.passes, "{:?}", r.fit);
    }
}
