//! One function per CLI verb. Each returns a details document and a list of
//! named checks; [`run_command`] writes them as `report.json` next to the
//! verb's artifacts and a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use yamabe_core::barriers::{check_subsolution, check_supersolution, validate_horizon};
use yamabe_core::experiments::{
    barrier_orderings, build_ancient, crossing_asymptotics, deepest_scan_tau, domain_for,
    expected_limit, h_prime_to_infinity, initial_field, k_to_zero_limit, max_asymptotics,
    sandwich_tolerance, speed_scan, AncientConfig, InitialData, Limit, LimitSweep,
};
use yamabe_core::wave::wave_tail_fit;
use yamabe_core::{gamma_roots, solve_wave, Barriers, Executor, Field, Solver, SolverConfig};

use crate::config::RunConfig;
use crate::error::LabError;
use crate::output::{config_hash, ArtifactDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Verb {
    Wave,
    Barrier,
    Evolve,
    Ancient,
    Limits,
    Scan,
    Report,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Wave => "wave",
            Verb::Barrier => "barrier",
            Verb::Evolve => "evolve",
            Verb::Ancient => "ancient",
            Verb::Limits => "limits",
            Verb::Scan => "scan",
            Verb::Report => "report",
        }
    }
}

/// A named pass/fail outcome with the measured value and its limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub limit: Option<f64>,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value: Some(value),
            limit: Some(limit),
        }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= limit,
            value: Some(value),
            limit: Some(limit),
        }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            value: None,
            limit: None,
        }
    }
}

/// What a successful verb left on disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub checks: Vec<Check>,
}

type Produced = (Value, Vec<Check>);

/// Slack for pointwise barrier relations evaluated along different paths.
pub const ORDER_ROUNDOFF: f64 = 1e-14;

/// Validates `cfg`, runs `verb` into `out_root/<verb>/`, and writes the
/// report and manifest. Failed checks are reported after all artifacts exist.
pub fn run_command<E: Executor>(
    verb: Verb,
    cfg: &RunConfig,
    out_root: &Path,
    exec: &E,
) -> Result<Outcome, LabError> {
    cfg.validate()?;
    let mut dir = ArtifactDir::create(out_root.join(verb.name()))?;
    let (details, checks) = match verb {
        Verb::Wave => wave(cfg, &mut dir)?,
        Verb::Barrier => barrier(cfg, &mut dir)?,
        Verb::Evolve => evolve(cfg, &mut dir)?,
        Verb::Ancient => ancient(cfg, &mut dir, exec)?,
        Verb::Limits => limits(cfg, &mut dir, exec)?,
        Verb::Scan => scan(cfg, &mut dir, exec)?,
        Verb::Report => report(out_root)?,
    };
    let all_passed = checks.iter().all(|c| c.passed);
    dir.json(
        "report.json",
        &json!({
            "verb": verb.name(),
            "config_hash": config_hash(cfg),
            "all_passed": all_passed,
            "checks": checks,
            "details": details,
        }),
    )?;
    let path = dir.path().to_path_buf();
    let files = dir.finish(verb.name(), cfg)?;
    if !all_passed {
        return Err(LabError::ChecksFailed {
            verb: verb.name().to_string(),
            failed: checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.clone())
                .collect(),
        });
    }
    Ok(Outcome {
        dir: path,
        files,
        checks,
    })
}

fn barriers_for(cfg: &RunConfig) -> Result<(Barriers, Value), LabError> {
    let b = Barriers::solve(cfg.barrier.params(), cfg.exponents(), cfg.wave.dx)?;
    if !cfg.barrier.validate_horizon {
        return Ok((b, Value::Null));
    }
    let (b, h) = validate_horizon(
        &b,
        cfg.family(),
        cfg.solver.dx,
        cfg.barrier.tol,
        cfg.barrier.max_tightenings,
    )?;
    let info = json!({
        "tau_bar0": h.tau_bar0,
        "tightenings": h.tightenings,
        "max_residual": h.subsolution.max_residual,
    });
    Ok((b, info))
}

fn span(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|i| from + i as f64 * step).collect()
}

fn wave(cfg: &RunConfig, dir: &mut ArtifactDir) -> Result<Produced, LabError> {
    let exp = cfg.exponents();
    let w = &cfg.wave;
    let tol = 10.0 * w.dx * w.dx;
    let mut summary = Vec::new();
    let mut checks = Vec::new();
    for &lambda in &w.lambdas {
        let prof = solve_wave(lambda, &exp, (w.domain[0], w.domain[1]), w.dx)?;
        let tag = format!("lambda_{lambda}");
        let xs = prof.xs();
        dir.csv(
            &format!("profile_{tag}.csv"),
            &["x", "v", "dv"],
            xs.iter()
                .zip(prof.values())
                .zip(prof.slopes())
                .map(|((&x, &v), &d)| [x, v, d]),
        )?;
        let gamma = gamma_roots(lambda, &exp)?.gamma_small;
        let fit = match prof.tail_fit() {
            Some(f) => *f,
            None => wave_tail_fit(&prof)?,
        };
        let residual = prof.ode_residual();
        let mid = prof.value(0.0);
        let monotone = prof.values().windows(2).all(|p| p[1] > p[0]);
        let (lo, hi) = prof.span();
        let entry = json!({
            "lambda": lambda,
            "n": cfg.n,
            "dx": w.dx,
            "span": [lo, hi],
            "nodes": prof.len(),
            "v_at_zero": mid,
            "gamma": gamma,
            "gamma_fit": fit.gamma_fit,
            "c_lambda": fit.c_lambda,
            "left_amp": fit.left_amp,
            "left_slope": fit.left_slope,
            "ode_residual": residual,
        });
        dir.json(&format!("profile_{tag}.json"), &entry)?;
        checks.push(Check::at_most(
            format!("{tag}: |v(0) - 1/2|"),
            (mid - 0.5).abs(),
            1e-6,
        ));
        checks.push(Check::flag(format!("{tag}: strictly increasing"), monotone));
        checks.push(Check::at_most(
            format!("{tag}: ODE residual"),
            residual,
            tol,
        ));
        checks.push(Check::at_most(
            format!("{tag}: right tail rate rel. error"),
            (fit.gamma_fit / gamma - 1.0).abs(),
            0.01,
        ));
        checks.push(Check::at_most(
            format!("{tag}: left tail slope rel. error"),
            (fit.left_slope / exp.p() - 1.0).abs(),
            0.01,
        ));
        summary.push(entry);
    }
    Ok((json!({ "profiles": summary }), checks))
}

fn barrier(cfg: &RunConfig, dir: &mut ArtifactDir) -> Result<Produced, LabError> {
    let (b, horizon) = barriers_for(cfg)?;
    let exp = *b.exponents();
    let pr = *b.params();
    let family = cfg.family();
    let dx = cfg.solver.dx;
    let reach = |tau: f64| {
        (
            -(pr.lambda * tau.abs() + pr.h + 20.0),
            pr.lambda_prime * tau.abs() + pr.h_prime + 20.0,
        )
    };

    let scan_taus: Vec<f64> = (0..4).map(|i| pr.tau_bar0 - 10.0 * i as f64).collect();
    let mut rows = Vec::new();
    let mut super_checks = Vec::new();
    for &tau in &scan_taus {
        let (lo, hi) = reach(tau);
        let xs = span(lo, hi, dx);
        let upper = b.upper_samples(family, &xs, tau);
        let kinks = b.upper_kinks(family, tau)?;
        let sc = check_supersolution(&upper, xs[0], dx, &exp, &kinks);
        super_checks.push((tau, sc));
        for (x, u) in xs.iter().zip(&upper).step_by(5) {
            rows.push([*x, b.lower(family, *x, tau), *u, tau]);
        }
    }
    dir.csv("scan.csv", &["x", "f_lower", "f_upper", "tau"], &rows)?;

    let crossing_taus = span(pr.tau_bar0 - 30.0, pr.tau_bar0, 0.5);
    let mut crossings = Vec::with_capacity(crossing_taus.len());
    for &tau in &crossing_taus {
        let c = b.crossing_roots(tau)?;
        crossings.push([tau, c.x_tau, c.y_tau, c.z_tau]);
    }
    dir.csv("crossings.csv", &["tau", "x", "y", "z"], &crossings)?;

    let deepest = pr.tau_bar0 - 30.0;
    let (lo, hi) = reach(deepest);
    let order_xs = span(lo, hi, (hi - lo) / 2499.0);
    let order_taus = [pr.tau_bar0, pr.tau_bar0 - 10.0, pr.tau_bar0 - 20.0, deepest];
    let orderings = barrier_orderings(&b, &order_xs, &order_taus)?;

    let sub_taus: Vec<f64> = (0..=30).map(|i| pr.tau_bar0 - i as f64).collect();
    let sub = check_subsolution(&b, family, &sub_taus, &span(lo, hi, dx))?;

    let fit_end = pr.tau_bar0.min(-20.0);
    let fit_taus = span(fit_end - 20.0, fit_end, 1.0);
    let fit = crossing_asymptotics(&b, &fit_taus)?;

    let flux_tol = 10.0 * dx * dx;
    let mut checks = vec![
        Check::at_most(
            "sandwich f_lower <= f_upper",
            orderings.sandwich,
            ORDER_ROUNDOFF,
        ),
        Check::at_most(
            "lower families ordered",
            orderings.lower_families,
            ORDER_ROUNDOFF,
        ),
        Check::at_most(
            "upper families ordered",
            orderings.upper_families,
            ORDER_ROUNDOFF,
        ),
        Check::at_most("subsolution residual", sub.max_residual, cfg.barrier.tol),
        Check::flag("crossing slopes within 5%", fit.within(0.05)),
    ];
    for (tau, sc) in &super_checks {
        checks.push(Check::at_most(
            format!("supersolution residual at tau = {tau}"),
            sc.max_residual,
            flux_tol,
        ));
        checks.push(Check::flag(
            format!("kink flux jumps at tau = {tau}"),
            sc.kinks.iter().all(|k| k.is_concave(flux_tol)),
        ));
    }
    let supers: Vec<Value> = super_checks
        .iter()
        .map(|(tau, sc)| {
            json!({
                "tau": tau,
                "max_residual": sc.max_residual,
                "kinks": sc.kinks.iter().map(|k| json!({
                    "x": k.x, "left_flux": k.left_flux, "right_flux": k.right_flux,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let details = json!({
        "family": family.count(),
        "horizon": horizon,
        "orderings": {
            "sandwich": orderings.sandwich,
            "lower_families": orderings.lower_families,
            "upper_families": orderings.upper_families,
            "samples": orderings.samples,
        },
        "subsolution": { "max_residual": sub.max_residual, "x": sub.x, "tau": sub.tau },
        "supersolution": supers,
        "crossing_fit": {
            "window": [fit_taus[0], fit_end],
            "slopes": [fit.x_slope, fit.y_slope, fit.z_slope],
            "expected": fit.expected,
        },
    });
    Ok((details, checks))
}

fn evolve(cfg: &RunConfig, dir: &mut ArtifactDir) -> Result<Produced, LabError> {
    let (b, _) = barriers_for(cfg)?;
    let family = cfg.family();
    let depth = *cfg.experiment.starts.last().expect("validated");
    let grid = domain_for(&b, depth, cfg.solver.dx, cfg.solver.margin)?;
    let init = initial_field(&b, family, grid, -depth, cfg.experiment.initial.into())?;
    let config = SolverConfig {
        sandwich: Some(family),
        ..cfg.solver.solver_config()
    };
    let solver = Solver::new(*b.exponents(), config, cfg.solver.mode(family), Some(&b))?;
    let run = solver.evolve(init, cfg.experiment.tau_star)?;

    let every = cfg.output.snapshot_every;
    let last = run.snapshots.len() - 1;
    let mut index = Vec::new();
    for (i, f) in run.snapshots.iter().enumerate() {
        if i % every != 0 && i != last {
            continue;
        }
        write_field(dir, &format!("snapshots/snap_{i:05}.csv"), f)?;
        index.push([i as f64, f.tau, f.max()]);
    }
    dir.csv("snapshots.csv", &["index", "tau", "max"], &index)?;
    dir.csv(
        "max_track.csv",
        &["tau", "x0", "value"],
        run.max_track.iter().map(|m| [m.tau, m.x0, m.value]),
    )?;
    dir.csv(
        "sandwich.csv",
        &["tau", "lower_margin", "upper_margin"],
        run.sandwich_margins
            .iter()
            .map(|s| [s.tau, s.lower, s.upper]),
    )?;
    dir.csv(
        "newton.csv",
        &["step", "iterations", "residual"],
        run.newton_stats
            .iter()
            .enumerate()
            .map(|(i, s)| [i as f64, f64::from(s.iterations), s.residual]),
    )?;

    let tol = sandwich_tolerance(cfg.solver.dx, cfg.solver.dt);
    let worst = run.worst_sandwich();
    let max_iter = run
        .newton_stats
        .iter()
        .map(|s| s.iterations)
        .max()
        .unwrap_or(0);
    let details = json!({
        "family": family.count(),
        "start": -depth,
        "tau_end": cfg.experiment.tau_star,
        "grid": { "x_min": grid.x_min(), "x_max": grid.x_max(), "nx": grid.nx(), "dx": grid.dx() },
        "dt": cfg.solver.dt,
        "scheme": cfg.solver.scheme,
        "boundary": cfg.solver.boundary,
        "steps": run.newton_stats.len(),
        "max_newton_iterations": max_iter,
        "worst_sandwich": worst,
    });
    Ok((
        details,
        vec![Check::at_least("sandwich margin", worst, -tol)],
    ))
}

fn write_field(dir: &mut ArtifactDir, name: &str, f: &Field) -> Result<(), LabError> {
    dir.csv(
        name,
        &["x", "v"],
        f.values.iter().enumerate().map(|(i, &v)| [f.grid.x(i), v]),
    )
}

fn ancient<E: Executor>(
    cfg: &RunConfig,
    dir: &mut ArtifactDir,
    exec: &E,
) -> Result<Produced, LabError> {
    let (b, _) = barriers_for(cfg)?;
    let acfg = cfg.ancient_config();
    let run = build_ancient(&b, &acfg, exec)?;
    write_field(dir, "limit.csv", &run.limit_estimate)?;
    dir.csv(
        "max_track.csv",
        &["tau", "x0", "value"],
        run.deepest()
            .max_track
            .iter()
            .map(|m| [m.tau, m.x0, m.value]),
    )?;
    dir.csv(
        "cauchy.csv",
        &["start", "next_start", "gap", "slope_gap"],
        run.starts
            .windows(2)
            .zip(run.cauchy_gaps.iter().zip(&run.cauchy_slope_gaps))
            .map(|(s, (&g, &sg))| [s[0], s[1], g, sg]),
    )?;

    let dx = acfg.dx;
    let tol = sandwich_tolerance(dx, acfg.solver.dt);
    let deepest = *run.starts.last().expect("validated");
    // Skip the first five time units of relaxation, or half the run if shorter.
    let fit_from = (-deepest + 5.0).min(0.5 * (acfg.tau_star - deepest));
    let rate_window = (fit_from, acfg.tau_star);
    let rate = max_asymptotics(&run, &b, rate_window)?;
    let mut checks = vec![
        Check::at_least("sandwich margin", run.worst_sandwich(), -tol),
        Check::at_most("pointwise increase in tau", run.max_increase(), 1e-10),
        Check::flag(
            "Cauchy gaps strictly decreasing",
            run.gaps_strictly_decreasing(),
        ),
        Check::flag("max-value rate", rate.passes),
    ];
    if let Some(off) = run.worst_argmax_offset() {
        checks.push(Check::at_most("argmax offset", off, dx));
    }
    let runs: Vec<Value> = run
        .starts
        .iter()
        .zip(&run.checks)
        .map(|(a, c)| {
            json!({
                "start": a,
                "worst_sandwich": c.worst_sandwich,
                "max_increase": c.max_increase,
                "argmax_offset": c.argmax_offset,
            })
        })
        .collect();
    let details = json!({
        "family": run.family.count(),
        "tau_star": run.tau_star,
        "window": [run.window.0, run.window.1],
        "runs": runs,
        "cauchy_gaps": run.cauchy_gaps,
        "cauchy_slope_gaps": run.cauchy_slope_gaps,
        "max_rate": {
            "rate": rate.rate,
            "expected": rate.expected,
            "window": [rate.window.0, rate.window.1],
            "samples": rate.samples,
        },
    });
    Ok((details, checks))
}

fn sweep_artifacts(
    dir: &mut ArtifactDir,
    name: &str,
    s: &LimitSweep,
    checks: &mut Vec<Check>,
) -> Result<Value, LabError> {
    let mut header: Vec<String> = vec!["x".into()];
    header.extend((0..s.values.len()).map(|i| format!("v_{i}")));
    header.push("target".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let base = &s.fields[0];
    let rows = base.window(s.window.0, s.window.1).map(|i| {
        let x = base.grid.x(i);
        let mut row = vec![x];
        row.extend(s.fields.iter().map(|f| f.values[i]));
        row.push(s.target.sample(x));
        row
    });
    dir.csv(&format!("{name}.csv"), &header, rows)?;
    checks.push(Check::at_most(
        format!("{name}: parameter monotonicity"),
        s.ordering_violation,
        1e-8,
    ));
    checks.push(Check::flag(
        format!("{name}: gaps strictly decreasing"),
        s.gaps_decreasing(),
    ));
    Ok(json!({
        "parameter": s.parameter,
        "values": s.values,
        "gaps": s.gaps,
        "ordering_violation": s.ordering_violation,
        "window": [s.window.0, s.window.1],
    }))
}

fn limits<E: Executor>(
    cfg: &RunConfig,
    dir: &mut ArtifactDir,
    exec: &E,
) -> Result<Produced, LabError> {
    let (b, _) = barriers_for(cfg)?;
    let x = &cfg.experiment;
    let mut checks = Vec::new();
    let k = k_to_zero_limit(&b, &x.ks, &cfg.sweep_config(InitialData::Lower), exec)?;
    let k = sweep_artifacts(dir, "k_sweep", &k, &mut checks)?;
    let h = h_prime_to_infinity(&b, &x.h_primes, &cfg.sweep_config(InitialData::Upper), exec)?;
    let h = sweep_artifacts(dir, "h_prime_sweep", &h, &mut checks)?;
    Ok((json!({ "k": k, "h_prime": h }), checks))
}

fn limit_name(l: Limit) -> &'static str {
    match l {
        Limit::Zero => "zero",
        Limit::One => "one",
        Limit::WaveLeft => "wave_left",
        Limit::WaveRight => "wave_right",
        Limit::Plateau => "plateau",
    }
}

fn scan<E: Executor>(
    cfg: &RunConfig,
    dir: &mut ArtifactDir,
    exec: &E,
) -> Result<Produced, LabError> {
    let (b, _) = barriers_for(cfg)?;
    let pr = *b.params();
    let deepest = *cfg.experiment.starts.last().expect("validated");
    let acfg = AncientConfig {
        starts: vec![deepest],
        ..cfg.ancient_config()
    };
    let run = build_ancient(&b, &acfg, exec)?;
    let deep_run = run.deepest();
    let grid = deep_run.snapshots[0].grid;
    let cutoff = cfg.experiment.cutoff;
    let mut checks = Vec::new();
    let mut table = Vec::new();
    for c in cfg.speeds() {
        let from = deepest_scan_tau(&grid, c, cutoff).max(-deepest + 1.0);
        let s = speed_scan(deep_run, &b, c, cutoff, (from, acfg.tau_star))?;
        dir.csv(
            &format!("scan_c_{c}.csv"),
            &["tau", "zero", "one", "wave_left", "wave_right", "plateau"],
            s.samples
                .iter()
                .map(|p| [p.tau, p.zero, p.one, p.wave_left, p.wave_right, p.plateau]),
        )?;
        let want = expected_limit(acfg.family, c, pr.lambda, pr.lambda_prime);
        let first = s.samples[0];
        checks.push(Check::flag(
            format!(
                "c = {c}: {} expected {}",
                limit_name(s.limit),
                limit_name(want)
            ),
            s.limit == want,
        ));
        if c == pr.lambda {
            checks.push(Check::at_most(
                format!("c = {c}: distance to left wave"),
                first.wave_left,
                0.02,
            ));
        }
        table.push(json!({
            "speed": c,
            "tau": first.tau,
            "limit": limit_name(s.limit),
            "expected": limit_name(want),
            "distance": first.distance_to(s.limit),
            "converging": s.converging(),
        }));
    }
    let details = json!({
        "family": acfg.family.count(),
        "start": -deepest,
        "cutoff": cutoff,
        "speeds": table,
    });
    Ok((details, checks))
}

/// Collects `<root>/<verb>/report.json` for every other verb, sorted by name.
fn report(root: &Path) -> Result<Produced, LabError> {
    let entries = fs::read_dir(root).map_err(|e| LabError::io(root, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| LabError::io(root, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != Verb::Report.name() && entry.path().join("report.json").is_file() {
            names.push(name);
        }
    }
    names.sort();
    let mut reports = Map::new();
    let mut checks = Vec::new();
    for name in names {
        let path = root.join(&name).join("report.json");
        let text = fs::read_to_string(&path).map_err(|e| LabError::io(&path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| {
            LabError::io(
                &path,
                std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            )
        })?;
        let passed = value["all_passed"].as_bool().unwrap_or(false);
        checks.push(Check::flag(format!("{name}: all checks passed"), passed));
        reports.insert(name, value);
    }
    checks.push(Check::flag(
        "at least one report found",
        !reports.is_empty(),
    ));
    Ok((json!({ "reports": reports }), checks))
}
