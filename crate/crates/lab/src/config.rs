//! Run configuration read from TOML. Every block has defaults, so an empty
//! document is a complete configuration.

use serde::{Deserialize, Serialize};
use yamabe_core::barriers::{BarrierParams, Family, K_MAX};
use yamabe_core::experiments::{AncientConfig, InitialData, SweepConfig, DOMAIN_MARGIN, WINDOW};
use yamabe_core::solver::{BoundaryMode, Scheme, SolverConfig};
use yamabe_core::Exponents;

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dimension; `m = (n - 2)/(n + 2)`.
    pub n: u32,
    pub wave: WaveBlock,
    pub barrier: BarrierBlock,
    pub solver: SolverBlock,
    pub experiment: ExperimentBlock,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 3,
            wave: WaveBlock::default(),
            barrier: BarrierBlock::default(),
            solver: SolverBlock::default(),
            experiment: ExperimentBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveBlock {
    pub lambdas: Vec<f64>,
    pub domain: [f64; 2],
    pub dx: f64,
}

impl Default for WaveBlock {
    fn default() -> Self {
        Self {
            lambdas: vec![2.0],
            domain: [-10.0, 120.0],
            dx: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierBlock {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub h: f64,
    pub h_prime: f64,
    pub k: f64,
    pub q: f64,
    pub tau_bar0: f64,
    /// Push `tau_bar0` deeper until the subsolution residual is below `tol`.
    pub validate_horizon: bool,
    pub tol: f64,
    pub max_tightenings: usize,
}

impl Default for BarrierBlock {
    fn default() -> Self {
        let p = BarrierParams::default();
        Self {
            lambda: p.lambda,
            lambda_prime: p.lambda_prime,
            h: p.h,
            h_prime: p.h_prime,
            k: p.k,
            q: p.q,
            tau_bar0: p.tau_bar0,
            validate_horizon: false,
            tol: 1e-8,
            max_tightenings: 3,
        }
    }
}

impl BarrierBlock {
    pub fn params(&self) -> BarrierParams {
        BarrierParams {
            lambda: self.lambda,
            lambda_prime: self.lambda_prime,
            h: self.h,
            h_prime: self.h_prime,
            k: self.k,
            q: self.q,
            tau_bar0: self.tau_bar0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    BackwardEuler,
    CrankNicolson,
    Bdf2,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::BackwardEuler => Scheme::BackwardEuler,
            SchemeName::CrankNicolson => Scheme::CrankNicolson,
            SchemeName::Bdf2 => Scheme::Bdf2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    Dirichlet,
    Neumann,
    Frozen,
    ZeroFlux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub dx: f64,
    pub dt: f64,
    pub scheme: SchemeName,
    pub boundary: BoundaryName,
    /// Room beyond the outermost front when sizing the domain.
    pub margin: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub record_every: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            dx: 0.01,
            dt: 1e-3,
            scheme: SchemeName::Bdf2,
            boundary: BoundaryName::Dirichlet,
            margin: DOMAIN_MARGIN,
            newton_tol: 1e-12,
            max_newton: 50,
            record_every: 100,
        }
    }
}

impl SolverBlock {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            scheme: self.scheme.into(),
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            record_every: self.record_every,
            sandwich: None,
        }
    }

    pub fn mode(&self, family: Family) -> BoundaryMode {
        match self.boundary {
            BoundaryName::Dirichlet => BoundaryMode::DirichletFromBarrier(family),
            BoundaryName::Neumann => BoundaryMode::NeumannFromBarrier(family),
            BoundaryName::Frozen => BoundaryMode::FrozenDirichlet,
            BoundaryName::ZeroFlux => BoundaryMode::ZeroFlux,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialName {
    Upper,
    Lower,
}

impl From<InitialName> for InitialData {
    fn from(i: InitialName) -> Self {
        match i {
            InitialName::Upper => InitialData::Upper,
            InitialName::Lower => InitialData::Lower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBlock {
    /// Barrier family: 5, 4 or 3.
    pub family: u8,
    /// Start depths `a_j`.
    pub starts: Vec<f64>,
    pub tau_star: f64,
    /// Half-width of the comparison window.
    pub window: f64,
    pub initial: InitialName,
    pub ks: Vec<f64>,
    pub h_primes: Vec<f64>,
    /// Scan speeds; empty means `-2 lambda', -lambda', 0, lambda, 2 lambda`.
    pub speeds: Vec<f64>,
    pub cutoff: f64,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        Self {
            family: 5,
            starts: vec![15.0, 20.0, 25.0, 30.0],
            tau_star: -10.0,
            window: WINDOW,
            initial: InitialName::Upper,
            ks: vec![0.4, 0.1, 0.025],
            h_primes: vec![0.0, 5.0, 10.0, 20.0],
            speeds: Vec::new(),
            cutoff: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    /// `evolve` writes every n-th recorded snapshot (and the last one).
    pub snapshot_every: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            snapshot_every: 10,
        }
    }
}

impl RunConfig {
    pub fn exponents(&self) -> Exponents {
        Exponents::new(self.n).expect("validated")
    }

    pub fn family(&self) -> Family {
        Family::from_count(self.experiment.family).expect("validated")
    }

    pub fn speeds(&self) -> Vec<f64> {
        if self.experiment.speeds.is_empty() {
            let (l, lp) = (self.barrier.lambda, self.barrier.lambda_prime);
            vec![-2.0 * lp, -lp, 0.0, l, 2.0 * l]
        } else {
            self.experiment.speeds.clone()
        }
    }

    pub fn ancient_config(&self) -> AncientConfig {
        AncientConfig {
            family: self.family(),
            starts: self.experiment.starts.clone(),
            tau_star: self.experiment.tau_star,
            dx: self.solver.dx,
            solver: self.solver.solver_config(),
            initial: self.experiment.initial.into(),
            margin: self.solver.margin,
            window: self.experiment.window,
        }
    }

    /// Sweeps run at the deepest start depth.
    pub fn sweep_config(&self, initial: InitialData) -> SweepConfig {
        SweepConfig {
            depth: self.experiment.starts.last().copied().unwrap_or(30.0),
            tau_star: self.experiment.tau_star,
            dx: self.solver.dx,
            solver: self.solver.solver_config(),
            initial,
            margin: self.solver.margin,
            window: self.experiment.window,
        }
    }

    /// Checks every field against the rule of the module that consumes it.
    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |path: &str, rule: &str, value: f64| LabError::Invalid {
            path: path.to_string(),
            rule: rule.to_string(),
            value,
        };
        let exp = Exponents::new(self.n).map_err(|_| bad("n", "n >= 3", f64::from(self.n)))?;

        let w = &self.wave;
        if w.lambdas.is_empty() {
            return Err(bad("wave.lambdas", "at least one speed", 0.0));
        }
        for (i, &l) in w.lambdas.iter().enumerate() {
            if !(l > 1.0 && l.is_finite()) {
                return Err(bad(&format!("wave.lambdas[{i}]"), "lambda > 1", l));
            }
        }
        if !(w.domain[0] < 0.0 && w.domain[1] > 0.0) {
            return Err(bad("wave.domain", "domain[0] < 0 < domain[1]", w.domain[0]));
        }
        if !(w.dx > 0.0 && w.dx <= 0.1) {
            return Err(bad("wave.dx", "0 < dx <= 0.1", w.dx));
        }

        let b = &self.barrier;
        b.params().validate(&exp).map_err(|e| match e {
            yamabe_core::Error::InvalidParameter { name, rule, value } => {
                bad(&format!("barrier.{name}"), rule, value)
            }
            other => LabError::Core(other),
        })?;
        if !(b.tol > 0.0) {
            return Err(bad("barrier.tol", "tol > 0", b.tol));
        }

        let s = &self.solver;
        if !(s.dx > 0.0 && s.dx.is_finite()) {
            return Err(bad("solver.dx", "dx > 0", s.dx));
        }
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(bad("solver.dt", "dt > 0", s.dt));
        }
        if !(s.margin >= 0.0) {
            return Err(bad("solver.margin", "margin >= 0", s.margin));
        }
        if !(s.newton_tol > 0.0) {
            return Err(bad("solver.newton_tol", "newton_tol > 0", s.newton_tol));
        }
        if s.max_newton == 0 {
            return Err(bad("solver.max_newton", "max_newton >= 1", 0.0));
        }
        if s.record_every == 0 {
            return Err(bad("solver.record_every", "record_every >= 1", 0.0));
        }

        let x = &self.experiment;
        if Family::from_count(x.family).is_none() {
            return Err(bad(
                "experiment.family",
                "family in {3, 4, 5}",
                f64::from(x.family),
            ));
        }
        if x.starts.is_empty() {
            return Err(bad("experiment.starts", "at least one start depth", 0.0));
        }
        for (i, &a) in x.starts.iter().enumerate() {
            if !(a > -b.tau_bar0) {
                return Err(bad(
                    &format!("experiment.starts[{i}]"),
                    "a_j > -tau_bar0",
                    a,
                ));
            }
            if i > 0 && !(a > x.starts[i - 1]) {
                return Err(bad(
                    &format!("experiment.starts[{i}]"),
                    "start depths increasing",
                    a,
                ));
            }
            if !(-a < x.tau_star) {
                return Err(bad(
                    &format!("experiment.starts[{i}]"),
                    "-a_j < tau_star",
                    a,
                ));
            }
        }
        if !(x.tau_star <= b.tau_bar0) {
            return Err(bad(
                "experiment.tau_star",
                "tau_star <= tau_bar0",
                x.tau_star,
            ));
        }
        if !(x.window > 0.0) {
            return Err(bad("experiment.window", "window > 0", x.window));
        }
        for (i, &k) in x.ks.iter().enumerate() {
            if !(k > 0.0 && k <= K_MAX) {
                return Err(bad(&format!("experiment.ks[{i}]"), "0 < k <= 0.5", k));
            }
            if i > 0 && !(k < x.ks[i - 1]) {
                return Err(bad(
                    &format!("experiment.ks[{i}]"),
                    "k values decreasing",
                    k,
                ));
            }
        }
        for (i, &h) in x.h_primes.iter().enumerate() {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(bad(&format!("experiment.h_primes[{i}]"), "h' >= 0", h));
            }
            if i > 0 && !(h > x.h_primes[i - 1]) {
                return Err(bad(
                    &format!("experiment.h_primes[{i}]"),
                    "h' values increasing",
                    h,
                ));
            }
        }
        for (i, &c) in x.speeds.iter().enumerate() {
            if !c.is_finite() {
                return Err(bad(&format!("experiment.speeds[{i}]"), "finite speed", c));
            }
        }
        if !(x.cutoff > 0.0) {
            return Err(bad("experiment.cutoff", "cutoff > 0", x.cutoff));
        }
        if self.output.snapshot_every == 0 {
            return Err(bad("output.snapshot_every", "snapshot_every >= 1", 0.0));
        }
        Ok(())
    }
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<RunConfig, LabError> {
    let de = toml::Deserializer::new(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| LabError::Schema {
        path: e.path().to_string(),
        message: e.inner().message().trim().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.speeds(), vec![-4.0, -2.0, 0.0, 2.0, 4.0]);
    }

    #[test]
    fn partial_blocks_keep_defaults() {
        let cfg =
            parse_config("[barrier]\nk = 0.2\n[solver]\nscheme = \"backward-euler\"\n").unwrap();
        assert_eq!(cfg.barrier.k, 0.2);
        assert_eq!(cfg.barrier.lambda, 2.0);
        assert_eq!(cfg.solver.scheme, SchemeName::BackwardEuler);
    }

    #[test]
    fn schema_errors_carry_the_path() {
        match parse_config("[solver]\nscheme = \"leapfrog\"\n") {
            Err(LabError::Schema { path, .. }) => assert_eq!(path, "solver.scheme"),
            other => panic!("{other:?}"),
        }
        match parse_config("[barrier]\nlambda = \"fast\"\n") {
            Err(LabError::Schema { path, .. }) => assert_eq!(path, "barrier.lambda"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("[wave]\nspeed = 2\n"),
            Err(LabError::Schema { .. })
        ));
    }

    #[test]
    fn preconditions_are_distinct() {
        let cases = [
            ("n = 2", "n"),
            ("[barrier]\nlambda = 1.0", "barrier.lambda"),
            ("[barrier]\nlambda_prime = 0.5", "barrier.lambda_prime"),
            ("[barrier]\nh = -1.0", "barrier.h"),
            ("[barrier]\nk = 0.0", "barrier.k"),
            ("[barrier]\ntau_bar0 = -1.0", "barrier.tau_bar0"),
            ("[barrier]\nq = 1e6", "barrier.q"),
            ("[wave]\nlambdas = [2.0, 1.0]", "wave.lambdas[1]"),
            ("[solver]\ndt = 0.0", "solver.dt"),
            ("[experiment]\nfamily = 6", "experiment.family"),
            (
                "[experiment]\nstarts = [20.0, 15.0]",
                "experiment.starts[1]",
            ),
            ("[experiment]\nstarts = [5.0]", "experiment.starts[0]"),
            ("[experiment]\ntau_star = -5.0", "experiment.tau_star"),
            ("[experiment]\nks = [0.1, 0.2]", "experiment.ks[1]"),
            (
                "[experiment]\nh_primes = [5.0, 0.0]",
                "experiment.h_primes[1]",
            ),
        ];
        for (doc, want) in cases {
            match parse_config(doc) {
                Err(LabError::Invalid { path, .. }) => assert_eq!(path, want, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }
}
