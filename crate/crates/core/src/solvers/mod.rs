//! Relaxation solvers, their shared configuration and reports.

mod admm;
mod bcd;
mod cqp;
mod gradient;
mod linesearch;
mod projection;
mod stationarity;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use admm::{admm_residual, admm_solve, admm_solve_detailed, admm_solve_from, check_kkt, AdmmState, KktReport};
pub use bcd::{bcd_solve, bcd_sweep, round_bcd};
pub use cqp::{cqp_diagonal, cqp_energy, cqp_solve};
pub use gradient::{fw_solve, fw_step, pgd_solve, pgd_step};
pub use linesearch::{line_search, minimize_polynomial, pairwise_coeffs, poly_coeffs, poly_coeffs_numeric, poly_eval};
pub use projection::{argmin_vertex, project_nonneg, project_simplex};
pub use stationarity::{check_stationarity, fw_gap};

use crate::error::{Error, Result};
use crate::model::{
    init_homogeneous, init_random, init_unary, normalize_potentials, ContinuousAssignment, DiscreteLabeling, MrfModel,
    Normalization,
};
use crate::par::Execution;

/// Adaptive-penalty ADMM settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    pub rho0: f64,
    pub rho_max: f64,
    pub beta: f64,
    /// Stabilization iterations before the penalty may grow.
    pub i1: usize,
    /// Window length for the residual-improvement test.
    pub i2: usize,
    pub residual_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho0: 0.001,
            rho_max: 100.0,
            beta: 1.2,
            i1: 500,
            i2: 500,
            residual_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative energy change below which PGD, FW and CQP stop.
    pub energy_tol: f64,
    /// Frank-Wolfe gap below which a point counts as stationary.
    pub stationarity_tol: f64,
    pub admm: AdmmConfig,
    /// Scan increment for line searches on polynomials above degree 3.
    pub linesearch_delta: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            energy_tol: 1e-9,
            stationarity_tol: 1e-8,
            admm: AdmmConfig::default(),
            linesearch_delta: 1e-4,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl SolverConfig {
    // Negated comparisons so that NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let a = &self.admm;
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(a.rho0 > 0.0) {
            return bad("rho0 must be positive");
        }
        if !(a.beta > 1.0) {
            return bad("beta must exceed 1");
        }
        if !(a.rho_max >= a.rho0) {
            return bad("rho_max must be at least rho0");
        }
        if a.i2 == 0 {
            return bad("i2 must be positive");
        }
        if !(self.energy_tol > 0.0 && self.stationarity_tol > 0.0 && a.residual_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.linesearch_delta > 0.0 && self.linesearch_delta <= 1.0) {
            return bad("linesearch_delta must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Bcd,
    Pgd,
    Fw,
    Admm,
    Cqp,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Bcd,
        SolverKind::Pgd,
        SolverKind::Fw,
        SolverKind::Admm,
        SolverKind::Cqp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bcd => "bcd",
            SolverKind::Pgd => "pgd",
            SolverKind::Fw => "fw",
            SolverKind::Admm => "admm",
            SolverKind::Cqp => "cqp",
        }
    }

    /// Number of initializations used by the benchmark protocol: five
    /// (unary plus four random) for the descent methods, one otherwise.
    pub fn protocol_inits(self) -> usize {
        match self {
            SolverKind::Bcd | SolverKind::Pgd | SolverKind::Fw => 5,
            SolverKind::Admm | SolverKind::Cqp => 1,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIters,
    Stalled,
}

/// Outcome of one solver run. Energies refer to the model as given (not
/// normalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: SolverKind,
    pub final_labeling: DiscreteLabeling,
    pub discrete_energy: f64,
    pub continuous_energy: f64,
    /// Last continuous iterate before rounding (`x^1` for ADMM).
    pub final_iterate: ContinuousAssignment,
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
    pub wall_time: Duration,
    pub termination: Termination,
}

impl SolverReport {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &SolverReport) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        &a == other
    }
}

/// What a solver produces on the normalized model, before rounding and
/// rescaling.
pub(crate) struct RawRun {
    pub x: ContinuousAssignment,
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

/// Rounds (BCD on the normalized model) and rescales a raw run.
pub(crate) fn finish(
    kind: SolverKind,
    original: &MrfModel,
    norm: &Normalization,
    run: RawRun,
    started: Instant,
    max_sweeps: usize,
) -> SolverReport {
    let labeling = match run.x.to_labeling() {
        Some(l) if kind == SolverKind::Bcd => l,
        _ => bcd::round_with(&norm.model, &run.x, max_sweeps),
    };
    SolverReport {
        solver: kind,
        discrete_energy: original.energy_discrete(&labeling),
        continuous_energy: original.energy_unchecked(&run.x),
        final_labeling: labeling,
        final_iterate: run.x,
        energy_trace: run.energy_trace.iter().map(|&e| norm.to_original(e)).collect(),
        residual_trace: run.residual_trace,
        iterations: run.iterations,
        wall_time: started.elapsed(),
        termination: run.termination,
    }
}

pub(crate) fn check_start(model: &MrfModel, x0: &ContinuousAssignment) -> Result<()> {
    x0.check_dims(model)?;
    if !x0.is_feasible() {
        return Err(Error::InvalidConfig(
            "initial assignment is not in the product of simplices".into(),
        ));
    }
    Ok(())
}

/// Runs one solver from `x0`. ADMM uses `x0` for every decomposed copy.
pub fn solve(
    kind: SolverKind,
    model: &MrfModel,
    x0: &ContinuousAssignment,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    match kind {
        SolverKind::Bcd => bcd_solve(model, x0, cfg),
        SolverKind::Pgd => pgd_solve(model, x0, cfg),
        SolverKind::Fw => fw_solve(model, x0, cfg),
        SolverKind::Admm => admm_solve_from(model, x0, cfg),
        SolverKind::Cqp => cqp_solve(model, x0, cfg),
    }
}

/// Initial point number `k` of a multi-start run: the unary solution (the
/// homogeneous point for ADMM) first, then random draws seeded from
/// `seed + k`.
pub fn initialization(kind: SolverKind, model: &MrfModel, k: usize, seed: u64) -> ContinuousAssignment {
    match (k, kind) {
        (0, SolverKind::Admm) => init_homogeneous(model),
        (0, _) => init_unary(model),
        _ => init_random(model, seed.wrapping_add(k as u64)),
    }
}

/// Runs `inits` initializations and keeps the lowest discrete energy
/// (earliest on ties). The reported wall time covers all runs.
pub fn solve_multi_init(kind: SolverKind, model: &MrfModel, cfg: &SolverConfig, inits: usize) -> Result<SolverReport> {
    let started = Instant::now();
    let mut best: Option<SolverReport> = None;
    for k in 0..inits.max(1) {
        let x0 = initialization(kind, model, k, cfg.seed);
        let report = solve(kind, model, &x0, cfg)?;
        if best.as_ref().is_none_or(|b| report.discrete_energy < b.discrete_energy) {
            best = Some(report);
        }
    }
    let mut best = best.expect("at least one initialization");
    best.wall_time = started.elapsed();
    Ok(best)
}

pub(crate) fn normalized(model: &MrfModel, cfg: &SolverConfig) -> Result<Normalization> {
    cfg.validate()?;
    Ok(normalize_potentials(model))
}
