//! ADMM on the cyclic multilinear decomposition.
//!
//! The energy is rewritten as `F(x^1, ..., x^D)`, linear in each copy, with
//! consensus constraints `x^{d-1} = x^d`. Copy `x^1` lives in the product of
//! simplices, the others only in the nonnegative orthant. Copies are indexed
//! from 0 below, and `ys[d - 1]` holds the multiplier of the constraint
//! between copies `d - 1` and `d`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::projection::{argmin_vertex, project_simplex};
use super::stationarity::fw_gap;
use super::{check_start, finish, normalized, RawRun, SolverConfig, SolverKind, SolverReport, Termination};
use crate::error::{Error, Result};
use crate::model::{init_homogeneous, ContinuousAssignment, MrfModel};
use crate::par::{self, Execution};
use crate::tensor::{admm_coefficient_unchecked, gradient_unchecked, CoefficientCache};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    /// Decomposed copies, one per clique position.
    pub xs: Vec<ContinuousAssignment>,
    /// Copies from the previous iteration, for the movement term of the
    /// residual.
    pub prev_xs: Vec<ContinuousAssignment>,
    /// Consensus multipliers, one fewer than copies.
    pub ys: Vec<ContinuousAssignment>,
    pub rho: f64,
    pub residual: f64,
    pub iter: usize,
}

impl AdmmState {
    /// Every copy at `x0`, multipliers at zero.
    pub fn new(model: &MrfModel, x0: &ContinuousAssignment, rho: f64) -> Self {
        let copies = model.degree();
        let zeros = ContinuousAssignment::zeros(model.label_counts());
        Self {
            xs: vec![x0.clone(); copies],
            prev_xs: vec![x0.clone(); copies],
            ys: vec![zeros; copies - 1],
            rho,
            residual: f64::INFINITY,
            iter: 0,
        }
    }

    fn check(&self, model: &MrfModel) -> Result<()> {
        let copies = model.degree();
        if self.xs.len() != copies || self.prev_xs.len() != copies || self.ys.len() + 1 != copies {
            return Err(Error::DimensionMismatch(format!(
                "ADMM state with {} copies and {} multipliers for a degree-{copies} model",
                self.xs.len(),
                self.ys.len()
            )));
        }
        for x in self.xs.iter().chain(&self.prev_xs).chain(&self.ys) {
            x.check_dims(model)?;
        }
        Ok(())
    }

    /// Multiplier term `(A^d)^T y` acting on copy `d`, block `i`.
    fn multiplier_term(&self, d: usize, i: usize) -> Vec<f64> {
        let k = self.xs[0].block(i).len();
        let ahead = self.ys.get(d).map(|y| y.block(i));
        let behind = d.checked_sub(1).map(|b| self.ys[b].block(i));
        (0..k)
            .map(|s| ahead.map_or(0.0, |y| y[s]) - behind.map_or(0.0, |y| y[s]))
            .collect()
    }
}

/// `sum_d ||x^{d-1} - x^d||^2 + sum_d ||x^d - x^d_prev||^2`.
pub fn admm_residual(state: &AdmmState) -> f64 {
    let consensus: f64 = state.xs.windows(2).map(|w| w[0].squared_distance(&w[1])).sum();
    let movement: f64 = state
        .xs
        .iter()
        .zip(&state.prev_xs)
        .map(|(x, p)| x.squared_distance(p))
        .sum();
    consensus + movement
}

/// Target vector `c^d` of node `i` before projection.
fn target(state: &AdmmState, d: usize, i: usize, p: &[f64]) -> Vec<f64> {
    let last = state.xs.len() - 1;
    let rho = state.rho;
    let k = p.len();
    let y = |b: usize, s: usize| state.ys[b - 1].block(i)[s];
    let x = |b: usize, s: usize| state.xs[b].block(i)[s];
    (0..k)
        .map(|s| {
            if d == 0 {
                x(1, s) - (y(1, s) + p[s]) / rho
            } else if d == last {
                x(d - 1, s) + (y(d, s) - p[s]) / rho
            } else {
                0.5 * (x(d - 1, s) + x(d + 1, s)) + (y(d, s) - y(d + 1, s) - p[s]) / (2.0 * rho)
            }
        })
        .collect()
}

/// One sweep over the copies followed by the multiplier update.
fn iterate(model: &MrfModel, state: &mut AdmmState, cache: &mut CoefficientCache, exec: Execution) {
    state.prev_xs.clone_from(&state.xs);
    let copies = state.xs.len();
    for d in 0..copies {
        let ps = cache.refresh_admm(model, &state.xs, d, exec);
        let current = &*state;
        let blocks = par::map_range(exec, model.num_nodes(), |i| {
            if copies == 1 {
                argmin_vertex(&ps[i])
            } else if d == 0 {
                project_simplex(&target(current, d, i, &ps[i]))
            } else {
                target(current, d, i, &ps[i]).into_iter().map(|v| v.max(0.0)).collect()
            }
        });
        for (i, block) in blocks.into_iter().enumerate() {
            if block.as_slice() != state.xs[d].block(i) {
                *state.xs[d].block_mut(i) = block;
                cache.invalidate(model, Some(d), i);
            }
        }
    }
    let rho = state.rho;
    for b in 1..copies {
        let (behind, ahead) = (&state.xs[b - 1], &state.xs[b]);
        for (i, y) in state.ys[b - 1].blocks_mut().iter_mut().enumerate() {
            for ((ys, u), v) in y.iter_mut().zip(behind.block(i)).zip(ahead.block(i)) {
                *ys += rho * (u - v);
            }
        }
    }
    state.iter += 1;
    state.residual = admm_residual(state);
}

/// Best-so-far penalty schedule: after `i1` iterations, at the end of each
/// `i2`-iteration window without a new best residual, `rho` grows by `beta`.
struct Penalty {
    best: f64,
    last_improvement: usize,
}

impl Penalty {
    fn update(&mut self, state: &mut AdmmState, cfg: &SolverConfig) {
        let a = &cfg.admm;
        if state.residual < self.best {
            self.best = state.residual;
            self.last_improvement = state.iter;
        }
        let k = state.iter;
        if k > a.i1 && (k - a.i1).is_multiple_of(a.i2) && self.last_improvement + a.i2 <= k {
            state.rho = (state.rho * a.beta).min(a.rho_max);
        }
    }
}

fn admm_run(model: &MrfModel, x0: &ContinuousAssignment, cfg: &SolverConfig) -> (RawRun, AdmmState) {
    let mut state = AdmmState::new(model, x0, cfg.admm.rho0);
    let mut cache = CoefficientCache::new(model, model.degree());
    let mut penalty = Penalty {
        best: f64::INFINITY,
        last_improvement: 0,
    };
    let mut energy_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut termination = Termination::MaxIters;
    for _ in 0..cfg.max_iters.max(1) {
        iterate(model, &mut state, &mut cache, cfg.execution);
        energy_trace.push(model.energy_unchecked(&state.xs[0]));
        residual_trace.push(state.residual);
        if state.residual < cfg.admm.residual_tol {
            termination = Termination::Converged;
            break;
        }
        penalty.update(&mut state, cfg);
    }
    let run = RawRun {
        x: state.xs[0].clone(),
        iterations: energy_trace.len(),
        energy_trace,
        residual_trace,
        termination,
    };
    (run, state)
}

/// ADMM from `x0` for every copy. Also returns the final state, with
/// multipliers and penalty expressed in the units of `model`.
pub fn admm_solve_detailed(
    model: &MrfModel,
    x0: &ContinuousAssignment,
    cfg: &SolverConfig,
) -> Result<(SolverReport, AdmmState)> {
    check_start(model, x0)?;
    let norm = normalized(model, cfg)?;
    let started = Instant::now();
    let (run, mut state) = admm_run(&norm.model, x0, cfg);
    for y in &mut state.ys {
        y.blocks_mut().iter_mut().flatten().for_each(|v| *v *= norm.scale);
    }
    state.rho *= norm.scale;
    Ok((
        finish(SolverKind::Admm, model, &norm, run, started, cfg.max_iters),
        state,
    ))
}

pub fn admm_solve_from(model: &MrfModel, x0: &ContinuousAssignment, cfg: &SolverConfig) -> Result<SolverReport> {
    admm_solve_detailed(model, x0, cfg).map(|(report, _)| report)
}

/// ADMM from the homogeneous point.
pub fn admm_solve(model: &MrfModel, cfg: &SolverConfig) -> Result<SolverReport> {
    admm_solve_from(model, &init_homogeneous(model), cfg)
}

/// Per-condition outcome of a KKT check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `max_d ||x^d - x^1||_inf`.
    pub consensus: f64,
    /// Per-copy violation of the linearized block optimality condition.
    pub block_optimality: Vec<f64>,
    /// Stationarity gap of `x^1` for the original problem.
    pub stationarity: f64,
    pub consensus_ok: bool,
    pub optimality_ok: bool,
    /// Whether the gap is within `10 * tol`.
    pub stationarity_ok: bool,
}

impl KktReport {
    pub fn passed(&self) -> bool {
        self.consensus_ok && self.optimality_ok && self.stationarity_ok
    }
}

/// Checks consensus, per-copy optimality of `g = p^d + (A^d)^T y` over each
/// copy's feasible set, and stationarity of `x^1`.
pub fn check_kkt(model: &MrfModel, state: &AdmmState, tol: f64) -> Result<KktReport> {
    state.check(model)?;
    let consensus = state.xs[1..]
        .iter()
        .map(|x| x.max_abs_diff(&state.xs[0]))
        .fold(0.0, f64::max);
    let block_optimality: Vec<f64> = (0..state.xs.len())
        .map(|d| {
            (0..model.num_nodes())
                .map(|i| {
                    let p = admm_coefficient_unchecked(model, &state.xs, d, i);
                    let g: Vec<f64> = p.iter().zip(state.multiplier_term(d, i)).map(|(a, b)| a + b).collect();
                    let x = state.xs[d].block(i);
                    let inner: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
                    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
                    if d == 0 {
                        inner - min
                    } else {
                        (-min).max(inner.abs())
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let stationarity = fw_gap(
        &gradient_unchecked(model, &state.xs[0], Execution::Serial),
        &state.xs[0],
    );
    Ok(KktReport {
        consensus_ok: consensus <= tol,
        optimality_ok: block_optimality.iter().all(|&v| v <= tol),
        stationarity_ok: stationarity <= 10.0 * tol,
        consensus,
        block_optimality,
        stationarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Clique, PotentialTensor};

    fn pair() -> MrfModel {
        MrfModel::new(
            vec![2, 2],
            vec![
                Clique::unary(0, vec![0.3, -0.2]),
                Clique::unary(1, vec![-0.1, 0.4]),
                Clique::new(
                    vec![0, 1],
                    PotentialTensor::new(vec![2, 2], vec![0.0, 0.8, 0.8, -0.5]).unwrap(),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unary_model_lands_on_argmin() {
        let m = MrfModel::new(vec![3], vec![Clique::unary(0, vec![0.2, -0.5, 0.1])]).unwrap();
        let report = admm_solve(&m, &SolverConfig::default()).unwrap();
        assert_eq!(report.final_iterate.block(0), &[0.0, 1.0, 0.0]);
        assert_eq!(*report.residual_trace.last().unwrap(), 0.0);
        assert_eq!(report.termination, Termination::Converged);
    }

    #[test]
    fn residual_matches_definition() {
        let m = pair();
        let mut state = AdmmState::new(&m, &init_homogeneous(&m), 0.5);
        assert_eq!(admm_residual(&state), 0.0);
        state.xs[1] = ContinuousAssignment::from_blocks(vec![vec![-0.5, 0.5], vec![0.5, 0.5]]);
        state.prev_xs[1] = state.xs[1].clone();
        assert_eq!(admm_residual(&state), 1.0);
    }

    #[test]
    fn converges_to_consensus_on_small_pair() {
        let m = pair();
        let (report, state) = admm_solve_detailed(&m, &init_homogeneous(&m), &SolverConfig::default()).unwrap();
        assert_eq!(report.termination, Termination::Converged);
        let kkt = check_kkt(&m, &state, 1e-4).unwrap();
        assert!(kkt.passed(), "{kkt:?}");
    }

    #[test]
    fn non_consensus_state_fails() {
        let m = pair();
        let mut state = AdmmState::new(&m, &init_homogeneous(&m), 1.0);
        state.xs[1] = ContinuousAssignment::from_blocks(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let kkt = check_kkt(&m, &state, 1e-4).unwrap();
        assert!(!kkt.consensus_ok);
    }
}
