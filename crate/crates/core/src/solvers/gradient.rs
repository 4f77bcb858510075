//! Projected gradient descent and Frank-Wolfe with exact line search.

use std::time::Instant;

use super::linesearch::line_search_unchecked;
use super::projection::{argmin_vertex, project_simplex};
use super::stationarity::fw_gap;
use super::{check_start, finish, normalized, RawRun, SolverConfig, SolverKind, SolverReport, Termination};
use crate::error::Result;
use crate::model::{ContinuousAssignment, MrfModel};
use crate::par::{self, Execution};
use crate::tensor::{gradient_unchecked, GradientVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// `s = proj_X(x - grad)`.
    Projected,
    /// `s = argmin_{u in X} grad^T u`.
    Vertex,
}

/// A smooth objective over the product of simplices. CQP plugs its convex
/// surrogate in here; PGD and FW use the multilinear energy.
pub(crate) trait Objective {
    fn energy(&self, x: &ContinuousAssignment) -> f64;
    fn gradient(&self, x: &ContinuousAssignment, exec: Execution) -> GradientVector;
    fn step_length(&self, x: &ContinuousAssignment, r: &ContinuousAssignment, delta: f64) -> Result<f64>;
}

impl Objective for MrfModel {
    fn energy(&self, x: &ContinuousAssignment) -> f64 {
        self.energy_unchecked(x)
    }

    fn gradient(&self, x: &ContinuousAssignment, exec: Execution) -> GradientVector {
        gradient_unchecked(self, x, exec)
    }

    fn step_length(&self, x: &ContinuousAssignment, r: &ContinuousAssignment, delta: f64) -> Result<f64> {
        line_search_unchecked(self, x, r, delta)
    }
}

fn target(
    direction: Direction,
    x: &ContinuousAssignment,
    grad: &GradientVector,
    exec: Execution,
) -> ContinuousAssignment {
    let blocks = par::map_range(exec, x.num_blocks(), |i| match direction {
        Direction::Vertex => argmin_vertex(grad.block(i)),
        Direction::Projected => {
            let shifted: Vec<f64> = x.block(i).iter().zip(grad.block(i)).map(|(a, g)| a - g).collect();
            project_simplex(&shifted)
        }
    });
    ContinuousAssignment::from_blocks(blocks)
}

/// One accepted step, or `None` when no step length lowers the objective.
fn step<O: Objective>(
    objective: &O,
    direction: Direction,
    x: &ContinuousAssignment,
    grad: &GradientVector,
    energy: f64,
    delta: f64,
    exec: Execution,
) -> Result<Option<(ContinuousAssignment, f64)>> {
    let r = target(direction, x, grad, exec).sub(x);
    let alpha = objective.step_length(x, &r, delta)?;
    if alpha == 0.0 {
        return Ok(None);
    }
    let next = x.add_scaled(alpha, &r);
    let next_energy = objective.energy(&next);
    // The polynomial model can be off by rounding; never accept an ascent.
    if next_energy > energy {
        return Ok(None);
    }
    Ok(Some((next, next_energy)))
}

/// Shared first-order loop. Each iteration records one energy: the value
/// after the step, or the current value when the loop stops there.
pub(crate) fn descent_run<O: Objective>(
    objective: &O,
    direction: Direction,
    x0: &ContinuousAssignment,
    cfg: &SolverConfig,
) -> Result<RawRun> {
    let exec = cfg.execution;
    let mut x = x0.clone();
    let mut energy = objective.energy(&x);
    let mut energy_trace = Vec::new();
    let mut termination = Termination::MaxIters;
    for _ in 0..cfg.max_iters.max(1) {
        let grad = objective.gradient(&x, exec);
        if fw_gap(&grad, &x) <= cfg.stationarity_tol {
            energy_trace.push(energy);
            termination = Termination::Converged;
            break;
        }
        let Some((next, next_energy)) = step(objective, direction, &x, &grad, energy, cfg.linesearch_delta, exec)?
        else {
            energy_trace.push(energy);
            termination = Termination::Stalled;
            break;
        };
        let change = energy - next_energy;
        x = next;
        energy = next_energy;
        energy_trace.push(energy);
        if change <= cfg.energy_tol * energy.abs().max(1.0) {
            let gap = fw_gap(&objective.gradient(&x, exec), &x);
            termination = if gap <= cfg.stationarity_tol {
                Termination::Converged
            } else {
                Termination::Stalled
            };
            break;
        }
    }
    Ok(RawRun {
        iterations: energy_trace.len(),
        x,
        energy_trace,
        residual_trace: Vec::new(),
        termination,
    })
}

fn solve_with(
    kind: SolverKind,
    direction: Direction,
    model: &MrfModel,
    x0: &ContinuousAssignment,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    check_start(model, x0)?;
    let norm = normalized(model, cfg)?;
    let started = Instant::now();
    let run = descent_run(&norm.model, direction, x0, cfg)?;
    Ok(finish(kind, model, &norm, run, started, cfg.max_iters))
}

/// Projected gradient descent with unit gradient step and exact line
/// search along `proj_X(x - grad) - x`.
pub fn pgd_solve(model: &MrfModel, x0: &ContinuousAssignment, cfg: &SolverConfig) -> Result<SolverReport> {
    solve_with(SolverKind::Pgd, Direction::Projected, model, x0, cfg)
}

/// Frank-Wolfe with blockwise vertex targets and exact line search.
pub fn fw_solve(model: &MrfModel, x0: &ContinuousAssignment, cfg: &SolverConfig) -> Result<SolverReport> {
    solve_with(SolverKind::Fw, Direction::Vertex, model, x0, cfg)
}

fn single_step(
    direction: Direction,
    model: &MrfModel,
    x: &ContinuousAssignment,
    delta: f64,
) -> Result<ContinuousAssignment> {
    x.check_dims(model)?;
    let grad = gradient_unchecked(model, x, Execution::Serial);
    let energy = model.energy_unchecked(x);
    Ok(step(model, direction, x, &grad, energy, delta, Execution::Serial)?
        .map(|(next, _)| next)
        .unwrap_or_else(|| x.clone()))
}

/// One PGD iteration from `x`; returns `x` itself if no step helps.
pub fn pgd_step(model: &MrfModel, x: &ContinuousAssignment, delta: f64) -> Result<ContinuousAssignment> {
    single_step(Direction::Projected, model, x, delta)
}

/// One Frank-Wolfe iteration from `x`; returns `x` itself if no step helps.
pub fn fw_step(model: &MrfModel, x: &ContinuousAssignment, delta: f64) -> Result<ContinuousAssignment> {
    single_step(Direction::Vertex, model, x, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_homogeneous, init_random, Clique, PotentialTensor};
    use crate::solvers::check_stationarity;

    fn chain() -> MrfModel {
        let pair = PotentialTensor::new(vec![2, 2], vec![0.0, 1.0, 1.0, -0.5]).unwrap();
        MrfModel::new(
            vec![2, 2, 2],
            vec![
                Clique::unary(0, vec![0.4, -0.2]),
                Clique::unary(2, vec![-0.3, 0.1]),
                Clique::new(vec![0, 1], pair.clone()),
                Clique::new(vec![1, 2], pair),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_potentials_stop_at_first_iteration() {
        let m = MrfModel::new(
            vec![2, 2],
            vec![Clique::new(vec![0, 1], PotentialTensor::zeros(vec![2, 2]))],
        )
        .unwrap();
        for report in [
            pgd_solve(&m, &init_homogeneous(&m), &SolverConfig::default()).unwrap(),
            fw_solve(&m, &init_homogeneous(&m), &SolverConfig::default()).unwrap(),
        ] {
            assert_eq!(report.iterations, 1);
            assert_eq!(report.energy_trace, vec![0.0]);
            assert_eq!(report.termination, Termination::Converged);
        }
    }

    #[test]
    fn traces_descend_and_end_stationary() {
        let m = chain();
        for seed in 0..5 {
            let x0 = init_random(&m, seed);
            for report in [
                pgd_solve(&m, &x0, &SolverConfig::default()).unwrap(),
                fw_solve(&m, &x0, &SolverConfig::default()).unwrap(),
            ] {
                for w in report.energy_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12, "{:?}", report.energy_trace);
                }
                assert_eq!(report.energy_trace.len(), report.iterations);
                if report.termination == Termination::Converged {
                    assert!(check_stationarity(&m, &report.final_iterate).unwrap() <= 1e-6);
                }
                assert!(report.discrete_energy <= report.continuous_energy + 1e-9);
            }
        }
    }

    #[test]
    fn steps_never_increase_energy() {
        let m = chain();
        let x = init_random(&m, 3);
        let e = m.energy_continuous(&x).unwrap();
        assert!(m.energy_continuous(&pgd_step(&m, &x, 1e-4).unwrap()).unwrap() <= e);
        assert!(m.energy_continuous(&fw_step(&m, &x, 1e-4).unwrap()).unwrap() <= e);
    }
}
