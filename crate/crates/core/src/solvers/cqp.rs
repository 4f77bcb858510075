//! Convex quadratic relaxation of pairwise models, used as a baseline.
//!
//! A diagonal term `sum_i d_i^T (x_i * x_i - x_i)` is added to the energy.
//! It vanishes on one-hot points and, with `d_i(s)` the half row sums of the
//! absolute pairwise tables, makes the objective convex.

use std::time::Instant;

use super::gradient::{descent_run, Direction, Objective};
use super::linesearch::{minimize_polynomial, pairwise_unchecked};
use super::{check_start, finish, normalized, SolverConfig, SolverKind, SolverReport};
use crate::error::{Error, Result};
use crate::model::{ContinuousAssignment, MrfModel};
use crate::par::Execution;
use crate::tensor::{gradient_unchecked, GradientVector};

/// `d_i(s) = sum over pairwise cliques at i of sum_t |f(s, t)| / 2`.
pub fn cqp_diagonal(model: &MrfModel) -> Result<Vec<Vec<f64>>> {
    if model.degree() > 2 {
        return Err(Error::NotPairwise(model.degree()));
    }
    let mut d: Vec<Vec<f64>> = model.label_counts().iter().map(|&k| vec![0.0; k]).collect();
    for clique in model.cliques().iter().filter(|c| c.arity() == 2) {
        let (i, j) = (clique.nodes[0], clique.nodes[1]);
        let cols = model.label_counts()[j];
        for (k, &f) in clique.potential.values().iter().enumerate() {
            let half = 0.5 * f.abs();
            d[i][k / cols] += half;
            d[j][k % cols] += half;
        }
    }
    Ok(d)
}

/// Convex surrogate `E(x) + sum_i d_i^T (x_i * x_i - x_i)`.
pub fn cqp_energy(model: &MrfModel, x: &ContinuousAssignment) -> Result<f64> {
    let diag = cqp_diagonal(model)?;
    x.check_dims(model)?;
    Ok(Cqp { model, diag }.energy(x))
}

struct Cqp<'a> {
    model: &'a MrfModel,
    diag: Vec<Vec<f64>>,
}

impl Cqp<'_> {
    fn correction(&self, x: &ContinuousAssignment) -> f64 {
        self.diag
            .iter()
            .zip(x.blocks())
            .flat_map(|(d, xi)| d.iter().zip(xi))
            .map(|(d, v)| d * v * (v - 1.0))
            .sum()
    }
}

impl Objective for Cqp<'_> {
    fn energy(&self, x: &ContinuousAssignment) -> f64 {
        self.model.energy_unchecked(x) + self.correction(x)
    }

    fn gradient(&self, x: &ContinuousAssignment, exec: Execution) -> GradientVector {
        let mut g = gradient_unchecked(self.model, x, exec);
        for (i, d) in self.diag.iter().enumerate() {
            let xi = x.block(i);
            for ((gs, ds), v) in g.block_mut(i).iter_mut().zip(d).zip(xi) {
                *gs += ds * (2.0 * v - 1.0);
            }
        }
        g
    }

    fn step_length(&self, x: &ContinuousAssignment, r: &ContinuousAssignment, delta: f64) -> Result<f64> {
        if r.is_zero() {
            return Ok(0.0);
        }
        let (mut a, mut b, _) = pairwise_unchecked(self.model, x, r);
        for ((d, xi), ri) in self.diag.iter().zip(x.blocks()).zip(r.blocks()) {
            for ((ds, v), rs) in d.iter().zip(xi).zip(ri) {
                a += ds * rs * rs;
                b += ds * rs * (2.0 * v - 1.0);
            }
        }
        Ok(minimize_polynomial(&[self.energy(x), b, a], delta))
    }
}

/// Frank-Wolfe on the convex surrogate, rounded by BCD on the original
/// energy.
pub fn cqp_solve(model: &MrfModel, x0: &ContinuousAssignment, cfg: &SolverConfig) -> Result<SolverReport> {
    if model.degree() > 2 {
        return Err(Error::NotPairwise(model.degree()));
    }
    check_start(model, x0)?;
    let norm = normalized(model, cfg)?;
    let started = Instant::now();
    let objective = Cqp {
        model: &norm.model,
        diag: cqp_diagonal(&norm.model)?,
    };
    let run = descent_run(&objective, Direction::Vertex, x0, cfg)?;
    Ok(finish(SolverKind::Cqp, model, &norm, run, started, cfg.max_iters))
}
