//! Block coordinate descent over the per-node simplices.
//!
//! Each block update is a linear minimization, so every updated node lands
//! on a vertex. A node keeps its current label while that label is still
//! optimal, which rules out cycling between tied labels.

use std::time::Instant;

use super::{check_start, finish, normalized, RawRun, SolverConfig, SolverKind, SolverReport, Termination};
use crate::error::Result;
use crate::model::{argmin_lowest, one_hot_label, ContinuousAssignment, DiscreteLabeling, MrfModel};
use crate::tensor::CoefficientCache;

/// Slack under which the incumbent label counts as still optimal.
const TIE_TOL: f64 = 1e-12;

/// One pass over the nodes in index order. Returns whether any block moved.
fn sweep(model: &MrfModel, x: &mut ContinuousAssignment, cache: &mut CoefficientCache) -> bool {
    let mut changed = false;
    for i in 0..model.num_nodes() {
        let c = cache.bcd(model, x, i);
        let best = argmin_lowest(c);
        let keep = one_hot_label(x.block(i)).is_some_and(|s| c[s] <= c[best] + TIE_TOL);
        if keep {
            continue;
        }
        let block = x.block_mut(i);
        block.iter_mut().for_each(|v| *v = 0.0);
        block[best] = 1.0;
        cache.invalidate(model, None, i);
        changed = true;
    }
    changed
}

pub(crate) fn bcd_run(model: &MrfModel, x0: &ContinuousAssignment, max_sweeps: usize) -> RawRun {
    let mut x = x0.clone();
    let mut cache = CoefficientCache::new(model, 1);
    let mut energy_trace = Vec::new();
    let mut termination = Termination::MaxIters;
    for _ in 0..max_sweeps.max(1) {
        let changed = sweep(model, &mut x, &mut cache);
        energy_trace.push(model.energy_unchecked(&x));
        if !changed {
            termination = Termination::Converged;
            break;
        }
    }
    RawRun {
        iterations: energy_trace.len(),
        x,
        energy_trace,
        residual_trace: Vec::new(),
        termination,
    }
}

pub(crate) fn round_with(model: &MrfModel, x: &ContinuousAssignment, max_sweeps: usize) -> DiscreteLabeling {
    let run = bcd_run(model, x, max_sweeps);
    match run.x.to_labeling() {
        Some(labeling) => labeling,
        // Only reachable if the sweep cap stops BCD before every block was
        // visited, which cannot happen with at least one sweep.
        None => unreachable!("a full BCD sweep leaves every block on a vertex"),
    }
}

/// Discrete labeling reached by BCD from `x`. Its energy never exceeds
/// `E(x)` for feasible `x`.
pub fn round_bcd(model: &MrfModel, x: &ContinuousAssignment) -> Result<DiscreteLabeling> {
    x.check_dims(model)?;
    Ok(round_with(model, x, usize::MAX))
}

/// A single BCD sweep from `x`.
pub fn bcd_sweep(model: &MrfModel, x: &ContinuousAssignment) -> Result<ContinuousAssignment> {
    x.check_dims(model)?;
    let mut out = x.clone();
    let mut cache = CoefficientCache::new(model, 1);
    sweep(model, &mut out, &mut cache);
    Ok(out)
}

/// Runs BCD until a sweep changes nothing, or `cfg.max_iters` sweeps.
pub fn bcd_solve(model: &MrfModel, x0: &ContinuousAssignment, cfg: &SolverConfig) -> Result<SolverReport> {
    check_start(model, x0)?;
    let norm = normalized(model, cfg)?;
    let started = Instant::now();
    let run = bcd_run(&norm.model, x0, cfg.max_iters);
    Ok(finish(SolverKind::Bcd, model, &norm, run, started, cfg.max_iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_homogeneous, init_random, Clique, PotentialTensor};
    use crate::solvers::check_stationarity;

    fn frustrated_triangle() -> MrfModel {
        let disagree = PotentialTensor::new(vec![2, 2], vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        MrfModel::new(
            vec![2, 2, 2],
            vec![
                Clique::unary(0, vec![0.2, -0.1]),
                Clique::new(vec![0, 1], disagree.clone()),
                Clique::new(vec![1, 2], disagree.clone()),
                Clique::new(vec![0, 2], disagree),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_potentials_keep_discrete_start() {
        let m = MrfModel::new(
            vec![3, 2],
            vec![Clique::new(vec![0, 1], PotentialTensor::zeros(vec![3, 2]))],
        )
        .unwrap();
        let x0 = ContinuousAssignment::one_hot(m.label_counts(), &DiscreteLabeling::new(vec![2, 1]));
        let report = bcd_solve(&m, &x0, &SolverConfig::default()).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.final_iterate, x0);
        assert_eq!(report.termination, Termination::Converged);
    }

    #[test]
    fn output_is_discrete_and_stationary() {
        let m = frustrated_triangle();
        for seed in 0..10 {
            let x0 = init_random(&m, seed);
            let report = bcd_solve(&m, &x0, &SolverConfig::default()).unwrap();
            assert!(report.final_iterate.to_labeling().is_some());
            assert!(check_stationarity(&m, &report.final_iterate).unwrap() <= 1e-9);
            assert!(report.discrete_energy <= m.energy_continuous(&x0).unwrap() + 1e-9);
            for w in report.energy_trace.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn rounding_homogeneous_zero_model_gives_label_zero() {
        let m = MrfModel::new(
            vec![2, 3],
            vec![Clique::new(vec![0, 1], PotentialTensor::zeros(vec![2, 3]))],
        )
        .unwrap();
        let s = round_bcd(&m, &init_homogeneous(&m)).unwrap();
        assert_eq!(s.labels(), &[0, 0]);
    }

    #[test]
    fn rounding_discrete_point_is_identity() {
        let m = frustrated_triangle();
        let s = DiscreteLabeling::new(vec![1, 0, 1]);
        let x = ContinuousAssignment::one_hot(m.label_counts(), &s);
        let fixed = round_bcd(&m, &bcd_sweep(&m, &x).unwrap()).unwrap();
        assert_eq!(
            round_bcd(&m, &ContinuousAssignment::one_hot(m.label_counts(), &fixed)).unwrap(),
            fixed
        );
    }
}
