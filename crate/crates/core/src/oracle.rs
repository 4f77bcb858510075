//! Exhaustive ground truth for small models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{init_random, DiscreteLabeling, MrfModel};
use crate::par::{self, Execution};
use crate::solvers::{round_bcd, solve_multi_init, SolverConfig, SolverKind};

/// Default bound on the number of labelings enumerated.
pub const DEFAULT_ORACLE_CAP: u128 = 1_000_000;

/// Labelings per parallel chunk.
const CHUNK: u128 = 4096;

/// Labeling number `index` in lexicographic order (last node fastest).
fn decode(counts: &[usize], mut index: u128) -> Vec<usize> {
    let mut labels = vec![0; counts.len()];
    for (slot, &k) in labels.iter_mut().zip(counts).rev() {
        *slot = (index % k as u128) as usize;
        index /= k as u128;
    }
    labels
}

/// Advances to the next labeling in lexicographic order.
fn increment(counts: &[usize], labels: &mut [usize]) {
    for (slot, &k) in labels.iter_mut().zip(counts).rev() {
        *slot += 1;
        if *slot < k {
            return;
        }
        *slot = 0;
    }
}

/// Global minimizer by enumeration, lexicographically smallest on ties.
pub fn brute_force_map(model: &MrfModel, cap: u128) -> Result<(DiscreteLabeling, f64)> {
    brute_force_map_with(model, cap, Execution::default())
}

pub fn brute_force_map_with(model: &MrfModel, cap: u128, exec: Execution) -> Result<(DiscreteLabeling, f64)> {
    let total = model.search_space();
    if total > cap {
        return Err(Error::SearchSpaceTooLarge(total, cap));
    }
    let counts = model.label_counts();
    let chunks = total.div_ceil(CHUNK) as usize;
    // Each chunk keeps its first minimizer; chunks are reduced in order, so
    // the overall winner is the lexicographically smallest.
    let winners = par::map_range(exec, chunks, |c| {
        let start = c as u128 * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut labels = decode(counts, start);
        let mut best = (start, f64::INFINITY);
        for index in start..end {
            let e = model.energy_discrete(&DiscreteLabeling::new(labels.clone()));
            if e < best.1 {
                best = (index, e);
            }
            increment(counts, &mut labels);
        }
        best
    });
    let (index, energy) = winners
        .into_iter()
        .fold((0, f64::INFINITY), |acc, w| if w.1 < acc.1 { w } else { acc });
    Ok((DiscreteLabeling::new(decode(counts, index)), energy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub trials: usize,
    pub oracle_energy: f64,
    /// Trials where the rounded energy exceeded the continuous energy.
    pub upper_violations: usize,
    /// Trials where the rounded energy fell below the oracle minimum.
    pub lower_violations: usize,
    /// Trials where rounding reached the oracle minimum.
    pub reached_minimum: usize,
}

impl TightnessReport {
    pub fn fraction_reached(&self) -> f64 {
        if self.trials == 0 {
            return 1.0;
        }
        self.reached_minimum as f64 / self.trials as f64
    }

    pub fn passed(&self) -> bool {
        self.upper_violations == 0 && self.lower_violations == 0
    }
}

/// Rounds `trials` random feasible points with BCD and checks that each
/// rounded energy lies between the oracle minimum and the continuous energy
/// (both within `1e-9`).
pub fn verify_tightness(model: &MrfModel, trials: usize, seed: u64) -> Result<TightnessReport> {
    let (_, oracle_energy) = brute_force_map(model, DEFAULT_ORACLE_CAP)?;
    let mut report = TightnessReport {
        trials,
        oracle_energy,
        upper_violations: 0,
        lower_violations: 0,
        reached_minimum: 0,
    };
    for t in 0..trials {
        let x = init_random(model, seed.wrapping_add(t as u64));
        let continuous = model.energy_continuous(&x)?;
        let rounded = model.energy_discrete(&round_bcd(model, &x)?);
        report.upper_violations += usize::from(rounded > continuous + 1e-9);
        report.lower_violations += usize::from(rounded < oracle_energy - 1e-9);
        report.reached_minimum += usize::from(rounded <= oracle_energy + 1e-9);
    }
    Ok(report)
}

/// Discrete energy of `kind` under the standard multi-start protocol minus
/// the oracle minimum.
pub fn solver_vs_oracle(model: &MrfModel, kind: SolverKind, cfg: &SolverConfig) -> Result<f64> {
    let (_, oracle_energy) = brute_force_map(model, DEFAULT_ORACLE_CAP)?;
    let report = solve_multi_init(kind, model, cfg, kind.protocol_inits())?;
    Ok(report.discrete_energy - oracle_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Clique, ContinuousAssignment, PotentialTensor};

    fn pair() -> MrfModel {
        MrfModel::new(
            vec![2, 2],
            vec![
                Clique::unary(0, vec![1.0, 2.0]),
                Clique::unary(1, vec![0.0, 1.0]),
                Clique::new(
                    vec![0, 1],
                    PotentialTensor::new(vec![2, 2], vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_model_picks_all_zero_labeling() {
        let m = MrfModel::new(
            vec![3, 2, 4],
            vec![Clique::new(vec![0, 2], PotentialTensor::zeros(vec![3, 4]))],
        )
        .unwrap();
        let (s, e) = brute_force_map(&m, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!((s.labels(), e), (&[0, 0, 0][..], 0.0));
    }

    #[test]
    fn single_node() {
        let m = MrfModel::new(vec![2], vec![Clique::unary(0, vec![0.3, -0.7])]).unwrap();
        let (s, e) = brute_force_map(&m, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!((s.labels(), e), (&[1][..], -0.7));
    }

    #[test]
    fn two_node_example() {
        // Energies of (0,0), (0,1), (1,0), (1,1): 1, 3, 4, 6.
        let (s, e) = brute_force_map(&pair(), DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!((s.labels(), e), (&[0, 0][..], 1.0));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            brute_force_map(&pair(), 3),
            Err(Error::SearchSpaceTooLarge(4, 3))
        ));
    }

    #[test]
    fn serial_and_parallel_agree_across_chunks() {
        let m = crate::generate::gen_grid(
            3,
            5,
            2,
            crate::generate::Connectivity::N4,
            crate::generate::PairwisePotential::Random,
            4,
        )
        .unwrap();
        let a = brute_force_map_with(&m, DEFAULT_ORACLE_CAP, Execution::Serial).unwrap();
        let b = brute_force_map_with(&m, DEFAULT_ORACLE_CAP, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tightness_on_zero_model_and_at_optimum() {
        let zero = MrfModel::new(
            vec![2, 2],
            vec![Clique::new(vec![0, 1], PotentialTensor::zeros(vec![2, 2]))],
        )
        .unwrap();
        assert_eq!(verify_tightness(&zero, 10, 0).unwrap().fraction_reached(), 1.0);
        let m = pair();
        let (s, _) = brute_force_map(&m, DEFAULT_ORACLE_CAP).unwrap();
        let x = ContinuousAssignment::one_hot(m.label_counts(), &s);
        assert_eq!(round_bcd(&m, &x).unwrap(), s);
        assert!(verify_tightness(&m, 20, 1).unwrap().passed());
    }
}
