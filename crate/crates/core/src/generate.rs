//! Seeded synthetic instances.

use std::ops::RangeInclusive;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Clique, MrfModel, PotentialTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    N4,
    /// 4-connectivity plus both diagonals.
    N8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum PairwisePotential {
    /// `f(s, t) = lambda [s != t]`.
    Potts { lambda: f64 },
    /// Entries i.i.d. uniform on `[-1, 1]`.
    Random,
}

fn uniform_tensor(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> PotentialTensor {
    let len = dims.iter().product();
    let values = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
    PotentialTensor::new(dims, values).expect("length matches dims")
}

/// Grid with nodes numbered row-major (`r * cols + c`). Unary cliques come
/// first, then edges: right and down neighbors, plus both diagonals for
/// [`Connectivity::N8`].
pub fn gen_grid(
    rows: usize,
    cols: usize,
    labels: usize,
    connectivity: Connectivity,
    potential: PairwisePotential,
    seed: u64,
) -> Result<MrfModel> {
    if rows == 0 || cols == 0 || labels == 0 {
        return Err(Error::InvalidConfig(
            "grid needs at least one row, column and label".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let mut cliques: Vec<Clique> = (0..n)
        .map(|i| Clique::new(vec![i], uniform_tensor(&mut rng, vec![labels])))
        .collect();
    let node = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((node(r, c), node(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((node(r, c), node(r + 1, c)));
            }
            if connectivity == Connectivity::N8 && r + 1 < rows {
                if c + 1 < cols {
                    edges.push((node(r, c), node(r + 1, c + 1)));
                }
                if c > 0 {
                    edges.push((node(r, c), node(r + 1, c - 1)));
                }
            }
        }
    }
    for (i, j) in edges {
        let tensor = match potential {
            PairwisePotential::Potts { lambda } => {
                let values = (0..labels * labels)
                    .map(|k| if k / labels == k % labels { 0.0 } else { lambda })
                    .collect();
                PotentialTensor::new(vec![labels, labels], values)?
            }
            PairwisePotential::Random => uniform_tensor(&mut rng, vec![labels, labels]),
        };
        cliques.push(Clique::new(vec![i, j], tensor));
    }
    MrfModel::new(vec![labels; n], cliques)
}

/// Uniform unaries plus `num_triples` third-order cliques over distinct node
/// triples, each listed in random order, with uniform tensors.
pub fn gen_higher_order(nodes: usize, labels: usize, num_triples: usize, seed: u64) -> Result<MrfModel> {
    if labels == 0 {
        return Err(Error::InvalidConfig("at least one label is required".into()));
    }
    let available = (nodes as u128 * nodes.saturating_sub(1) as u128 * nodes.saturating_sub(2) as u128) / 6;
    if num_triples as u128 > available {
        return Err(Error::InvalidConfig(format!(
            "{num_triples} triples requested but only {available} exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cliques: Vec<Clique> = (0..nodes)
        .map(|i| Clique::new(vec![i], uniform_tensor(&mut rng, vec![labels])))
        .collect();
    let mut seen = std::collections::HashSet::new();
    while seen.len() < num_triples {
        let mut triple = index::sample(&mut rng, nodes, 3).into_vec();
        let mut key = triple.clone();
        key.sort_unstable();
        if seen.insert(key) {
            // Randomize which node sits at which tensor mode.
            triple.swap(0, rng.random_range(0..3));
            cliques.push(Clique::new(triple, uniform_tensor(&mut rng, vec![labels; 3])));
        }
    }
    MrfModel::new(vec![labels; nodes], cliques)
}

/// Random model of degree exactly `max_order` (when `nodes` allows it):
/// uniform unaries on every node, then `num_cliques` cliques over distinct
/// random nodes whose arity is drawn from `2..=max_order`, the first one at
/// full arity. Label counts are drawn uniformly from `labels`.
pub fn gen_random(
    nodes: usize,
    labels: RangeInclusive<usize>,
    max_order: usize,
    num_cliques: usize,
    seed: u64,
) -> Result<MrfModel> {
    if nodes == 0 || *labels.start() == 0 || labels.is_empty() || max_order == 0 || max_order > nodes {
        return Err(Error::InvalidConfig(
            "need 1 <= max_order <= nodes and a nonempty label range above 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label_counts: Vec<usize> = (0..nodes).map(|_| rng.random_range(labels.clone())).collect();
    let mut cliques: Vec<Clique> = (0..nodes)
        .map(|i| Clique::new(vec![i], uniform_tensor(&mut rng, vec![label_counts[i]])))
        .collect();
    if max_order >= 2 {
        for k in 0..num_cliques {
            let arity = if k == 0 {
                max_order
            } else {
                rng.random_range(2..=max_order)
            };
            let members = index::sample(&mut rng, nodes, arity).into_vec();
            let dims = members.iter().map(|&i| label_counts[i]).collect();
            cliques.push(Clique::new(members, uniform_tensor(&mut rng, dims)));
        }
    }
    MrfModel::new(label_counts, cliques)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(m: &MrfModel) -> usize {
        m.cliques().iter().filter(|c| c.arity() == 2).count()
    }

    #[test]
    fn grid_edge_counts() {
        let one = gen_grid(1, 1, 2, Connectivity::N4, PairwisePotential::Random, 0).unwrap();
        assert_eq!((one.num_nodes(), edges(&one)), (1, 0));
        assert_eq!(
            edges(&gen_grid(2, 2, 2, Connectivity::N4, PairwisePotential::Random, 0).unwrap()),
            4
        );
        assert_eq!(
            edges(&gen_grid(2, 2, 2, Connectivity::N8, PairwisePotential::Random, 0).unwrap()),
            6
        );
        assert_eq!(
            edges(&gen_grid(3, 3, 2, Connectivity::N4, PairwisePotential::Random, 0).unwrap()),
            12
        );
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_grid(3, 4, 3, Connectivity::N8, PairwisePotential::Random, 7).unwrap();
        let b = gen_grid(3, 4, 3, Connectivity::N8, PairwisePotential::Random, 7).unwrap();
        assert_eq!(a.cliques(), b.cliques());
        let c = gen_grid(3, 4, 3, Connectivity::N8, PairwisePotential::Random, 8).unwrap();
        assert_ne!(a.cliques(), c.cliques());
        let h1 = gen_higher_order(6, 2, 5, 3).unwrap();
        let h2 = gen_higher_order(6, 2, 5, 3).unwrap();
        assert_eq!(h1.cliques(), h2.cliques());
    }

    #[test]
    fn higher_order_shapes() {
        let m = gen_higher_order(6, 2, 0, 1).unwrap();
        assert_eq!(m.degree(), 1);
        let m = gen_higher_order(5, 3, 10, 1).unwrap();
        assert_eq!(m.degree(), 3);
        assert_eq!(m.cliques().len(), 15);
        assert!(gen_higher_order(5, 3, 11, 1).is_err());
    }

    #[test]
    fn random_model_reaches_requested_degree() {
        for order in 1..=4 {
            let m = gen_random(5, 1..=3, order, 4, order as u64).unwrap();
            assert_eq!(m.degree(), order);
        }
    }

    #[test]
    fn potts_entries() {
        let m = gen_grid(1, 2, 3, Connectivity::N4, PairwisePotential::Potts { lambda: 0.5 }, 0).unwrap();
        let edge = m.cliques().iter().find(|c| c.arity() == 2).unwrap();
        assert_eq!(edge.potential.get(&[1, 1]), 0.0);
        assert_eq!(edge.potential.get(&[0, 2]), 0.5);
    }
}
