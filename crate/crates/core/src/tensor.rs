//! Mode products and the per-node linear coefficients built from them.
//!
//! Contractions always run from the highest mode down, so each step reduces
//! a contiguous trailing stride of the row-major buffer.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::model::{Clique, ContinuousAssignment, MrfModel, PotentialTensor};
use crate::par::{self, Execution};

/// Per-node blocks shaped like an assignment: `c_i`, `grad E` or `p^d`.
pub type GradientVector = ContinuousAssignment;

/// Contracts mode `mode` of a row-major buffer with `v`.
fn contract_mode(dims: &[usize], values: &[f64], v: &[f64], mode: usize) -> Vec<f64> {
    let outer: usize = dims[..mode].iter().product();
    let n = dims[mode];
    let inner: usize = dims[mode + 1..].iter().product();
    let mut out = vec![0.0; outer * inner];
    for a in 0..outer {
        let dst = &mut out[a * inner..(a + 1) * inner];
        for (k, &w) in v.iter().enumerate().take(n) {
            let base = (a * n + k) * inner;
            for (o, &f) in dst.iter_mut().zip(&values[base..base + inner]) {
                *o += f * w;
            }
        }
    }
    out
}

/// Contracts every mode of a clique tensor except `keep`, using `block(pos)`
/// as the vector for mode `pos`. Returns a length-1 buffer when `keep` is
/// `None`.
pub(crate) fn contract_clique<'a, F>(clique: &Clique, keep: Option<usize>, block: F) -> Vec<f64>
where
    F: Fn(usize) -> &'a [f64],
{
    let tensor = &clique.potential;
    let mut dims = tensor.dims().to_vec();
    let mut cur: Cow<[f64]> = Cow::Borrowed(tensor.values());
    for mode in (0..dims.len()).rev() {
        if keep == Some(mode) {
            continue;
        }
        cur = Cow::Owned(contract_mode(&dims, &cur, block(mode), mode));
        dims.remove(mode);
    }
    cur.into_owned()
}

/// Mode-`mode` product `F (x)_mode v` (modes are 0-based).
pub fn mode_product(tensor: &PotentialTensor, v: &[f64], mode: usize) -> Result<PotentialTensor> {
    multi_product(tensor, &[v], &[mode])
}

/// Product of a tensor with several vectors at distinct modes. The result
/// does not depend on the order in which the pairs are given; an empty set
/// returns the tensor unchanged, and consuming every mode gives a rank-0
/// tensor.
pub fn multi_product(tensor: &PotentialTensor, vectors: &[&[f64]], modes: &[usize]) -> Result<PotentialTensor> {
    if vectors.len() != modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vectors for {} modes",
            vectors.len(),
            modes.len()
        )));
    }
    let rank = tensor.rank();
    let mut pairs: Vec<(usize, &[f64])> = Vec::with_capacity(modes.len());
    for (&mode, &v) in modes.iter().zip(vectors) {
        if mode >= rank {
            return Err(Error::ModeOutOfRange { mode, rank });
        }
        if pairs.iter().any(|&(m, _)| m == mode) {
            return Err(Error::RepeatedMode(mode));
        }
        if v.len() != tensor.dims()[mode] {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for mode {mode} of size {}",
                v.len(),
                tensor.dims()[mode]
            )));
        }
        pairs.push((mode, v));
    }
    pairs.sort_by_key(|p| std::cmp::Reverse(p.0));

    let mut dims = tensor.dims().to_vec();
    let mut values: Cow<[f64]> = Cow::Borrowed(tensor.values());
    for (mode, v) in pairs {
        values = Cow::Owned(contract_mode(&dims, &values, v, mode));
        dims.remove(mode);
    }
    PotentialTensor::new(dims, values.into_owned())
}

/// Lookup tables from nodes to the cliques (and positions) they occupy.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionIndex {
    /// `[node][position]` -> clique ids, ascending.
    at_position: Vec<Vec<Vec<usize>>>,
    /// `[node]` -> `(clique, position)`, ascending by clique.
    memberships: Vec<Vec<(usize, usize)>>,
    /// `[node]` -> other nodes sharing at least one clique, ascending.
    neighbors: Vec<Vec<usize>>,
}

impl PositionIndex {
    pub(crate) fn build(num_nodes: usize, cliques: &[Clique], degree: usize) -> Self {
        let mut at_position = vec![vec![Vec::new(); degree]; num_nodes];
        let mut memberships = vec![Vec::new(); num_nodes];
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for (c, clique) in cliques.iter().enumerate() {
            for (pos, &node) in clique.nodes.iter().enumerate() {
                at_position[node][pos].push(c);
                memberships[node].push((c, pos));
                neighbors[node].extend(clique.nodes.iter().copied().filter(|&j| j != node));
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            at_position,
            memberships,
            neighbors,
        }
    }

    /// Cliques whose `position`-th node (0-based) is `node`.
    pub fn cliques_at(&self, node: usize, position: usize) -> &[usize] {
        self.at_position[node].get(position).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn memberships(&self, node: usize) -> &[(usize, usize)] {
        &self.memberships[node]
    }

    /// Nodes whose change invalidates the cached coefficients of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }
}

pub fn build_position_index(model: &MrfModel) -> PositionIndex {
    PositionIndex::build(model.num_nodes(), model.cliques(), model.degree())
}

fn check_node(model: &MrfModel, node: usize) -> Result<()> {
    if node >= model.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "node {node} out of range for {} nodes",
            model.num_nodes()
        )));
    }
    Ok(())
}

/// `c_i = sum_{C containing i} F_C (x) {x_j}_{j in C \ i}`.
pub fn bcd_coefficient(model: &MrfModel, x: &ContinuousAssignment, node: usize) -> Result<Vec<f64>> {
    x.check_dims(model)?;
    check_node(model, node)?;
    Ok(node_coefficient(model, x, node))
}

pub(crate) fn node_coefficient(model: &MrfModel, x: &ContinuousAssignment, node: usize) -> Vec<f64> {
    let mut c = vec![0.0; model.label_counts()[node]];
    for &(cid, pos) in model.position_index().memberships(node) {
        let clique = &model.cliques()[cid];
        let part = contract_clique(clique, Some(pos), |m| x.block(clique.nodes[m]));
        c.iter_mut().zip(&part).for_each(|(a, b)| *a += b);
    }
    c
}

/// Full gradient; block `i` equals `bcd_coefficient(model, x, i)`.
pub fn full_gradient(model: &MrfModel, x: &ContinuousAssignment) -> Result<GradientVector> {
    full_gradient_with(model, x, Execution::Serial)
}

pub fn full_gradient_with(model: &MrfModel, x: &ContinuousAssignment, exec: Execution) -> Result<GradientVector> {
    x.check_dims(model)?;
    Ok(gradient_unchecked(model, x, exec))
}

pub(crate) fn gradient_unchecked(model: &MrfModel, x: &ContinuousAssignment, exec: Execution) -> GradientVector {
    GradientVector::from_blocks(par::map_range(exec, model.num_nodes(), |i| {
        node_coefficient(model, x, i)
    }))
}

/// ADMM linear coefficient `p_i^d` for the decomposed copy `block`
/// (0-based, so `block = 0` is `x^1`). Sums, over every clique whose
/// `block`-th node is `node`, the tensor contracted with the other
/// positions' nodes taken from their own copies.
pub fn admm_coefficient(model: &MrfModel, xs: &[ContinuousAssignment], block: usize, node: usize) -> Result<Vec<f64>> {
    if xs.len() != model.degree() {
        return Err(Error::DimensionMismatch(format!(
            "{} decomposed copies for a degree-{} model",
            xs.len(),
            model.degree()
        )));
    }
    if block >= model.degree() {
        return Err(Error::DimensionMismatch(format!(
            "copy {block} out of range for degree {}",
            model.degree()
        )));
    }
    for x in xs {
        x.check_dims(model)?;
    }
    check_node(model, node)?;
    Ok(admm_coefficient_unchecked(model, xs, block, node))
}

pub(crate) fn admm_coefficient_unchecked(
    model: &MrfModel,
    xs: &[ContinuousAssignment],
    block: usize,
    node: usize,
) -> Vec<f64> {
    let mut p = vec![0.0; model.label_counts()[node]];
    for &cid in model.position_index().cliques_at(node, block) {
        let clique = &model.cliques()[cid];
        let part = contract_clique(clique, Some(block), |m| xs[m].block(clique.nodes[m]));
        p.iter_mut().zip(&part).for_each(|(a, b)| *a += b);
    }
    p
}

/// Cached per-(copy, node) coefficient vectors with neighbor-based
/// invalidation.
#[derive(Debug, Clone)]
pub struct CoefficientCache {
    values: Vec<Vec<Vec<f64>>>,
    dirty: Vec<Vec<bool>>,
    recomputed: usize,
}

impl CoefficientCache {
    /// Cache with `copies` coefficient families, all initially stale.
    pub fn new(model: &MrfModel, copies: usize) -> Self {
        let values = (0..copies)
            .map(|_| model.label_counts().iter().map(|&k| vec![0.0; k]).collect())
            .collect();
        Self {
            values,
            dirty: vec![vec![true; model.num_nodes()]; copies],
            recomputed: 0,
        }
    }

    /// Records that `node`'s block in copy `changed` moved. Coefficients of
    /// its neighbors go stale in every family except `changed` itself,
    /// since no clique holds the same node twice. For single-family caches
    /// (BCD) pass `None` to invalidate the lone family.
    pub fn invalidate(&mut self, model: &MrfModel, changed: Option<usize>, node: usize) {
        for (family, dirty) in self.dirty.iter_mut().enumerate() {
            if changed == Some(family) {
                continue;
            }
            for &j in model.position_index().neighbors(node) {
                dirty[j] = true;
            }
        }
    }

    /// BCD coefficient `c_i`, recomputed only when stale.
    pub fn bcd(&mut self, model: &MrfModel, x: &ContinuousAssignment, node: usize) -> &[f64] {
        if self.dirty[0][node] {
            self.values[0][node] = node_coefficient(model, x, node);
            self.dirty[0][node] = false;
            self.recomputed += 1;
        }
        &self.values[0][node]
    }

    /// Brings every stale `p_i^block` up to date and returns the family.
    pub fn refresh_admm(
        &mut self,
        model: &MrfModel,
        xs: &[ContinuousAssignment],
        block: usize,
        exec: Execution,
    ) -> &[Vec<f64>] {
        let dirty = &self.dirty[block];
        let fresh: Vec<Option<Vec<f64>>> = par::map_range(exec, model.num_nodes(), |i| {
            dirty[i].then(|| admm_coefficient_unchecked(model, xs, block, i))
        });
        for (i, v) in fresh.into_iter().enumerate() {
            if let Some(v) = v {
                self.values[block][i] = v;
                self.dirty[block][i] = false;
                self.recomputed += 1;
            }
        }
        &self.values[block]
    }

    /// Total number of vector recomputations so far.
    pub fn recomputed(&self) -> usize {
        self.recomputed
    }
}
