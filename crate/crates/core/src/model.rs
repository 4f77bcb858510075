//! MRF data model: potential tensors, cliques, assignments and energies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{self, PositionIndex};

/// Largest number of entries a single clique tensor may hold by default.
pub const DEFAULT_ENTRY_CAP: usize = 10_000_000;

/// Dense real tensor stored row-major (last mode fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl PotentialTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "tensor with dims {dims:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Self {
            dims,
            values: vec![0.0; len],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            dims: Vec::new(),
            values: vec![value],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// The single entry of a rank-0 tensor.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.dims.is_empty()).then(|| self.values[0])
    }

    /// Row-major offset of a multi-index. Panics if the index is out of range.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.dims.len());
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| {
            assert!(i < n, "index {i} out of range for mode of size {n}");
            acc * n + i
        })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.offset(index)]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clique {
    pub nodes: Vec<usize>,
    pub potential: PotentialTensor,
}

impl Clique {
    pub fn new(nodes: Vec<usize>, potential: PotentialTensor) -> Self {
        Self { nodes, potential }
    }

    pub fn unary(node: usize, energies: Vec<f64>) -> Self {
        let n = energies.len();
        Self {
            nodes: vec![node],
            potential: PotentialTensor {
                dims: vec![n],
                values: energies,
            },
        }
    }

    pub fn arity(&self) -> usize {
        self.nodes.len()
    }
}

/// A discrete MRF with dense clique potentials.
///
/// The node order inside each clique fixes the tensor mode of that node.
/// Models are immutable once built; the position index used by the gradient
/// and ADMM coefficient routines is built at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MrfModel {
    label_counts: Vec<usize>,
    cliques: Vec<Clique>,
    degree: usize,
    index: PositionIndex,
}

impl MrfModel {
    pub fn new(label_counts: Vec<usize>, cliques: Vec<Clique>) -> Result<Self> {
        Self::with_entry_cap(label_counts, cliques, DEFAULT_ENTRY_CAP)
    }

    pub fn with_entry_cap(label_counts: Vec<usize>, cliques: Vec<Clique>, cap: usize) -> Result<Self> {
        validate(&label_counts, &cliques, cap)?;
        let degree = cliques.iter().map(Clique::arity).max().unwrap_or(0).max(1);
        let index = PositionIndex::build(label_counts.len(), &cliques, degree);
        Ok(Self {
            label_counts,
            cliques,
            degree,
            index,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.label_counts.len()
    }

    pub fn label_counts(&self) -> &[usize] {
        &self.label_counts
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    /// Maximum clique size `D` (at least 1).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn position_index(&self) -> &PositionIndex {
        &self.index
    }

    /// Number of joint labelings, saturating at `u128::MAX`.
    pub fn search_space(&self) -> u128 {
        self.label_counts
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }

    pub fn validate(&self) -> Result<()> {
        validate(&self.label_counts, &self.cliques, DEFAULT_ENTRY_CAP)
    }

    /// `e(s) = sum_C f_C(s_C)` by direct lookup.
    pub fn energy_discrete(&self, labeling: &DiscreteLabeling) -> f64 {
        let labels = labeling.labels();
        debug_assert_eq!(labels.len(), self.num_nodes());
        let mut energy = 0.0;
        for clique in &self.cliques {
            let dims = clique.potential.dims();
            let offset = clique
                .nodes
                .iter()
                .zip(dims)
                .fold(0, |acc, (&node, &n)| acc * n + labels[node]);
            energy += clique.potential.values[offset];
        }
        energy
    }

    /// Multilinear energy `E(x) = sum_C F_C (x) {x_i}`. Feasibility is not
    /// required, only matching block sizes.
    pub fn energy_continuous(&self, x: &ContinuousAssignment) -> Result<f64> {
        x.check_dims(self)?;
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &ContinuousAssignment) -> f64 {
        let mut energy = 0.0;
        for clique in &self.cliques {
            energy += tensor::contract_clique(clique, None, |pos| x.block(clique.nodes[pos]))[0];
        }
        energy
    }

    /// Copy of this model with every potential entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for clique in &mut out.cliques {
            clique.potential.values_mut().iter_mut().for_each(|v| *v *= factor);
        }
        out
    }
}

/// Checks the structural invariants of a model description.
pub fn validate(label_counts: &[usize], cliques: &[Clique], entry_cap: usize) -> Result<()> {
    let n = label_counts.len();
    if let Some(i) = label_counts.iter().position(|&k| k == 0) {
        return Err(Error::DimensionMismatch(format!("node {i} has zero labels")));
    }
    for (c, clique) in cliques.iter().enumerate() {
        if clique.nodes.is_empty() {
            return Err(Error::DimensionMismatch(format!("clique {c} is empty")));
        }
        for (pos, &node) in clique.nodes.iter().enumerate() {
            if node >= n {
                return Err(Error::NodeIndexOutOfRange {
                    clique: c,
                    node,
                    num_nodes: n,
                });
            }
            if clique.nodes[..pos].contains(&node) {
                return Err(Error::DuplicateNodeInClique { clique: c, node });
            }
        }
        let dims = clique.potential.dims();
        let expected: Vec<usize> = clique.nodes.iter().map(|&i| label_counts[i]).collect();
        if dims != expected.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "clique {c} has tensor dims {dims:?} but its nodes have label counts {expected:?}"
            )));
        }
        let entries = clique.potential.values().len();
        if entries != dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch(format!(
                "clique {c} holds {entries} values for dims {dims:?}"
            )));
        }
        if entries > entry_cap {
            return Err(Error::TensorTooLarge {
                clique: c,
                entries,
                cap: entry_cap,
            });
        }
        if let Some(entry) = clique.potential.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { clique: c, entry });
        }
    }
    Ok(())
}

/// Result of rescaling all potentials into `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub model: MrfModel,
    /// Original energies equal normalized energies times `scale`.
    pub scale: f64,
    pub offset: f64,
    /// Set when every potential entry is zero; the model is returned as is.
    pub all_zero: bool,
}

impl Normalization {
    pub fn to_original(&self, normalized_energy: f64) -> f64 {
        normalized_energy * self.scale + self.offset
    }
}

/// Divides every entry by the largest absolute entry over all cliques.
pub fn normalize_potentials(model: &MrfModel) -> Normalization {
    let max_abs = model
        .cliques
        .iter()
        .flat_map(|c| c.potential.values().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Normalization {
            model: model.clone(),
            scale: 1.0,
            offset: 0.0,
            all_zero: true,
        };
    }
    let mut normalized = model.clone();
    for clique in &mut normalized.cliques {
        clique.potential.values_mut().iter_mut().for_each(|v| *v /= max_abs);
    }
    Normalization {
        model: normalized,
        scale: max_abs,
        offset: 0.0,
        all_zero: false,
    }
}

/// One label index per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteLabeling(Vec<usize>);

impl DiscreteLabeling {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    pub fn zeros(num_nodes: usize) -> Self {
        Self(vec![0; num_nodes])
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, model: &MrfModel) -> Result<()> {
        if self.0.len() != model.num_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "labeling has {} entries for {} nodes",
                self.0.len(),
                model.num_nodes()
            )));
        }
        for (i, (&s, &k)) in self.0.iter().zip(model.label_counts()).enumerate() {
            if s >= k {
                return Err(Error::DimensionMismatch(format!(
                    "label {s} of node {i} exceeds its {k} labels"
                )));
            }
        }
        Ok(())
    }
}

/// One real vector per node. Feasible points lie in the product of simplices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousAssignment {
    blocks: Vec<Vec<f64>>,
}

impl ContinuousAssignment {
    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Self {
        Self { blocks }
    }

    pub fn zeros(label_counts: &[usize]) -> Self {
        Self {
            blocks: label_counts.iter().map(|&k| vec![0.0; k]).collect(),
        }
    }

    pub fn one_hot(label_counts: &[usize], labeling: &DiscreteLabeling) -> Self {
        let mut x = Self::zeros(label_counts);
        for (block, &s) in x.blocks.iter_mut().zip(labeling.labels()) {
            block[s] = 1.0;
        }
        x
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.blocks
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.blocks[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn check_dims(&self, model: &MrfModel) -> Result<()> {
        if self.blocks.len() != model.num_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "assignment has {} blocks for {} nodes",
                self.blocks.len(),
                model.num_nodes()
            )));
        }
        for (i, (b, &k)) in self.blocks.iter().zip(model.label_counts()).enumerate() {
            if b.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "block {i} has length {} but node has {k} labels",
                    b.len()
                )));
            }
        }
        Ok(())
    }

    /// Membership in the product of simplices: sums within `1e-9`, entries
    /// at least `-1e-12`.
    pub fn is_feasible(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| (b.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && b.iter().all(|&v| v >= -1e-12))
    }

    /// Relaxed membership used for the nonnegative ADMM blocks.
    pub fn is_nonnegative(&self) -> bool {
        self.blocks.iter().flatten().all(|&v| v >= -1e-12)
    }

    /// Labeling of a one-hot assignment; `None` if any block is not exactly
    /// a vertex.
    pub fn to_labeling(&self) -> Option<DiscreteLabeling> {
        self.blocks
            .iter()
            .map(|b| one_hot_label(b))
            .collect::<Option<Vec<_>>>()
            .map(DiscreteLabeling)
    }

    /// `self + alpha * dir`.
    pub fn add_scaled(&self, alpha: f64, dir: &ContinuousAssignment) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&dir.blocks)
                .map(|(a, b)| a.iter().zip(b).map(|(x, r)| x + alpha * r).collect())
                .collect(),
        }
    }

    /// `self - other`.
    pub fn sub(&self, other: &ContinuousAssignment) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn dot(&self, other: &ContinuousAssignment) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| x * y)
            .sum()
    }

    pub fn squared_distance(&self, other: &ContinuousAssignment) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    }

    pub fn max_abs_diff(&self, other: &ContinuousAssignment) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Label of an exact vertex of the simplex.
pub(crate) fn one_hot_label(block: &[f64]) -> Option<usize> {
    let mut label = None;
    for (s, &v) in block.iter().enumerate() {
        if v == 1.0 && label.is_none() {
            label = Some(s);
        } else if v != 0.0 {
            return None;
        }
    }
    label
}

/// `x_i(s) = 1 / |S_i|` for every node.
pub fn init_homogeneous(model: &MrfModel) -> ContinuousAssignment {
    ContinuousAssignment {
        blocks: model.label_counts().iter().map(|&k| vec![1.0 / k as f64; k]).collect(),
    }
}

/// One-hot at the argmin of each node's summed unary potentials. Nodes
/// without a unary clique get label 0; ties go to the lowest label.
pub fn init_unary(model: &MrfModel) -> ContinuousAssignment {
    let mut sums: Vec<Vec<f64>> = model.label_counts().iter().map(|&k| vec![0.0; k]).collect();
    for clique in model.cliques().iter().filter(|c| c.arity() == 1) {
        for (acc, v) in sums[clique.nodes[0]].iter_mut().zip(clique.potential.values()) {
            *acc += v;
        }
    }
    let labels = sums.iter().map(|c| argmin_lowest(c)).collect();
    ContinuousAssignment::one_hot(model.label_counts(), &DiscreteLabeling(labels))
}

/// Uniform draw from each node's simplex (normalized exponentials).
pub fn init_random(model: &MrfModel, seed: u64) -> ContinuousAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = model
        .label_counts()
        .iter()
        .map(|&k| {
            let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = draws.iter().sum();
            draws.into_iter().map(|v| v / total).collect()
        })
        .collect();
    ContinuousAssignment { blocks }
}

/// Index of the smallest entry, lowest index on ties. Empty input gives 0.
pub(crate) fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (s, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = s;
        }
    }
    best
}
