//! MAP inference for discrete Markov random fields of any order, by direct
//! optimization of a tight continuous relaxation over products of simplices.
//!
//! The energy `E(x) = sum_C F_C (x) {x_i}_{i in C}` is minimized by block
//! coordinate descent, projected gradient, Frank-Wolfe and an ADMM on a
//! multilinear decomposition. Continuous results are rounded with BCD, which
//! never increases the energy.

pub mod acceptance;
pub mod bench;
pub mod cli;
pub mod error;
pub mod generate;
pub mod io;
pub mod model;
pub mod oracle;
pub mod par;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{Clique, ContinuousAssignment, DiscreteLabeling, MrfModel, PotentialTensor};
pub use solvers::{SolverConfig, SolverKind, SolverReport, Termination};
