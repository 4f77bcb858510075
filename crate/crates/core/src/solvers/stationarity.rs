use crate::error::Result;
use crate::model::{ContinuousAssignment, MrfModel};
use crate::par::Execution;
use crate::tensor::{gradient_unchecked, GradientVector};

/// Frank-Wolfe gap `max_{u in X} g^T (x - u)`, solved blockwise by picking
/// the smallest gradient entry of each node. Clamped at zero.
pub fn fw_gap(grad: &GradientVector, x: &ContinuousAssignment) -> f64 {
    let gap: f64 = grad
        .blocks()
        .iter()
        .zip(x.blocks())
        .map(|(g, xi)| {
            let inner: f64 = g.iter().zip(xi).map(|(a, b)| a * b).sum();
            let min = g.iter().copied().fold(f64::INFINITY, f64::min);
            if g.is_empty() {
                0.0
            } else {
                inner - min
            }
        })
        .sum();
    gap.max(0.0)
}

/// Stationarity gap of a feasible point: zero exactly at stationary points
/// of the relaxation, positive otherwise.
pub fn check_stationarity(model: &MrfModel, x: &ContinuousAssignment) -> Result<f64> {
    x.check_dims(model)?;
    Ok(fw_gap(&gradient_unchecked(model, x, Execution::Serial), x))
}
