//! Exact line search along `x + alpha r`, `alpha` in `[0, 1]`.
//!
//! Along a segment the multilinear energy is a polynomial of degree at most
//! `D`. Its coefficients are recovered in closed form for pairwise models
//! and from `D` energy probes otherwise; the minimizer comes from the
//! derivative roots up to degree 3 and from a grid scan above.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ContinuousAssignment, MrfModel};
use crate::tensor::contract_clique;

/// Horner evaluation of `sum_k coeffs[k] * alpha^k`.
pub fn poly_eval(coeffs: &[f64], alpha: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * alpha + c)
}

/// Closed-form `(A, B, C)` with `E(x + alpha r) = A alpha^2 + B alpha + C`
/// on models whose cliques have at most two nodes.
pub fn pairwise_coeffs(
    model: &MrfModel,
    x: &ContinuousAssignment,
    r: &ContinuousAssignment,
) -> Result<(f64, f64, f64)> {
    if model.degree() > 2 {
        return Err(Error::NotPairwise(model.degree()));
    }
    x.check_dims(model)?;
    r.check_dims(model)?;
    Ok(pairwise_unchecked(model, x, r))
}

pub(crate) fn pairwise_unchecked(
    model: &MrfModel,
    x: &ContinuousAssignment,
    r: &ContinuousAssignment,
) -> (f64, f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for clique in model.cliques() {
        match *clique.nodes.as_slice() {
            [i] => {
                b += dot(clique.potential.values(), r.block(i));
            }
            [i, j] => {
                let pick = |first: &ContinuousAssignment, second: &ContinuousAssignment| {
                    contract_clique(
                        clique,
                        None,
                        |pos| if pos == 0 { first.block(i) } else { second.block(j) },
                    )[0]
                };
                a += pick(r, r);
                b += pick(x, r) + pick(r, x);
            }
            _ => unreachable!("degree checked by caller"),
        }
    }
    (a, b, model.energy_unchecked(x))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coefficients of `p(alpha) = E(x + alpha r)`, constant term first, of
/// length `D + 1`. Pairwise models use the closed form.
pub fn poly_coeffs(model: &MrfModel, x: &ContinuousAssignment, r: &ContinuousAssignment) -> Result<Vec<f64>> {
    x.check_dims(model)?;
    r.check_dims(model)?;
    poly_coeffs_unchecked(model, x, r)
}

pub(crate) fn poly_coeffs_unchecked(
    model: &MrfModel,
    x: &ContinuousAssignment,
    r: &ContinuousAssignment,
) -> Result<Vec<f64>> {
    match model.degree() {
        1 => {
            let (_, b, c) = pairwise_unchecked(model, x, r);
            Ok(vec![c, b])
        }
        2 => {
            let (a, b, c) = pairwise_unchecked(model, x, r);
            Ok(vec![c, b, a])
        }
        _ => numeric_unchecked(model, x, r),
    }
}

/// Probe-based recovery: `p(0) = E(x)` and `p(k / D)` for `k = 1..=D`
/// give a Vandermonde system for the remaining coefficients.
pub fn poly_coeffs_numeric(model: &MrfModel, x: &ContinuousAssignment, r: &ContinuousAssignment) -> Result<Vec<f64>> {
    x.check_dims(model)?;
    r.check_dims(model)?;
    numeric_unchecked(model, x, r)
}

fn numeric_unchecked(model: &MrfModel, x: &ContinuousAssignment, r: &ContinuousAssignment) -> Result<Vec<f64>> {
    let degree = model.degree();
    let constant = model.energy_unchecked(x);
    let probes: Vec<f64> = (1..=degree).map(|k| k as f64 / degree as f64).collect();
    let matrix = DMatrix::from_fn(degree, degree, |row, col| probes[row].powi(col as i32 + 1));
    let rhs = DVector::from_iterator(
        degree,
        probes
            .iter()
            .map(|&a| model.energy_unchecked(&x.add_scaled(a, r)) - constant),
    );
    let solution = matrix.lu().solve(&rhs).ok_or(Error::SingularProbeSystem)?;
    let mut coeffs = Vec::with_capacity(degree + 1);
    coeffs.push(constant);
    coeffs.extend(solution.iter().copied());
    Ok(coeffs)
}

/// Global minimizer of a polynomial on `[0, 1]`, smallest `alpha` on ties.
pub fn minimize_polynomial(coeffs: &[f64], delta: f64) -> f64 {
    let effective = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    let mut candidates = vec![0.0, 1.0];
    if effective <= 3 {
        let c = |k: usize| coeffs.get(k).copied().unwrap_or(0.0);
        candidates.extend(
            derivative_roots(c(1), c(2), c(3))
                .into_iter()
                .filter(|&a| a > 0.0 && a < 1.0),
        );
    } else {
        let steps = (1.0 / delta).round() as usize;
        candidates = (0..=steps).map(|k| (k as f64 * delta).min(1.0)).collect();
    }
    candidates.sort_by(f64::total_cmp);
    let mut best = candidates[0];
    let mut best_value = poly_eval(coeffs, best);
    for &a in &candidates[1..] {
        let v = poly_eval(coeffs, a);
        if v < best_value {
            best = a;
            best_value = v;
        }
    }
    best
}

/// Real roots of `a1 + 2 a2 t + 3 a3 t^2`.
fn derivative_roots(a1: f64, a2: f64, a3: f64) -> Vec<f64> {
    let (q, b, c) = (3.0 * a3, 2.0 * a2, a1);
    if q == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * q * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let t = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![t / q];
    if t != 0.0 {
        roots.push(c / t);
    }
    roots
}

/// Step length minimizing `E(x + alpha r)` over `[0, 1]`; `0` when `r = 0`.
pub fn line_search(model: &MrfModel, x: &ContinuousAssignment, r: &ContinuousAssignment, delta: f64) -> Result<f64> {
    x.check_dims(model)?;
    r.check_dims(model)?;
    line_search_unchecked(model, x, r, delta)
}

pub(crate) fn line_search_unchecked(
    model: &MrfModel,
    x: &ContinuousAssignment,
    r: &ContinuousAssignment,
    delta: f64,
) -> Result<f64> {
    if r.is_zero() {
        return Ok(0.0);
    }
    let coeffs = poly_coeffs_unchecked(model, x, r)?;
    Ok(minimize_polynomial(&coeffs, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_homogeneous, Clique, PotentialTensor};

    #[test]
    fn parabola_vertex() {
        assert_eq!(minimize_polynomial(&[3.0, -1.0, 1.0], 1e-4), 0.5);
    }

    #[test]
    fn concave_quadratic_picks_endpoint() {
        // -alpha^2 + 0.5 alpha: p(0) = 0, p(1) = -0.5
        assert_eq!(minimize_polynomial(&[0.0, 0.5, -1.0], 1e-4), 1.0);
        // -alpha^2 + 1.5 alpha: p(1) = 0.5 > p(0)
        assert_eq!(minimize_polynomial(&[0.0, 1.5, -1.0], 1e-4), 0.0);
    }

    #[test]
    fn cubic_interior_minimum() {
        // (alpha - 0.3)^2 (alpha + 2): derivative root at 0.3 is the minimum on [0, 1]
        let coeffs = [0.18, -1.11, 1.4, 1.0];
        assert!((minimize_polynomial(&coeffs, 1e-4) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn quartic_scan() {
        // (alpha - 0.25)^2 (alpha - 0.9)^2 + alpha: scan to within delta
        let r1 = 0.25f64;
        let r2 = 0.9f64;
        let coeffs = [
            r1 * r1 * r2 * r2,
            -2.0 * r1 * r2 * (r1 + r2) + 1.0,
            r1 * r1 + r2 * r2 + 4.0 * r1 * r2,
            -2.0 * (r1 + r2),
            1.0,
        ];
        let a = minimize_polynomial(&coeffs, 1e-4);
        let fine = (0..=1_000_000)
            .map(|k| k as f64 * 1e-6)
            .min_by(|a, b| poly_eval(&coeffs, *a).total_cmp(&poly_eval(&coeffs, *b)))
            .unwrap();
        assert!((a - fine).abs() <= 1e-4);
    }

    #[test]
    fn zero_direction() {
        let m = MrfModel::new(
            vec![2, 2],
            vec![Clique::new(
                vec![0, 1],
                PotentialTensor::new(vec![2, 2], vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
            )],
        )
        .unwrap();
        let x = init_homogeneous(&m);
        let r = ContinuousAssignment::zeros(m.label_counts());
        assert_eq!(line_search(&m, &x, &r, 1e-4).unwrap(), 0.0);
        assert_eq!(poly_coeffs(&m, &x, &r).unwrap(), vec![1.5, 0.0, 0.0]);
    }
}
