//! Linear minimization and Euclidean projections over the per-node sets.

/// One-hot vector at the smallest entry of `c` (lowest index on ties).
pub fn argmin_vertex(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    if !c.is_empty() {
        out[crate::model::argmin_lowest(c)] = 1.0;
    }
    out
}

/// Euclidean projection onto the probability simplex.
///
/// Sorts in decreasing order and picks the threshold `tau` at the last
/// position where the running mean condition still holds, so that
/// `sum max(v - tau, 0) = 1`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = sorted[0] - 1.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Elementwise `max(v, 0)`.
pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_vertex_examples() {
        assert_eq!(argmin_vertex(&[0.3, -0.7]), vec![0.0, 1.0]);
        assert_eq!(argmin_vertex(&[1.0, 1.0]), vec![1.0, 0.0]);
        assert_eq!(argmin_vertex(&[5.0]), vec![1.0]);
    }

    #[test]
    fn project_simplex_examples() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[0.5, 0.5, 1.5]), vec![0.0, 0.0, 1.0]);
        let p = project_simplex(&[-3.0, -3.0, -3.0]);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn project_nonneg_examples() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(project_nonneg(&[-0.3, -0.1, 0.4]), vec![0.0, 0.0, 0.4]);
    }
}
