//! Reader for UAI `MARKOV` files.
//!
//! Factor tables list entries with the last scope variable changing
//! fastest, which is exactly the row-major layout of [`PotentialTensor`].
//! Each factor value `psi` becomes the energy `-ln psi`.

use super::Tokens;
use crate::error::{Error, Result};
use crate::model::{Clique, MrfModel, PotentialTensor};

pub fn parse_uai(text: &str) -> Result<MrfModel> {
    let mut t = Tokens::new(text, None);
    let preamble = t.next("preamble")?;
    if !preamble.eq_ignore_ascii_case("MARKOV") {
        return Err(Error::BadPreamble(format!("expected `MARKOV`, found `{preamble}`")));
    }
    let n = t.next_usize("variable count")?;
    let label_counts = (0..n)
        .map(|_| t.next_usize("cardinality"))
        .collect::<Result<Vec<_>>>()?;
    let m = t.next_usize("function count")?;
    let mut scopes = Vec::with_capacity(m);
    for _ in 0..m {
        let size = t.next_usize("scope size")?;
        let scope = (0..size)
            .map(|_| t.next_usize("scope variable"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&bad) = scope.iter().find(|&&v| v >= n) {
            return Err(t.error(format!("scope variable {bad} out of range for {n} variables")));
        }
        scopes.push(scope);
    }
    let mut cliques = Vec::with_capacity(m);
    for (factor, scope) in scopes.into_iter().enumerate() {
        let dims: Vec<usize> = scope.iter().map(|&v| label_counts[v]).collect();
        let expected: usize = dims.iter().product();
        let count = t.next_usize("table entry count")?;
        if count != expected {
            return Err(Error::CountMismatch(format!(
                "factor {factor} lists {count} entries but its scope has {expected} joint states"
            )));
        }
        let mut values = Vec::with_capacity(count);
        for entry in 0..count {
            let psi = t.next_f64("table entry")?;
            if psi <= 0.0 {
                return Err(Error::NonPositiveFactorValue {
                    factor,
                    entry,
                    value: psi,
                });
            }
            values.push(-psi.ln());
        }
        cliques.push(Clique::new(scope, PotentialTensor::new(dims, values)?));
    }
    if !t.is_empty() {
        return Err(t.error("unexpected data after the function tables (evidence sections are not supported)"));
    }
    MrfModel::new(label_counts, cliques)
}
