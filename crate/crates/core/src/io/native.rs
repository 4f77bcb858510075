//! The `MRF-E v1` text format, which stores energies directly.
//!
//! ```text
//! MRF-E v1
//! 2            # nodes
//! 2 3          # label counts
//! 1            # cliques
//! 2 0 1        # arity, then node indices
//! 0 1 2 3 4 5  # energies, row-major (last node fastest)
//! ```

use std::fmt::Write;

use super::Tokens;
use crate::error::{Error, Result};
use crate::model::{Clique, MrfModel, PotentialTensor};

pub const NATIVE_HEADER: &str = "MRF-E v1";

pub fn parse_native(text: &str) -> Result<MrfModel> {
    let mut t = Tokens::new(text, Some("#"));
    let (magic, version) = (t.next("header")?, t.next("format version")?);
    if magic != "MRF-E" || version != "v1" {
        return Err(Error::BadPreamble(format!(
            "expected `{NATIVE_HEADER}`, found `{magic} {version}`"
        )));
    }
    let n = t.next_usize("node count")?;
    let label_counts = (0..n)
        .map(|_| t.next_usize("label count"))
        .collect::<Result<Vec<_>>>()?;
    let m = t.next_usize("clique count")?;
    let mut cliques = Vec::with_capacity(m);
    for _ in 0..m {
        let arity = t.next_usize("clique arity")?;
        let mut nodes = Vec::with_capacity(arity);
        let mut dims = Vec::with_capacity(arity);
        for _ in 0..arity {
            let line = t.line();
            let i = t.next_usize("node index")?;
            let k = *label_counts.get(i).ok_or_else(|| Error::Parse {
                line,
                msg: format!("node index {i} out of range for {n} nodes"),
            })?;
            nodes.push(i);
            dims.push(k);
        }
        let len: usize = dims.iter().product();
        let values = (0..len)
            .map(|_| t.next_f64("energy value"))
            .collect::<Result<Vec<_>>>()?;
        cliques.push(Clique::new(nodes, PotentialTensor::new(dims, values)?));
    }
    if !t.is_empty() {
        return Err(t.error("trailing data after the last clique"));
    }
    MrfModel::new(label_counts, cliques)
}

/// Writes every value with 17 significant digits, so parsing the output
/// restores the model exactly.
pub fn serialize_native(model: &MrfModel) -> String {
    let join = |items: &mut dyn Iterator<Item = String>| items.collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "{NATIVE_HEADER}");
    let _ = writeln!(out, "{}", model.num_nodes());
    let _ = writeln!(out, "{}", join(&mut model.label_counts().iter().map(|k| k.to_string())));
    let _ = writeln!(out, "{}", model.cliques().len());
    for clique in model.cliques() {
        let _ = writeln!(
            out,
            "{} {}",
            clique.arity(),
            join(&mut clique.nodes.iter().map(|i| i.to_string()))
        );
        let _ = writeln!(
            out,
            "{}",
            join(&mut clique.potential.values().iter().map(|v| format!("{v:.16e}")))
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let m = parse_native("MRF-E v1\n1\n1\n1\n1 0\n0\n").unwrap();
        assert_eq!(m.num_nodes(), 1);
        assert_eq!(m.label_counts(), &[1]);
    }

    #[test]
    fn comments_and_free_layout() {
        let text = "# two nodes\nMRF-E v1\n2 # n\n2 3\n1\n2 0 1\n0 1 2\n3 4 5 # values may wrap\n";
        let m = parse_native(text).unwrap();
        assert_eq!(m.cliques()[0].potential.get(&[1, 2]), 5.0);
    }

    #[test]
    fn round_trip_is_exact() {
        let m = parse_native("MRF-E v1\n2\n2 2\n2\n1 1\n0.1 -0.7\n2 1 0\n0.3333333333333333 1e-300 -2.5 7\n").unwrap();
        let again = parse_native(&serialize_native(&m)).unwrap();
        assert_eq!(again.cliques(), m.cliques());
        assert_eq!(serialize_native(&again), serialize_native(&m));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_native("MRF-E v1\n1\n2\n1\n1 0\n0.5 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        match parse_native("MRF-E v1\n1\n2\n1\n1 0\n0.5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_native("MRF-E v2\n"), Err(Error::BadPreamble(_))));
        assert!(matches!(
            parse_native("MRF-E v1\n1\n2\n1\n1 3\n"),
            Err(Error::Parse { line: 5, .. })
        ));
    }
}
