//! Connectivity hypergraphs, requirement universes and Pauli set constructions.

mod bounds;
mod constructions;
mod hypergraph;
mod pauli;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bounds::{phi_bounds, PhiBounds};
pub use constructions::{colouring_construction, parity_base, presets, recursive_construction, recursive_pauli_set, RowMerge};
pub use hypergraph::{ConnectivityHypergraph, StrongColouring};
pub use pauli::{PauliAxis, PauliSet, PauliString};

pub use hypergraph::k_subsets;
pub(crate) use pauli::permutation_to_x;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate setting {0}")]
    DuplicateSetting(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("instance with {n} vertices exceeds the exact-search limit of {limit}")]
    SizeLimit { n: usize, limit: usize },
    #[error("operation requires a uniform edge size")]
    NonUniform,
    #[error("base set has {available} qubits but the colouring needs {needed}")]
    BaseTooSmall { needed: usize, available: usize },
    #[error("input set is not a complete {k}-body cover on {n} qubits")]
    IncompleteBase { n: usize, k: usize },
}

/// One required Pauli correlator: `assignment[i]` measured on `subset[i]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Requirement {
    pub subset: Vec<usize>,
    pub assignment: Vec<PauliAxis>,
}

impl std::fmt::Display for Requirement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, q) in self.subset.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, "):")?;
        for a in &self.assignment {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Every axis assignment on every edge, edges in stored order and assignments
/// lexicographic. The result has `sum_e 3^|e|` entries.
pub fn build_universe(h: &ConnectivityHypergraph) -> Vec<Requirement> {
    let mut out = Vec::new();
    for e in h.edges() {
        let count = 3usize.pow(e.len() as u32);
        for idx in 0..count {
            out.push(Requirement { subset: e.clone(), assignment: PauliString::from_index(e.len(), idx).axes().to_vec() });
        }
    }
    out
}

/// True iff `s` restricted to the requirement's subset equals its assignment.
pub fn covers(s: &PauliString, r: &Requirement) -> bool {
    r.subset.iter().zip(&r.assignment).all(|(&q, &a)| s.get(q) == a)
}

/// Outcome of [`verify_cover`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    pub complete: bool,
    pub missing: Vec<Requirement>,
    pub min_multiplicity: usize,
    pub max_multiplicity: usize,
}

/// Checks that every requirement of `h` is covered by some setting and reports
/// how often each requirement is hit.
pub fn verify_cover(set: &PauliSet, h: &ConnectivityHypergraph) -> Result<CoverReport, DesignError> {
    if set.n() != h.n() {
        return Err(DesignError::DimensionMismatch { expected: h.n(), found: set.n() });
    }
    let mut counts: Vec<usize> = Vec::new();
    let mut missing = Vec::new();
    for e in h.edges() {
        let mut tally = vec![0usize; 3usize.pow(e.len() as u32)];
        for s in set.settings() {
            let idx = e.iter().fold(0, |acc, &q| acc * 3 + s.get(q).index());
            tally[idx] += 1;
        }
        for (idx, &c) in tally.iter().enumerate() {
            if c == 0 {
                missing.push(Requirement { subset: e.clone(), assignment: PauliString::from_index(e.len(), idx).axes().to_vec() });
            }
        }
        counts.extend(tally);
    }
    Ok(CoverReport {
        complete: missing.is_empty(),
        missing,
        min_multiplicity: counts.iter().copied().min().unwrap_or(0),
        max_multiplicity: counts.iter().copied().max().unwrap_or(0),
    })
}

/// Shorthand for `verify_cover(..).complete` on the complete k-uniform instance.
pub fn is_complete_cover(set: &PauliSet, k: usize) -> bool {
    if set.n() < k {
        return false;
    }
    ConnectivityHypergraph::complete(set.n(), k)
        .ok()
        .and_then(|h| verify_cover(set, &h).ok())
        .is_some_and(|r| r.complete)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(subset: &[usize], axes: &str) -> Requirement {
        Requirement { subset: subset.to_vec(), assignment: axes.parse::<PauliString>().unwrap().axes().to_vec() }
    }

    #[test]
    fn universe_sizes() {
        assert_eq!(build_universe(&ConnectivityHypergraph::line(3, 2).unwrap()).len(), 18);
        assert_eq!(build_universe(&ConnectivityHypergraph::complete(2, 2).unwrap()).len(), 9);
        assert_eq!(build_universe(&ConnectivityHypergraph::ring(7, 3).unwrap()).len(), 189);
        let mixed = ConnectivityHypergraph::new(5, vec![vec![0, 1, 2], vec![3, 4], vec![4]]).unwrap();
        assert_eq!(build_universe(&mixed).len(), 27 + 9);
    }

    #[test]
    fn universe_has_each_assignment_once() {
        let u = build_universe(&ConnectivityHypergraph::complete(4, 2).unwrap());
        let mut sorted = u.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), u.len());
    }

    #[test]
    fn covers_examples() {
        let s: PauliString = "XYZZ".parse().unwrap();
        assert!(covers(&s, &req(&[0, 1], "XY")));
        assert!(!covers(&s, &req(&[0, 1], "XZ")));
        assert!(covers(&"ZYYX".parse().unwrap(), &req(&[2, 3], "YX")));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let set = PauliSet::parse_strings(&["XYZ"]).unwrap();
        let h = ConnectivityHypergraph::complete(4, 2).unwrap();
        assert!(matches!(verify_cover(&set, &h), Err(DesignError::DimensionMismatch { .. })));
    }

    #[test]
    fn all_strings_have_uniform_multiplicity() {
        for (n, k) in [(3, 2), (4, 2), (4, 3)] {
            let h = ConnectivityHypergraph::complete(n, k).unwrap();
            let r = verify_cover(&PauliSet::all_strings(n), &h).unwrap();
            let expect = 3usize.pow((n - k) as u32);
            assert!(r.complete);
            assert_eq!((r.min_multiplicity, r.max_multiplicity), (expect, expect));
        }
    }
}
