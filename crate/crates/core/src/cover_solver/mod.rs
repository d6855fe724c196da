//! Minimal Pauli covers: greedy heuristic, exact branch-and-bound and LP export.
//!
//! A cover instance is a universe of [`Requirement`]s plus a candidate pool of
//! Pauli strings. Each candidate covers exactly one assignment per edge, which
//! gives the combinatorial lower bounds used to prune the search.

mod bnb;
mod lp;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marginal_design::{
    colouring_construction, parity_base, presets, recursive_pauli_set, ConnectivityHypergraph, DesignError, PauliAxis,
    PauliSet, PauliString, Requirement,
};

pub use bnb::branch_and_bound;
pub use lp::{ilp_export, ilp_string};

/// Largest qubit count for which the candidate pool is enumerated.
pub const CANDIDATE_CAP: usize = 12;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{n} qubits exceeds the candidate enumeration cap of {cap}")]
    CandidateCap { n: usize, cap: usize },
    #[error("requirement {0} is not covered by any candidate")]
    Uncoverable(String),
    #[error("invalid requirement: {0}")]
    InvalidRequirement(String),
    #[error("invalid incumbent: {0}")]
    InvalidIncumbent(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
enum Candidates {
    /// All `3^n` strings; candidate index is the base-3 string index.
    All,
    /// Sorted, duplicate-free explicit pool with precomputed covering lists.
    Explicit { strings: Vec<PauliString>, covering: Vec<Vec<u32>> },
}

/// A minimal-cover binary program: requirements grouped by qubit subset, plus
/// the candidate settings.
#[derive(Clone, Debug)]
pub struct CoverInstance {
    n: usize,
    edges: Vec<Vec<usize>>,
    /// `req_of[e][assignment index]`, `NONE` when not required.
    req_of: Vec<Vec<u32>>,
    universe: Vec<Requirement>,
    req_edge: Vec<u32>,
    req_assignment: Vec<u32>,
    candidates: Candidates,
    place: Vec<usize>,
}

impl CoverInstance {
    /// Every assignment on every edge of `h`, all `3^n` strings as candidates.
    pub fn from_hypergraph(h: &ConnectivityHypergraph) -> Result<Self, SolverError> {
        let universe = crate::marginal_design::build_universe(h);
        Self::from_requirements(h.n(), universe, None)
    }

    /// Arbitrary requirement list with an optional explicit candidate pool.
    pub fn from_requirements(
        n: usize,
        universe: Vec<Requirement>,
        candidates: Option<Vec<PauliString>>,
    ) -> Result<Self, SolverError> {
        if n > CANDIDATE_CAP {
            return Err(SolverError::CandidateCap { n, cap: CANDIDATE_CAP });
        }
        let mut edges: Vec<Vec<usize>> = Vec::new();
        let mut req_of: Vec<Vec<u32>> = Vec::new();
        let mut reqs = Vec::new();
        let mut req_edge = Vec::new();
        let mut req_assignment = Vec::new();
        for r in universe {
            let r = normalize(n, r)?;
            let e = match edges.iter().position(|e| *e == r.subset) {
                Some(e) => e,
                None => {
                    edges.push(r.subset.clone());
                    req_of.push(vec![NONE; 3usize.pow(r.subset.len() as u32)]);
                    edges.len() - 1
                }
            };
            let a = PauliString::new(r.assignment.clone()).to_index();
            if req_of[e][a] != NONE {
                continue;
            }
            req_of[e][a] = reqs.len() as u32;
            req_edge.push(e as u32);
            req_assignment.push(a as u32);
            reqs.push(r);
        }
        let place = (0..n).map(|q| 3usize.pow((n - 1 - q) as u32)).collect();
        let mut inst = CoverInstance {
            n,
            edges,
            req_of,
            universe: reqs,
            req_edge,
            req_assignment,
            candidates: Candidates::All,
            place,
        };
        if let Some(mut strings) = candidates {
            strings.sort();
            strings.dedup();
            if let Some(s) = strings.iter().find(|s| s.len() != n) {
                return Err(DesignError::DimensionMismatch { expected: n, found: s.len() }.into());
            }
            let mut covering = vec![Vec::new(); inst.universe.len()];
            let mut buf = Vec::new();
            for (c, s) in strings.iter().enumerate() {
                inst.requirements_of_string(s, &mut buf);
                for &r in &buf {
                    covering[r as usize].push(c as u32);
                }
            }
            if let Some(r) = covering.iter().position(Vec::is_empty) {
                return Err(SolverError::Uncoverable(inst.universe[r].to_string()));
            }
            inst.candidates = Candidates::Explicit { strings, covering };
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn universe(&self) -> &[Requirement] {
        &self.universe
    }

    /// Distinct qubit subsets occurring in the universe.
    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn num_candidates(&self) -> usize {
        match &self.candidates {
            Candidates::All => 3usize.pow(self.n as u32),
            Candidates::Explicit { strings, .. } => strings.len(),
        }
    }

    /// Candidates in lexicographic order.
    pub fn candidate(&self, c: usize) -> PauliString {
        match &self.candidates {
            Candidates::All => PauliString::from_index(self.n, c),
            Candidates::Explicit { strings, .. } => strings[c].clone(),
        }
    }

    pub fn candidate_index(&self, s: &PauliString) -> Option<usize> {
        if s.len() != self.n {
            return None;
        }
        match &self.candidates {
            Candidates::All => Some(s.to_index()),
            Candidates::Explicit { strings, .. } => strings.binary_search(s).ok(),
        }
    }

    /// True when the candidates are all strings and every edge requires all of
    /// its assignments, so per-qubit axis relabelling maps covers to covers.
    pub fn is_axis_symmetric(&self) -> bool {
        matches!(self.candidates, Candidates::All) && self.req_of.iter().all(|t| t.iter().all(|&r| r != NONE))
    }

    /// Requirement indices covered by candidate `c`, one per edge at most.
    pub(crate) fn requirements_of(&self, c: usize, digits: &mut Vec<u8>, out: &mut Vec<u32>) {
        digits.clear();
        match &self.candidates {
            Candidates::All => {
                digits.extend(self.place.iter().map(|&p| ((c / p) % 3) as u8));
            }
            Candidates::Explicit { strings, .. } => {
                digits.extend(strings[c].axes().iter().map(|a| a.index() as u8));
            }
        }
        self.requirements_of_digits(digits, out);
    }

    fn requirements_of_string(&self, s: &PauliString, out: &mut Vec<u32>) {
        let digits: Vec<u8> = s.axes().iter().map(|a| a.index() as u8).collect();
        self.requirements_of_digits(&digits, out);
    }

    fn requirements_of_digits(&self, digits: &[u8], out: &mut Vec<u32>) {
        out.clear();
        for (e, edge) in self.edges.iter().enumerate() {
            let idx = edge.iter().fold(0usize, |acc, &q| acc * 3 + digits[q] as usize);
            let r = self.req_of[e][idx];
            if r != NONE {
                out.push(r);
            }
        }
    }

    /// Candidate indices covering requirement `r`, ascending.
    pub(crate) fn covering_candidates(&self, r: usize, out: &mut Vec<u32>) {
        out.clear();
        match &self.candidates {
            Candidates::Explicit { covering, .. } => out.extend_from_slice(&covering[r]),
            Candidates::All => {
                let edge = &self.edges[self.req_edge[r] as usize];
                let assignment = PauliString::from_index(edge.len(), self.req_assignment[r] as usize);
                let base: usize = edge.iter().zip(assignment.axes()).map(|(&q, a)| a.index() * self.place[q]).sum();
                let free: Vec<usize> = (0..self.n).filter(|q| !edge.contains(q)).collect();
                for t in 0..3usize.pow(free.len() as u32) {
                    let mut idx = base;
                    let mut rest = t;
                    for &q in free.iter().rev() {
                        idx += (rest % 3) * self.place[q];
                        rest /= 3;
                    }
                    out.push(idx as u32);
                }
                out.sort_unstable();
            }
        }
    }

    pub(crate) fn edge_of(&self, r: usize) -> usize {
        self.req_edge[r] as usize
    }

    pub(crate) fn assignment_of(&self, r: usize) -> usize {
        self.req_assignment[r] as usize
    }

    /// Checks that `set` covers the universe; returns the uncovered requirements.
    pub fn uncovered_by(&self, set: &PauliSet) -> Result<Vec<Requirement>, SolverError> {
        if set.n() != self.n {
            return Err(DesignError::DimensionMismatch { expected: self.n, found: set.n() }.into());
        }
        let mut covered = vec![false; self.universe.len()];
        let mut buf = Vec::new();
        for s in set.settings() {
            self.requirements_of_string(s, &mut buf);
            for &r in &buf {
                covered[r as usize] = true;
            }
        }
        Ok(self.universe.iter().zip(&covered).filter(|(_, &c)| !c).map(|(r, _)| r.clone()).collect())
    }
}

fn normalize(n: usize, r: Requirement) -> Result<Requirement, SolverError> {
    if r.subset.len() != r.assignment.len() || r.subset.is_empty() {
        return Err(SolverError::InvalidRequirement(format!("{r}")));
    }
    let mut pairs: Vec<(usize, PauliAxis)> = r.subset.iter().copied().zip(r.assignment.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) || pairs.last().is_some_and(|p| p.0 >= n) {
        return Err(SolverError::InvalidRequirement(format!("{r}")));
    }
    Ok(Requirement { subset: pairs.iter().map(|p| p.0).collect(), assignment: pairs.iter().map(|p| p.1).collect() })
}

/// Limits for [`branch_and_bound`]; `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveBudget {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl SolveBudget {
    pub fn unlimited() -> Self {
        SolveBudget::default()
    }

    pub fn seconds(s: f64) -> Self {
        SolveBudget { max_nodes: None, max_time: Some(Duration::from_secs_f64(s)) }
    }

    pub fn nodes(n: u64) -> Self {
        SolveBudget { max_nodes: Some(n), max_time: None }
    }
}

/// Outcome of an exact solve. `wall_time` serializes as seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: PauliSet,
    pub size: usize,
    pub lower_bound: usize,
    pub optimal: bool,
    pub nodes_explored: u64,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
    pub budget_hit: bool,
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Repeatedly takes the candidate covering the most uncovered requirements,
/// lowest index (lexicographically first string) on ties.
pub fn greedy_cover(inst: &CoverInstance) -> PauliSet {
    let total = inst.num_candidates();
    let mut covered = vec![false; inst.universe.len()];
    let mut remaining = inst.universe.len();
    let mut chosen = Vec::new();
    let (mut digits, mut buf) = (Vec::new(), Vec::new());
    while remaining > 0 {
        let mut best = (0usize, 0usize);
        for c in 0..total {
            inst.requirements_of(c, &mut digits, &mut buf);
            let score = buf.iter().filter(|&&r| !covered[r as usize]).count();
            if score > best.0 {
                best = (score, c);
            }
        }
        // every requirement has a covering candidate, so progress is guaranteed
        debug_assert!(best.0 > 0);
        inst.requirements_of(best.1, &mut digits, &mut buf);
        for &r in &buf {
            if !covered[r as usize] {
                covered[r as usize] = true;
                remaining -= 1;
            }
        }
        chosen.push(inst.candidate(best.1));
    }
    PauliSet::new(inst.n, chosen).expect("greedy never repeats a candidate")
}

/// `max_e` of the number of uncovered requirements on edge `e`. `covered` is
/// indexed like [`CoverInstance::universe`]; a shorter slice counts the tail as uncovered.
pub fn lower_bound(inst: &CoverInstance, covered: &[bool]) -> usize {
    let mut per_edge = vec![0usize; inst.edges.len()];
    for r in 0..inst.universe.len() {
        if !covered.get(r).copied().unwrap_or(false) {
            per_edge[inst.edge_of(r)] += 1;
        }
    }
    per_edge.into_iter().max().unwrap_or(0)
}

/// Smallest cover obtainable from the built-in constructions for `h`: the
/// colouring construction over preset, parity and recursive bases.
pub fn construction_incumbent(h: &ConnectivityHypergraph) -> Option<PauliSet> {
    let k = h.max_edge_size();
    if k == 0 {
        return None;
    }
    let chi = h.strong_chromatic_number().colours;
    let mut bases: Vec<PauliSet> = Vec::new();
    if k == 1 {
        bases.push(PauliSet::all_strings(1));
    }
    if k == 2 {
        bases.extend([presets::pauli9_2q(), presets::pauli9_4q(), presets::pauli11_5q(), presets::pauli12_6q()]);
        if chi > 6 {
            for base in [presets::pauli9_4q(), presets::pauli11_5q(), presets::pauli12_6q()] {
                bases.extend(recursive_pauli_set(chi, &base).ok());
            }
        }
    }
    if k >= 2 {
        bases.push(parity_base(k));
    }
    bases
        .iter()
        .filter(|b| b.n() >= chi)
        .filter_map(|b| colouring_construction(h, b).ok())
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.sorted().settings().cmp(b.sorted().settings())))
}
