use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DesignError;

/// Single-qubit Pauli observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn symbol(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'X' | 'x' => Some(PauliAxis::X),
            'Y' | 'y' => Some(PauliAxis::Y),
            'Z' | 'z' => Some(PauliAxis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// An n-qubit Pauli setting. Position `i` is the axis measured on qubit `i`.
///
/// Ordering is lexicographic with `X < Y < Z`, which is the tie-breaking
/// order used throughout the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(Vec<PauliAxis>);

impl PauliString {
    pub fn new(axes: Vec<PauliAxis>) -> Self {
        PauliString(axes)
    }

    pub fn constant(n: usize, axis: PauliAxis) -> Self {
        PauliString(vec![axis; n])
    }

    /// Decodes a base-3 index where qubit 0 is the most significant digit,
    /// so index order coincides with lexicographic order.
    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut axes = vec![PauliAxis::X; n];
        for q in (0..n).rev() {
            axes[q] = PauliAxis::from_index(index % 3);
            index /= 3;
        }
        PauliString(axes)
    }

    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, a| acc * 3 + a.index())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn axes(&self) -> &[PauliAxis] {
        &self.0
    }

    pub fn get(&self, qubit: usize) -> PauliAxis {
        self.0[qubit]
    }

    /// Restriction of the string to the given qubits, in the given order.
    pub fn restrict(&self, qubits: &[usize]) -> Vec<PauliAxis> {
        qubits.iter().map(|&q| self.0[q]).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .chars()
            .map(|c| PauliAxis::from_char(c).ok_or_else(|| DesignError::Parse(format!("invalid Pauli symbol {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>, _>>()
            .map(PauliString)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered, duplicate-free list of n-qubit Pauli settings.
///
/// JSON form: `{"n": 4, "settings": ["XXXX", "ZYYX", ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPauliSet", into = "RawPauliSet")]
pub struct PauliSet {
    n: usize,
    settings: Vec<PauliString>,
}

#[derive(Serialize, Deserialize)]
struct RawPauliSet {
    n: usize,
    settings: Vec<PauliString>,
}

impl TryFrom<RawPauliSet> for PauliSet {
    type Error = DesignError;

    fn try_from(raw: RawPauliSet) -> Result<Self, Self::Error> {
        PauliSet::new(raw.n, raw.settings)
    }
}

impl From<PauliSet> for RawPauliSet {
    fn from(set: PauliSet) -> Self {
        RawPauliSet { n: set.n, settings: set.settings }
    }
}

impl PauliSet {
    pub fn new(n: usize, settings: Vec<PauliString>) -> Result<Self, DesignError> {
        let mut seen = BTreeSet::new();
        for s in &settings {
            if s.len() != n {
                return Err(DesignError::DimensionMismatch { expected: n, found: s.len() });
            }
            if !seen.insert(s.clone()) {
                return Err(DesignError::DuplicateSetting(s.to_string()));
            }
        }
        Ok(PauliSet { n, settings })
    }

    /// Builds a set, silently dropping repeated strings (first occurrence wins).
    pub fn from_strings_dedup(n: usize, settings: impl IntoIterator<Item = PauliString>) -> Result<Self, DesignError> {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for s in settings {
            if s.len() != n {
                return Err(DesignError::DimensionMismatch { expected: n, found: s.len() });
            }
            if seen.insert(s.clone()) {
                kept.push(s);
            }
        }
        Ok(PauliSet { n, settings: kept })
    }

    /// Convenience constructor from string literals such as `["XXXX", "ZYYX"]`.
    pub fn parse_strings(strings: &[&str]) -> Result<Self, DesignError> {
        let settings = strings.iter().map(|s| s.parse()).collect::<Result<Vec<PauliString>, _>>()?;
        let n = settings.first().map_or(0, PauliString::len);
        PauliSet::new(n, settings)
    }

    /// All `3^n` Pauli strings in lexicographic order.
    pub fn all_strings(n: usize) -> Self {
        let total = 3usize.pow(n as u32);
        PauliSet { n, settings: (0..total).map(|i| PauliString::from_index(n, i)).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn settings(&self) -> &[PauliString] {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn contains(&self, s: &PauliString) -> bool {
        self.settings.contains(s)
    }

    pub fn sorted(&self) -> Self {
        let mut settings = self.settings.clone();
        settings.sort();
        PauliSet { n: self.n, settings }
    }

    /// Column `q`: the axes measured on qubit `q` across all settings.
    pub fn column(&self, q: usize) -> Vec<PauliAxis> {
        self.settings.iter().map(|s| s.get(q)).collect()
    }

    /// Applies one permutation of `{X, Y, Z}` per qubit. `perms[q][a]` is the
    /// image of axis index `a` on qubit `q`.
    pub fn relabel(&self, perms: &[[PauliAxis; 3]]) -> Self {
        let settings = self
            .settings
            .iter()
            .map(|s| PauliString::new(s.axes().iter().enumerate().map(|(q, a)| perms[q][a.index()]).collect()))
            .collect();
        PauliSet { n: self.n, settings }
    }

    /// Keeps only the listed columns (in the given order); repeated rows are dropped.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let rows = self.settings.iter().map(|s| PauliString::new(s.restrict(columns)));
        PauliSet::from_strings_dedup(columns.len(), rows).expect("restricted rows have uniform length")
    }

    /// Text format: one string per line, `#` starts a comment line.
    pub fn parse_text(text: &str) -> Result<Self, DesignError> {
        let mut settings = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            settings.push(line.parse::<PauliString>()?);
        }
        let n = settings.first().map_or(0, PauliString::len);
        PauliSet::new(n, settings)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.settings {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}

/// Axis permutation sending `target` to `X` and keeping the other two in order.
pub(crate) fn permutation_to_x(target: PauliAxis) -> [PauliAxis; 3] {
    use PauliAxis::*;
    match target {
        X => [X, Y, Z],
        Y => [Y, X, Z],
        Z => [Z, Y, X],
    }
}
