//! General projective measurement design on Bloch directions.
//!
//! A [`DirectionSet`] assigns one Bloch direction per qubit and setting. For a
//! qubit subset it induces a [`MeasurementMap`] from the subset's density
//! operator (in the orthonormal Pauli basis) to outcome probabilities; `sigma`,
//! the largest column norm of its pseudoinverse, scales the confidence radius.

mod confidence;
mod optimize;
mod table_a1;

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{pseudoinverse, C64, CMatrix};
use crate::marginal_design::{k_subsets, PauliAxis, PauliSet};

pub use confidence::{
    confidence_epsilon, confidence_radius, continuous_samples_for_radius, sample_ratio, samples_for_radius,
    ConfidenceParams,
};
pub use optimize::{det_sum_gradient, optimize_directions, portfolio_objective, Constraint, OptimizeResult, OptimizerConfig};
pub use table_a1::{paper_table_a1, table_a1_partitions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectionError {
    #[error("expected {expected} settings, found {found}")]
    SettingsMismatch { expected: usize, found: usize },
    #[error("direction set is not rectangular")]
    Ragged,
    #[error("invalid qubit subset {0:?}")]
    InvalidSubset(Vec<usize>),
    #[error("settings are tomographically incomplete on {subset:?}: rank {rank} < {needed}")]
    Incomplete { subset: Vec<usize>, rank: usize, needed: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A unit vector `(sin t cos p, sin t sin p, cos t)` given by its polar angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochDirection {
    pub theta: f64,
    pub phi: f64,
}

impl BlochDirection {
    pub fn new(theta: f64, phi: f64) -> Self {
        BlochDirection { theta, phi }
    }

    /// Angles of a non-zero vector (normalized internally).
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = if v[0] == 0.0 && v[1] == 0.0 { 0.0 } else { v[1].atan2(v[0]) };
        BlochDirection { theta, phi }
    }

    pub fn vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Derivatives of [`vector`](Self::vector) with respect to theta and phi.
    pub fn partials(&self) -> ([f64; 3], [f64; 3]) {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        ([ct * cp, ct * sp, -st], [-st * sp, st * cp, 0.0])
    }
}

/// Directions for `n` qubits and `m` settings; `directions[q][a]` is the
/// direction measured on qubit `q` in setting `a`.
///
/// JSON form: `{"n": 6, "m": 9, "angles": [[[theta, phi], ...m], ...n]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDirectionSet", into = "RawDirectionSet")]
pub struct DirectionSet {
    n: usize,
    m: usize,
    directions: Vec<Vec<BlochDirection>>,
}

#[derive(Serialize, Deserialize)]
struct RawDirectionSet {
    n: usize,
    m: usize,
    angles: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<RawDirectionSet> for DirectionSet {
    type Error = DirectionError;

    fn try_from(raw: RawDirectionSet) -> Result<Self, Self::Error> {
        let set = DirectionSet::new(
            raw.angles.iter().map(|q| q.iter().map(|a| BlochDirection::new(a[0], a[1])).collect()).collect(),
        )?;
        if set.n != raw.n || set.m != raw.m {
            return Err(DirectionError::Ragged);
        }
        Ok(set)
    }
}

impl From<DirectionSet> for RawDirectionSet {
    fn from(set: DirectionSet) -> Self {
        RawDirectionSet {
            n: set.n,
            m: set.m,
            angles: set.directions.iter().map(|q| q.iter().map(|d| [d.theta, d.phi]).collect()).collect(),
        }
    }
}

impl DirectionSet {
    pub fn new(directions: Vec<Vec<BlochDirection>>) -> Result<Self, DirectionError> {
        let n = directions.len();
        let m = directions.first().map_or(0, Vec::len);
        if n == 0 || m == 0 || directions.iter().any(|q| q.len() != m) {
            return Err(DirectionError::Ragged);
        }
        Ok(DirectionSet { n, m, directions })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn direction(&self, qubit: usize, setting: usize) -> BlochDirection {
        self.directions[qubit][setting]
    }

    pub fn vector(&self, qubit: usize, setting: usize) -> [f64; 3] {
        self.directions[qubit][setting].vector()
    }

    /// Directions of one setting across all qubits.
    pub fn setting(&self, setting: usize) -> Vec<BlochDirection> {
        self.directions.iter().map(|q| q[setting]).collect()
    }

    pub fn qubit(&self, qubit: usize) -> &[BlochDirection] {
        &self.directions[qubit]
    }

    pub(crate) fn set_direction(&mut self, qubit: usize, setting: usize, d: BlochDirection) {
        self.directions[qubit][setting] = d;
    }
}

impl From<&PauliSet> for DirectionSet {
    fn from(ps: &PauliSet) -> Self {
        pauli_to_directions(ps)
    }
}

/// X, Y, Z as the directions `(pi/2, 0)`, `(pi/2, pi/2)`, `(0, 0)`.
pub fn pauli_to_directions(ps: &PauliSet) -> DirectionSet {
    let dir = |a: PauliAxis| match a {
        PauliAxis::X => BlochDirection::new(FRAC_PI_2, 0.0),
        PauliAxis::Y => BlochDirection::new(FRAC_PI_2, FRAC_PI_2),
        PauliAxis::Z => BlochDirection::new(0.0, 0.0),
    };
    let directions = (0..ps.n()).map(|q| ps.settings().iter().map(|s| dir(s.get(q))).collect()).collect();
    DirectionSet { n: ps.n(), m: ps.len(), directions }
}

/// `m` directions per qubit drawn uniformly on the sphere (normalized
/// standard normal triples), reproducible per seed.
pub fn sample_uniform_directions(n: usize, m: usize, seed: u64) -> DirectionSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let directions = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    loop {
                        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                        if v.iter().map(|x| x * x).sum::<f64>() > 1e-24 {
                            break BlochDirection::from_vector(v);
                        }
                    }
                })
                .collect()
        })
        .collect();
    DirectionSet { n: n.max(1), m: m.max(1), directions }
}

fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn check_subset(ds: &DirectionSet, subset: &[usize]) -> Result<(), DirectionError> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if subset.is_empty() || sorted.len() != subset.len() || sorted.last().is_some_and(|&q| q >= ds.n) {
        return Err(DirectionError::InvalidSubset(subset.to_vec()));
    }
    Ok(())
}

/// `3^k x 3^k` matrix whose column `a` is the Kronecker product of the
/// setting-`a` Bloch vectors on `subset`, in subset order.
pub fn z_matrix(ds: &DirectionSet, subset: &[usize], k: usize) -> Result<DMatrix<f64>, DirectionError> {
    check_subset(ds, subset)?;
    if subset.len() != k {
        return Err(DirectionError::InvalidSubset(subset.to_vec()));
    }
    let dim = 3usize.pow(k as u32);
    if ds.m != dim {
        return Err(DirectionError::SettingsMismatch { expected: dim, found: ds.m });
    }
    let mut z = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        let col = subset.iter().fold(vec![1.0], |acc, &q| kron_vec(&acc, &ds.vector(q, a)));
        z.set_column(a, &DVector::from_vec(col));
    }
    Ok(z)
}

/// Outcome of [`completeness_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub complete: bool,
    pub worst_subset: Vec<usize>,
    pub worst_det: f64,
}

/// `|det Z_S|` for every k-subset; complete when all exceed `tol`.
pub fn completeness_check(ds: &DirectionSet, k: usize, tol: f64) -> Result<CompletenessReport, DirectionError> {
    if k == 0 || k > ds.n {
        return Err(DirectionError::InvalidParameter(format!("k = {k} for {} qubits", ds.n)));
    }
    let mut worst = (Vec::new(), f64::INFINITY);
    for s in k_subsets(ds.n, k) {
        let det = z_matrix(ds, &s, k)?.determinant().abs();
        if det < worst.1 {
            worst = (s, det);
        }
    }
    Ok(CompletenessReport { complete: worst.1 > tol, worst_subset: worst.0, worst_det: worst.1 })
}

/// `|det Z_S|` of one k-subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetDeterminant {
    pub subset: Vec<usize>,
    pub det: f64,
}

/// `|det Z_S|` for every k-subset in lexicographic order.
pub fn subset_determinants(ds: &DirectionSet, k: usize) -> Result<Vec<SubsetDeterminant>, DirectionError> {
    if k == 0 || k > ds.n {
        return Err(DirectionError::InvalidParameter(format!("k = {k} for {} qubits", ds.n)));
    }
    k_subsets(ds.n, k)
        .into_iter()
        .map(|s| {
            let det = z_matrix(ds, &s, k)?.determinant().abs();
            Ok(SubsetDeterminant { subset: s, det })
        })
        .collect()
}

/// Linear map from a subset operator, in coordinates over the orthonormal
/// Pauli basis `P / 2^(|S|/2)`, to the joint outcome distribution with equal
/// setting weights `1/m`.
///
/// Rows are ordered by setting, then outcome string (`+` before `-`, first
/// subset qubit most significant). Columns are Pauli labels with the first
/// subset qubit varying fastest (`II, XI, YI, ZI, IX, ...`).
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementMap {
    pub subset: Vec<usize>,
    pub settings: usize,
    pub matrix: DMatrix<f64>,
    pub pseudoinverse: DMatrix<f64>,
    pub sigma: f64,
    pub rank: usize,
}

impl MeasurementMap {
    pub fn outcomes_per_setting(&self) -> usize {
        1 << self.subset.len()
    }
}

/// Builds the measurement map of `ds` on `subset`.
pub fn build_measurement_map(ds: &DirectionSet, subset: &[usize]) -> Result<MeasurementMap, DirectionError> {
    check_subset(ds, subset)?;
    let j = subset.len();
    let outcomes = 1usize << j;
    let dim = 4usize.pow(j as u32);
    let norm = 2f64.powi(j as i32).sqrt();
    let m = ds.m;
    let mut matrix = DMatrix::zeros(m * outcomes, dim);
    for a in 0..m {
        let vecs: Vec<[f64; 3]> = subset.iter().map(|&q| ds.vector(q, a)).collect();
        for o in 0..outcomes {
            let signs: Vec<f64> = (0..j).map(|i| if (o >> (j - 1 - i)) & 1 == 0 { 1.0 } else { -1.0 }).collect();
            for mu in 0..dim {
                let mut val = 1.0;
                let mut rest = mu;
                for i in 0..j {
                    let label = rest % 4;
                    rest /= 4;
                    if label > 0 {
                        val *= signs[i] * vecs[i][label - 1];
                    }
                }
                matrix[(a * outcomes + o, mu)] = val / (m as f64 * norm);
            }
        }
    }
    let (pinv, rank) = pseudoinverse(&matrix);
    if rank < dim {
        return Err(DirectionError::Incomplete { subset: subset.to_vec(), rank, needed: dim });
    }
    let sigma = pinv.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(MeasurementMap { subset: subset.to_vec(), settings: m, matrix, pseudoinverse: pinv, sigma, rank })
}

/// Coordinates of a `2^j x 2^j` operator in the orthonormal Pauli basis used
/// by [`MeasurementMap`]. Only the Hermitian part is represented.
pub fn pauli_coordinates(op: &CMatrix) -> DVector<f64> {
    let j = op.nrows().trailing_zeros() as usize;
    let dim = 4usize.pow(j as u32);
    DVector::from_iterator(dim, (0..dim).map(|mu| (op * pauli_basis_element(j, mu)).trace().re))
}

/// Inverse of [`pauli_coordinates`].
pub fn from_pauli_coordinates(j: usize, coords: &DVector<f64>) -> CMatrix {
    let d = 1usize << j;
    let mut out = CMatrix::zeros(d, d);
    for (mu, &c) in coords.iter().enumerate() {
        out += pauli_basis_element(j, mu) * C64::new(c, 0.0);
    }
    out
}

/// `P_mu / 2^(j/2)` with the first qubit's label in the lowest base-4 digit.
pub fn pauli_basis_element(j: usize, mu: usize) -> CMatrix {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let sigma = [
        CMatrix::from_row_slice(2, 2, &[one, zero, zero, one]),
        CMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
        CMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]),
        CMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]),
    ];
    let mut rest = mu;
    let mut out = CMatrix::identity(1, 1);
    for _ in 0..j {
        out = out.kronecker(&sigma[rest % 4]);
        rest /= 4;
    }
    out / C64::new(2f64.powi(j as i32).sqrt(), 0.0)
}

/// Result of [`sigma_max`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub sigma_max: f64,
    pub per_subset: Vec<SubsetSigma>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetSigma {
    pub subset: Vec<usize>,
    pub sigma: f64,
}

/// Largest `sigma` over all k-subsets of qubits.
pub fn sigma_max(ds: &DirectionSet, k: usize) -> Result<SigmaReport, DirectionError> {
    if k == 0 || k > ds.n {
        return Err(DirectionError::InvalidParameter(format!("k = {k} for {} qubits", ds.n)));
    }
    let per_subset = k_subsets(ds.n, k)
        .into_iter()
        .map(|s| build_measurement_map(ds, &s).map(|map| SubsetSigma { subset: s, sigma: map.sigma }))
        .collect::<Result<Vec<_>, _>>()?;
    let sigma_max = per_subset.iter().map(|s| s.sigma).fold(0.0, f64::max);
    Ok(SigmaReport { sigma_max, per_subset })
}
