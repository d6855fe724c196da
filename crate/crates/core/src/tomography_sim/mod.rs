//! Simulated experiments: states, Born probabilities of product projective
//! settings, sampled counts, and marginal reconstruction.
//!
//! Basis index bit order puts qubit 0 first (most significant); `|0>` is the
//! `+1` eigenvector of Z. Outcome strings use `+`/`-` with character `i` for
//! qubit `i`.

mod counts;
mod reconstruct;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direction_design::{BlochDirection, DirectionError};
use crate::linalg::{hermitian_eigen, hermiticity_deviation, trace, C64, CMatrix};

pub use counts::{
    expected_counts, marginalize_counts, outcome_string, settings_id, simulate_counts, CountsRecord, MarginalCounts,
    SamplingModel, SettingCounts,
};
pub use reconstruct::{
    fidelity, linear_inversion, linear_reconstruct, mle_reconstruct, mle_reconstruct_with, monte_carlo_errors,
    reconstruct_subsets, LinearEstimate, McSummary, Method, MleOptions, MleProblem, ReconstructionResult,
    PROBABILITY_FLOOR,
};

/// Largest qubit count for dense density matrices.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("setting {0} has no counts")]
    EmptySetting(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Direction(#[from] DirectionError),
}

/// Hermitian, unit-trace, positive semidefinite matrix on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: CMatrix,
}

const STATE_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-9;

impl DensityMatrix {
    /// Validates Hermiticity and trace within 1e-10 and eigenvalues >= -1e-9.
    pub fn new(data: CMatrix) -> Result<Self, TomographyError> {
        let d = data.nrows();
        if d == 0 || data.ncols() != d || !d.is_power_of_two() || d > 1 << MAX_QUBITS {
            return Err(TomographyError::Dimension(format!("{}x{} is not a qubit operator", d, data.ncols())));
        }
        let dev = hermiticity_deviation(&data);
        if dev > STATE_TOL {
            return Err(TomographyError::InvalidState(format!("hermiticity deviation {dev:e}")));
        }
        let tr = trace(&data);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(TomographyError::InvalidState(format!("trace {tr}")));
        }
        let min = hermitian_eigen(&data).0.min();
        if min < -EIGEN_TOL {
            return Err(TomographyError::InvalidState(format!("eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { n: d.trailing_zeros() as usize, data })
    }

    /// `|psi><psi|` for a normalized `psi`.
    pub fn from_pure(psi: &DVector<C64>) -> Result<Self, TomographyError> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(TomographyError::InvalidState(format!("state norm {norm}")));
        }
        DensityMatrix::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        DensityMatrix { n, data: CMatrix::identity(d, d) / C64::new(d as f64, 0.0) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }
}

/// Serialized as `{"n": j, "matrix": [[[re, im], ...], ...]}`.
impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw {
            n: usize,
            matrix: Vec<Vec<[f64; 2]>>,
        }
        Raw { n: self.n, matrix: matrix_to_rows(&self.data) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            matrix: Vec<Vec<[f64; 2]>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let m = rows_to_matrix(&raw.matrix).map_err(serde::de::Error::custom)?;
        let rho = DensityMatrix::new(m).map_err(serde::de::Error::custom)?;
        if rho.n != raw.n {
            return Err(serde::de::Error::custom("qubit count does not match the matrix"));
        }
        Ok(rho)
    }
}

/// Dense complex matrix as rows of `[re, im]` pairs.
pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, TomographyError> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(TomographyError::Dimension("matrix is not square".into()));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Equal superposition of the weight-`m` computational basis states.
pub fn dicke_vector(n: usize, m: usize) -> Result<DVector<C64>, TomographyError> {
    if m > n || n == 0 || n > MAX_QUBITS {
        return Err(TomographyError::InvalidParameter(format!("dicke({n}, {m})")));
    }
    let amp = C64::new(1.0 / binomial(n, m).sqrt(), 0.0);
    Ok(DVector::from_fn(1 << n, |i, _| if (i as u32).count_ones() as usize == m { amp } else { C64::new(0.0, 0.0) }))
}

/// `|D(n, m)><D(n, m)|`.
pub fn dicke_state(n: usize, m: usize) -> Result<DensityMatrix, TomographyError> {
    let psi = dicke_vector(n, m)?;
    Ok(DensityMatrix { n, data: &psi * psi.adjoint() })
}

/// Six-qubit model `p D(6,3) + (1 - p)/2 [4/7 D(6,3) + 3/14 (D(6,2) + D(6,4))]`,
/// divided by its trace `p + (1 - p)/2`.
pub fn noise_state(p: f64) -> Result<DensityMatrix, TomographyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(TomographyError::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let d3 = dicke_state(6, 3)?.data;
    let noise = &d3 * C64::new(4.0 / 7.0, 0.0) + (dicke_state(6, 2)?.data + dicke_state(6, 4)?.data) * C64::new(3.0 / 14.0, 0.0);
    let mixed = d3 * C64::new(p, 0.0) + noise * C64::new((1.0 - p) / 2.0, 0.0);
    let tr = p + (1.0 - p) / 2.0;
    DensityMatrix::new(mixed / C64::new(tr, 0.0))
}

/// Reduced state on the sorted qubit list `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix, TomographyError> {
    let n = rho.n;
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&q| q >= n) {
        return Err(TomographyError::InvalidParameter(format!("keep {keep:?} for {n} qubits")));
    }
    let bit = |q: usize| 1usize << (n - 1 - q);
    let keep_mask: usize = keep.iter().map(|&q| bit(q)).sum();
    let reduced = |i: usize| keep.iter().fold(0, |acc, &q| (acc << 1) | usize::from(i & bit(q) != 0));
    let dr = 1 << keep.len();
    let mut out = CMatrix::zeros(dr, dr);
    let d = rho.dim();
    for i in 0..d {
        for j in 0..d {
            if (i & !keep_mask) == (j & !keep_mask) {
                out[(reduced(i), reduced(j))] += rho.data[(i, j)];
            }
        }
    }
    Ok(DensityMatrix { n: keep.len(), data: out })
}

/// Rows `<+v|`, `<-v|` of the eigenbasis of `v . sigma`.
pub(crate) fn measurement_basis(d: &BlochDirection) -> CMatrix {
    let (s, c) = (d.theta / 2.0).sin_cos();
    let e = C64::from_polar(1.0, d.phi);
    let plus = [C64::new(c, 0.0), e * s];
    let minus = [C64::new(s, 0.0), -e * c];
    CMatrix::from_row_slice(2, 2, &[plus[0].conj(), plus[1].conj(), minus[0].conj(), minus[1].conj()])
}

/// Projector `(1 + sign v . sigma) / 2`.
pub(crate) fn projector(d: &BlochDirection, plus: bool) -> CMatrix {
    let v = d.vector();
    let s = if plus { 0.5 } else { -0.5 };
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.5 + s * v[2], 0.0), C64::new(s * v[0], -s * v[1]), C64::new(s * v[0], s * v[1]), C64::new(0.5 - s * v[2], 0.0)],
    )
}

/// Outcome distribution of measuring `setting[q]` on every qubit `q`, indexed
/// by outcome bits (qubit 0 most significant, `0` for `+`). Values down to
/// `-1e-12` are clipped to zero.
pub fn born_probabilities(rho: &DensityMatrix, setting: &[BlochDirection]) -> Result<Vec<f64>, TomographyError> {
    if setting.len() != rho.n {
        return Err(TomographyError::Dimension(format!("{} directions for {} qubits", setting.len(), rho.n)));
    }
    let u = setting.iter().fold(CMatrix::identity(1, 1), |acc, d| acc.kronecker(&measurement_basis(d)));
    let rotated = &u * &rho.data * u.adjoint();
    Ok(rotated.diagonal().iter().map(|z| if z.re < 0.0 && z.re >= -1e-12 { 0.0 } else { z.re }).collect())
}

/// Applies `f` to every item on up to `threads` scoped threads; results come
/// back in item order.
pub(crate) fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| scope.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
