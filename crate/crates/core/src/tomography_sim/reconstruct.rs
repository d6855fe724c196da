use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::counts::{marginalize_counts, CountsRecord, MarginalCounts};
use super::{matrix_to_rows, parallel_map, partial_trace, projector, DensityMatrix, TomographyError};
use crate::direction_design::{build_measurement_map, from_pauli_coordinates, DirectionSet, MeasurementMap};
use crate::linalg::{hermitian_eigen, hermiticity_deviation, minimize, project_to_state, trace, C64, CMatrix};

/// Probability floor inside the cost denominator.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Mle,
}

/// Output of [`linear_inversion`].
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEstimate {
    /// Hermitian part of `M^+ f`.
    pub matrix: CMatrix,
    /// Largest entry of `X - X^dagger` before symmetrization.
    pub hermiticity_deviation: f64,
    pub psd: bool,
}

/// `M^+ f` as an operator. `freqs[a]` is the normalized outcome distribution
/// of setting `a`, in the row order of `map`.
pub fn linear_inversion(freqs: &[Vec<f64>], map: &MeasurementMap) -> Result<LinearEstimate, TomographyError> {
    let outcomes = map.outcomes_per_setting();
    if freqs.len() != map.settings || freqs.iter().any(|f| f.len() != outcomes) {
        return Err(TomographyError::Dimension(format!(
            "{} frequency rows for {} settings of {outcomes} outcomes",
            freqs.len(),
            map.settings
        )));
    }
    let m = map.settings as f64;
    let f = DVector::from_iterator(map.matrix.nrows(), freqs.iter().flatten().map(|x| x / m));
    let coords = &map.pseudoinverse * f;
    let raw = from_pauli_coordinates(map.subset.len(), &coords);
    let dev = hermiticity_deviation(&raw);
    let matrix = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
    let psd = hermitian_eigen(&matrix).0.min() >= -1e-9;
    Ok(LinearEstimate { matrix, hermiticity_deviation: dev, psd })
}

/// Gaussian-statistics cost over the Cholesky-form parametrization
/// `rho(t) = T^dagger T / tr(T^dagger T)` with lower-triangular `T`.
///
/// Parameters: the `d` real diagonal entries of `T`, then `Re, Im` of
/// `T[i][j]` for `i > j` in row-major order.
#[derive(Clone, Debug)]
pub struct MleProblem {
    dim: usize,
    projectors: Vec<CMatrix>,
    /// Setting total per projector.
    totals: Vec<f64>,
    freqs: Vec<f64>,
}

impl MleProblem {
    pub fn new(marg: &MarginalCounts, ds: &DirectionSet) -> Result<Self, TomographyError> {
        let j = marg.subset.len();
        if marg.counts.len() != ds.m() {
            return Err(TomographyError::Dimension(format!("{} count rows for {} settings", marg.counts.len(), ds.m())));
        }
        let outcomes = 1usize << j;
        let mut projectors = Vec::with_capacity(ds.m() * outcomes);
        let mut totals = Vec::with_capacity(ds.m() * outcomes);
        let mut freqs = Vec::with_capacity(ds.m() * outcomes);
        for a in 0..ds.m() {
            if marg.totals[a] == 0 {
                return Err(TomographyError::EmptySetting(a));
            }
            for o in 0..outcomes {
                let p = marg.subset.iter().enumerate().fold(CMatrix::identity(1, 1), |acc, (i, &q)| {
                    acc.kronecker(&projector(&ds.direction(q, a), (o >> (j - 1 - i)) & 1 == 0))
                });
                projectors.push(p);
                totals.push(marg.totals[a] as f64);
                freqs.push(marg.frequencies[a][o]);
            }
        }
        Ok(MleProblem { dim: outcomes, projectors, totals, freqs })
    }

    pub fn num_params(&self) -> usize {
        self.dim * self.dim
    }

    fn t_matrix(&self, t: &[f64]) -> CMatrix {
        let d = self.dim;
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = C64::new(t[i], 0.0);
        }
        let mut k = d;
        for i in 1..d {
            for j in 0..i {
                m[(i, j)] = C64::new(t[k], t[k + 1]);
                k += 2;
            }
        }
        m
    }

    /// `T^dagger T / tr(T^dagger T)`.
    pub fn state(&self, t: &[f64]) -> CMatrix {
        let tm = self.t_matrix(t);
        let a = tm.adjoint() * &tm;
        let tr = trace(&a).re;
        a / C64::new(tr, 0.0)
    }

    /// Parameters of a positive definite `rho`: with `J` the exchange matrix and
    /// `J rho J = L L^dagger`, `T = J L^dagger J`.
    pub fn params_from_state(&self, rho: &CMatrix) -> Option<Vec<f64>> {
        let d = self.dim;
        let flip = CMatrix::from_fn(d, d, |i, j| rho[(d - 1 - i, d - 1 - j)]);
        let l = flip.cholesky()?.l();
        let tm = CMatrix::from_fn(d, d, |i, j| l[(d - 1 - j, d - 1 - i)].conj());
        let mut t = Vec::with_capacity(d * d);
        t.extend((0..d).map(|i| tm[(i, i)].re));
        for i in 1..d {
            for j in 0..i {
                t.extend([tm[(i, j)].re, tm[(i, j)].im]);
            }
        }
        Some(t)
    }

    fn model(&self, rho: &CMatrix) -> Vec<f64> {
        self.projectors.iter().map(|p| (rho * p).trace().re.max(PROBABILITY_FLOOR)).collect()
    }

    /// `1/2 sum N_a (p - q)^2 / q` with `q = tr(rho(t) Pi)` floored.
    pub fn cost(&self, t: &[f64]) -> f64 {
        let q = self.model(&self.state(t));
        q.iter().zip(&self.freqs).zip(&self.totals).map(|((q, p), n)| 0.5 * n * (p - q) * (p - q) / q).sum()
    }

    /// Analytic gradient of [`MleProblem::cost`].
    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let tm = self.t_matrix(t);
        let a = tm.adjoint() * &tm;
        let tr_a = trace(&a).re;
        let rho = &a / C64::new(tr_a, 0.0);
        let mut g = CMatrix::zeros(d, d);
        for (((p, &q_raw), &f), &n) in self.projectors.iter().zip(&self.raw_model(&rho)).zip(&self.freqs).zip(&self.totals) {
            if q_raw < PROBABILITY_FLOOR {
                continue;
            }
            g += p * C64::new(n * (q_raw * q_raw - f * f) / (2.0 * q_raw * q_raw), 0.0);
        }
        let shift = (&g * &rho).trace().re;
        let gp = (g - CMatrix::identity(d, d) * C64::new(shift, 0.0)) / C64::new(tr_a, 0.0);
        let h = gp * tm.adjoint();
        let mut out = Vec::with_capacity(d * d);
        out.extend((0..d).map(|i| 2.0 * h[(i, i)].re));
        for i in 1..d {
            for j in 0..i {
                out.extend([2.0 * h[(j, i)].re, -2.0 * h[(j, i)].im]);
            }
        }
        out
    }

    fn raw_model(&self, rho: &CMatrix) -> Vec<f64> {
        self.projectors.iter().map(|p| (rho * p).trace().re).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative cost-change tolerance.
    pub tol: f64,
    /// Central-difference step.
    pub step: f64,
    /// Scale of the Gaussian perturbation applied to restarts after the first.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { restarts: 3, max_iters: 5000, tol: 1e-9, step: 1e-6, perturbation: 0.05, seed: 0 }
    }
}

/// One reconstructed marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub subset: Vec<usize>,
    pub method: Method,
    /// Hermitian estimate; PSD with unit trace for [`Method::Mle`].
    pub estimate: CMatrix,
    pub psd: bool,
    pub cost: Option<f64>,
    pub iterations: usize,
}

impl ReconstructionResult {
    /// The estimate as a state, projected onto the state space when needed.
    pub fn physical_state(&self) -> DensityMatrix {
        let m = if self.psd { self.estimate.clone() } else { project_to_state(&self.estimate) };
        DensityMatrix::new(m.clone()).unwrap_or_else(|_| DensityMatrix::new(project_to_state(&m)).expect("projected state"))
    }
}

impl Serialize for ReconstructionResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw<'a> {
            subset: &'a [usize],
            method: Method,
            estimate: Vec<Vec<[f64; 2]>>,
            psd: bool,
            cost: Option<f64>,
            iterations: usize,
        }
        Raw {
            subset: &self.subset,
            method: self.method,
            estimate: matrix_to_rows(&self.estimate),
            psd: self.psd,
            cost: self.cost,
            iterations: self.iterations,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ReconstructionResult {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            subset: Vec<usize>,
            method: Method,
            estimate: Vec<Vec<[f64; 2]>>,
            psd: bool,
            cost: Option<f64>,
            iterations: usize,
        }
        let raw = Raw::deserialize(deserializer)?;
        let estimate = super::rows_to_matrix(&raw.estimate).map_err(serde::de::Error::custom)?;
        Ok(ReconstructionResult {
            subset: raw.subset,
            method: raw.method,
            estimate,
            psd: raw.psd,
            cost: raw.cost,
            iterations: raw.iterations,
        })
    }
}

fn check_sorted(subset: &[usize]) -> Result<(), TomographyError> {
    if subset.is_empty() || subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TomographyError::InvalidParameter(format!("subset {subset:?} must be strictly increasing")));
    }
    Ok(())
}

/// Linear inversion on the marginal of `marg.subset`.
pub fn linear_reconstruct(marg: &MarginalCounts, ds: &DirectionSet) -> Result<ReconstructionResult, TomographyError> {
    check_sorted(&marg.subset)?;
    let map = build_measurement_map(ds, &marg.subset)?;
    let est = linear_inversion(&marg.frequencies, &map)?;
    Ok(ReconstructionResult {
        subset: marg.subset.clone(),
        method: Method::Linear,
        estimate: est.matrix,
        psd: est.psd,
        cost: None,
        iterations: 0,
    })
}

/// [`mle_reconstruct_with`] under default options from the linear estimate.
pub fn mle_reconstruct(marg: &MarginalCounts, ds: &DirectionSet) -> Result<ReconstructionResult, TomographyError> {
    mle_reconstruct_with(marg, ds, None, &MleOptions::default())
}

/// Local descent of [`MleProblem::cost`] from `init` (default: the linear
/// estimate projected to a state and mixed with `1e-6` of the identity),
/// plus `restarts - 1` perturbed copies; restart `r` uses stream `r` of the
/// seeded generator. The lowest cost wins, earlier restarts on ties.
pub fn mle_reconstruct_with(
    marg: &MarginalCounts,
    ds: &DirectionSet,
    init: Option<&CMatrix>,
    opts: &MleOptions,
) -> Result<ReconstructionResult, TomographyError> {
    check_sorted(&marg.subset)?;
    if opts.restarts == 0 || opts.max_iters == 0 || !(opts.step > 0.0) || !(opts.tol > 0.0) {
        return Err(TomographyError::InvalidParameter("restarts, iterations, step and tolerance must be positive".into()));
    }
    let map = build_measurement_map(ds, &marg.subset)?;
    let problem = MleProblem::new(marg, ds)?;
    let d = problem.dim;
    let start = match init {
        Some(m) if m.nrows() == d && m.ncols() == d => project_to_state(m),
        Some(m) => return Err(TomographyError::Dimension(format!("initial state is {}x{}", m.nrows(), m.ncols()))),
        None => project_to_state(&linear_inversion(&marg.frequencies, &map)?.matrix),
    };
    let mix = 1e-6;
    let start = start * C64::new(1.0 - mix, 0.0) + CMatrix::identity(d, d) * C64::new(mix / d as f64, 0.0);
    let t0 = problem.params_from_state(&start).ok_or_else(|| TomographyError::Numerical("initial state is not positive definite".into()))?;
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for r in 0..opts.restarts {
        let mut x0 = t0.clone();
        if r > 0 {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            for x in &mut x0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x += opts.perturbation * z;
            }
        }
        let found = minimize(|t| problem.cost(t), &x0, opts.step, opts.max_iters, opts.tol);
        if !found.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| found.value < b.0) {
            best = Some((found.value, found.x, found.iterations));
        }
    }
    let (cost, t, iterations) = best.ok_or_else(|| TomographyError::Numerical("cost is not finite at any restart".into()))?;
    let estimate = problem.state(&t);
    Ok(ReconstructionResult { subset: marg.subset.clone(), method: Method::Mle, estimate, psd: true, cost: Some(cost), iterations })
}

/// Reconstructs every subset, `threads` at a time, results in subset order.
pub fn reconstruct_subsets(
    rec: &CountsRecord,
    ds: &DirectionSet,
    subsets: &[Vec<usize>],
    method: Method,
    opts: &MleOptions,
    threads: usize,
) -> Result<Vec<ReconstructionResult>, TomographyError> {
    if ds.n() != rec.n || ds.m() != rec.num_settings() {
        return Err(TomographyError::Dimension(format!(
            "record has {} qubits and {} settings, direction set {} and {}",
            rec.n,
            rec.num_settings(),
            ds.n(),
            ds.m()
        )));
    }
    parallel_map(subsets, threads, |s| {
        let marg = marginalize_counts(rec, s)?;
        match method {
            Method::Linear => linear_reconstruct(&marg, ds),
            Method::Mle => mle_reconstruct_with(&marg, ds, None, opts),
        }
    })
    .into_iter()
    .collect()
}

const FIDELITY_TOL: f64 = 1e-8;

fn check_state(m: &CMatrix, name: &str) -> Result<CMatrix, TomographyError> {
    let dev = hermiticity_deviation(m);
    let tr = trace(m);
    let min = hermitian_eigen(m).0.min();
    if dev > FIDELITY_TOL || (tr.re - 1.0).abs() > FIDELITY_TOL || tr.im.abs() > FIDELITY_TOL || min < -FIDELITY_TOL {
        return Err(TomographyError::InvalidState(format!("{name}: hermiticity {dev:e}, trace {tr}, eigenvalue {min:e}")));
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(crate::linalg::hermitian_map(&h, |x| x.max(0.0)))
}

/// Uhlmann fidelity `[tr sqrt(sqrt(rho) sigma sqrt(rho))]^2`, clamped to `[0, 1]`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64, TomographyError> {
    if rho.shape() != sigma.shape() {
        return Err(TomographyError::Dimension(format!("{:?} vs {:?}", rho.shape(), sigma.shape())));
    }
    let rho = check_state(rho, "first state")?;
    let sigma = check_state(sigma, "second state")?;
    let s = crate::linalg::psd_sqrt(&rho);
    let inner = &s * sigma * &s;
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let root: f64 = hermitian_eigen(&inner).0.iter().map(|x| x.max(0.0).sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// Fidelity statistics of one subset over Monte-Carlo repeats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub subset: Vec<usize>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub fidelities: Vec<f64>,
}

/// Resamples every count as Poisson with the observed count as mean (repeat
/// `r` on stream `r` of the seeded generator), reconstructs each subset by
/// MLE and scores it against the matching marginal of `reference`.
pub fn monte_carlo_errors(
    rec: &CountsRecord,
    ds: &DirectionSet,
    subsets: &[Vec<usize>],
    reference: &DensityMatrix,
    repeats: usize,
    seed: u64,
    opts: &MleOptions,
    threads: usize,
) -> Result<Vec<McSummary>, TomographyError> {
    if repeats == 0 {
        return Err(TomographyError::InvalidParameter("repeats must be positive".into()));
    }
    if reference.n_qubits() != rec.n {
        return Err(TomographyError::Dimension(format!("reference has {} qubits, record {}", reference.n_qubits(), rec.n)));
    }
    let targets = subsets.iter().map(|s| partial_trace(reference, s)).collect::<Result<Vec<_>, _>>()?;
    let indices: Vec<usize> = (0..repeats).collect();
    let runs = parallel_map(&indices, threads, |&r| -> Result<Vec<f64>, TomographyError> {
        let sample = rec.poisson_resample(seed, r as u64)?;
        let results = reconstruct_subsets(&sample, ds, subsets, Method::Mle, opts, 1)?;
        results.iter().zip(&targets).map(|(res, t)| fidelity(&res.estimate, t.matrix())).collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(subsets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let fidelities: Vec<f64> = runs.iter().map(|run| run[i]).collect();
            let mean = fidelities.iter().sum::<f64>() / repeats as f64;
            let var = fidelities.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / repeats as f64;
            McSummary { subset: s.clone(), mean, std: var.sqrt(), fidelities }
        })
        .collect())
}
