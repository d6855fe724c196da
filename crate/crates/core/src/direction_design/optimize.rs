use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{completeness_check, sample_uniform_directions, sigma_max, z_matrix, BlochDirection, DirectionError, DirectionSet};
use crate::linalg::minimize;
use crate::marginal_design::k_subsets;

/// Parametrization of the directions being optimized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// Independent polar angles per direction.
    Free,
    /// Per qubit, a partition of the settings into triples, each triple an
    /// orthonormal basis given by three rotation angles.
    Orthonormal(Vec<Vec<[usize; 3]>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub w1: f64,
    pub w2: f64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Central-difference step.
    pub step: f64,
    pub constraint: Constraint,
}

impl OptimizerConfig {
    /// Weights `(sqrt(1 - w2^2), w2)` with default iteration settings.
    pub fn with_w2(w2: f64, constraint: Constraint) -> Result<Self, DirectionError> {
        if !(0.0..=1.0).contains(&w2) {
            return Err(DirectionError::InvalidParameter(format!("w2 = {w2} outside [0, 1]")));
        }
        Ok(OptimizerConfig { w1: (1.0 - w2 * w2).sqrt(), w2, restarts: 20, max_iters: 500, step: 1e-5, constraint })
    }

    fn validate(&self, n: usize, m: usize) -> Result<(), DirectionError> {
        if self.w1 < 0.0 || self.w2 < 0.0 || (self.w1 * self.w1 + self.w2 * self.w2 - 1.0).abs() > 1e-9 {
            return Err(DirectionError::InvalidParameter(format!("weights ({}, {}) are not unit", self.w1, self.w2)));
        }
        if self.restarts == 0 || !(self.step > 0.0) {
            return Err(DirectionError::InvalidParameter("restarts and step must be positive".into()));
        }
        if let Constraint::Orthonormal(parts) = &self.constraint {
            if parts.len() != n {
                return Err(DirectionError::InvalidParameter(format!("{} partitions for {n} qubits", parts.len())));
            }
            for p in parts {
                let mut seen: Vec<usize> = p.iter().flatten().copied().collect();
                seen.sort_unstable();
                if seen != (0..m).collect::<Vec<_>>() {
                    return Err(DirectionError::InvalidParameter(format!("{p:?} does not partition 0..{m}")));
                }
            }
        }
        Ok(())
    }
}

/// `w1 sum_S |det Z_S| - w2 sum_S |det Z_S|^2` over all k-subsets.
pub fn portfolio_objective(ds: &DirectionSet, k: usize, w1: f64, w2: f64) -> Result<f64, DirectionError> {
    let mut total = 0.0;
    for s in k_subsets(ds.n(), k) {
        let d = z_matrix(ds, &s, k)?.determinant().abs();
        total += w1 * d - w2 * d * d;
    }
    Ok(total)
}

/// Gradient of `sum_S |det Z_S|` with respect to `(theta, phi)` of every
/// direction, laid out as `[(q * m + a) * 2 + {0: theta, 1: phi}]`, from
/// `d|det Z| = |det Z| tr(Z^-1 dZ)`.
pub fn det_sum_gradient(ds: &DirectionSet, k: usize) -> Result<Vec<f64>, DirectionError> {
    let (n, m) = (ds.n(), ds.m());
    let mut grad = vec![0.0; n * m * 2];
    for s in k_subsets(n, k) {
        let z = z_matrix(ds, &s, k)?;
        let det = z.determinant();
        let Some(inv) = z.clone().try_inverse() else { continue };
        for (pos, &q) in s.iter().enumerate() {
            for a in 0..m {
                let (dt, dp) = ds.direction(q, a).partials();
                for (which, dv) in [(0, dt), (1, dp)] {
                    let col = s.iter().enumerate().fold(vec![1.0], |acc, (i, &r)| {
                        let v = if i == pos { dv } else { ds.vector(r, a) };
                        acc.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect()
                    });
                    // tr(Z^-1 dZ) with dZ non-zero only in column a
                    let t: f64 = col.iter().enumerate().map(|(row, c)| inv[(a, row)] * c).sum();
                    grad[(q * m + a) * 2 + which] += det.abs() * t;
                }
            }
        }
    }
    Ok(grad)
}

/// Best direction set found by [`optimize_directions`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub directions: DirectionSet,
    pub objective: f64,
    pub sigma_max: f64,
    pub restart: usize,
}

fn rotation(alpha: f64, beta: f64, gamma: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    // Rz(alpha) Ry(beta) Rz(gamma)
    [
        [ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb],
        [sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb],
        [-sb * cg, sb * sg, cb],
    ]
}

fn decode(params: &[f64], n: usize, m: usize, constraint: &Constraint) -> DirectionSet {
    let mut directions = vec![vec![BlochDirection::new(0.0, 0.0); m]; n];
    match constraint {
        Constraint::Free => {
            for q in 0..n {
                for a in 0..m {
                    let i = (q * m + a) * 2;
                    directions[q][a] = BlochDirection::new(params[i], params[i + 1]);
                }
            }
        }
        Constraint::Orthonormal(parts) => {
            let mut i = 0;
            for (q, triples) in parts.iter().enumerate() {
                for t in triples {
                    let r = rotation(params[i], params[i + 1], params[i + 2]);
                    i += 3;
                    for (j, &a) in t.iter().enumerate() {
                        directions[q][a] = BlochDirection::from_vector([r[0][j], r[1][j], r[2][j]]);
                    }
                }
            }
        }
    }
    DirectionSet::new(directions).expect("rectangular")
}

fn random_params(rng: &mut ChaCha20Rng, n: usize, m: usize, constraint: &Constraint) -> Vec<f64> {
    match constraint {
        Constraint::Free => {
            let ds = sample_uniform_directions(n, m, rng.random());
            let mut params = Vec::with_capacity(n * m * 2);
            for q in 0..n {
                for a in 0..m {
                    let d = ds.direction(q, a);
                    params.extend([d.theta, d.phi]);
                }
            }
            params
        }
        Constraint::Orthonormal(parts) => {
            let triples: usize = parts.iter().map(Vec::len).sum();
            (0..triples)
                .flat_map(|_| [rng.random::<f64>() * TAU, (rng.random::<f64>() * 2.0 - 1.0).acos(), rng.random::<f64>() * TAU])
                .collect()
        }
    }
}

/// Multi-start local ascent of [`portfolio_objective`] over `n` qubits and
/// `3^k` settings, with central-difference gradients. Restart `r` draws its
/// start from stream `r` of the seeded generator; the best completeness-passing
/// result wins, earlier restarts on ties.
pub fn optimize_directions(n: usize, k: usize, cfg: &OptimizerConfig, seed: u64) -> Result<OptimizeResult, DirectionError> {
    if k == 0 || k > n {
        return Err(DirectionError::InvalidParameter(format!("k = {k} for {n} qubits")));
    }
    let m = 3usize.pow(k as u32);
    cfg.validate(n, m)?;
    let mut best: Option<OptimizeResult> = None;
    let mut restart = 0;
    while restart < cfg.restarts || best.is_none() {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let x0 = random_params(&mut rng, n, m, &cfg.constraint);
        let objective = |x: &[f64]| {
            let ds = decode(x, n, m, &cfg.constraint);
            -portfolio_objective(&ds, k, cfg.w1, cfg.w2).unwrap_or(f64::NEG_INFINITY)
        };
        let found = minimize(objective, &x0, cfg.step, cfg.max_iters, 1e-12);
        let mut ds = decode(&found.x, n, m, &cfg.constraint);
        normalize_angles(&mut ds);
        let value = -found.value;
        if completeness_check(&ds, k, 1e-8)?.complete && best.as_ref().is_none_or(|b| value > b.objective) {
            let sigma = sigma_max(&ds, k)?.sigma_max;
            best = Some(OptimizeResult { directions: ds, objective: value, sigma_max: sigma, restart });
        }
        restart += 1;
    }
    Ok(best.expect("loop exits with a result"))
}

/// Maps angles to `theta in [0, pi]`, `phi in (-pi, pi]` without moving the vector.
fn normalize_angles(ds: &mut DirectionSet) {
    for q in 0..ds.n() {
        for a in 0..ds.m() {
            let d = BlochDirection::from_vector(ds.vector(q, a));
            debug_assert!(d.theta <= PI);
            ds.set_direction(q, a, d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction_design::{paper_table_a1, table_a1_partitions};
    use approx::assert_relative_eq;

    #[test]
    fn rotation_is_orthonormal() {
        let r = rotation(0.3, 1.1, -2.0);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|t| r[t][i] * r[t][j]).sum();
                assert_relative_eq!(dot, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn objective_signs() {
        let ds = paper_table_a1();
        assert!(portfolio_objective(&ds, 2, 0.0, 1.0).unwrap() <= 0.0);
        let a = portfolio_objective(&ds, 2, 1.0, 0.0).unwrap();
        assert!(a > 0.0);
        assert_eq!(a, portfolio_objective(&ds, 2, 1.0, 0.0).unwrap());
    }

    #[test]
    fn orthonormal_optimization_keeps_triples_orthogonal() {
        let parts = table_a1_partitions();
        let cfg = OptimizerConfig { restarts: 1, max_iters: 20, ..OptimizerConfig::with_w2(0.5, Constraint::Orthonormal(parts.clone())).unwrap() };
        let res = optimize_directions(6, 2, &cfg, 3).unwrap();
        for (q, triples) in parts.iter().enumerate() {
            for t in triples {
                for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                    let (u, v) = (res.directions.vector(q, t[i]), res.directions.vector(q, t[j]));
                    assert!((u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::with_w2(1.5, Constraint::Free).is_err());
        let bad = OptimizerConfig { w1: 1.0, ..OptimizerConfig::with_w2(0.5, Constraint::Free).unwrap() };
        assert!(optimize_directions(3, 2, &bad, 0).is_err());
        let parts = OptimizerConfig::with_w2(0.5, Constraint::Orthonormal(vec![vec![[0, 1, 2], [3, 4, 5], [6, 7, 7]]; 3])).unwrap();
        assert!(optimize_directions(3, 2, &parts, 0).is_err());
    }
}
