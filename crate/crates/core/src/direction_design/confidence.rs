use serde::{Deserialize, Serialize};

use super::DirectionError;

/// Sample count and failure probability of a confidence region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    pub samples: f64,
    pub delta: f64,
}

impl ConfidenceParams {
    pub fn new(samples: f64, delta: f64) -> Result<Self, DirectionError> {
        if !(samples >= 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(DirectionError::InvalidParameter(format!("samples = {samples}, delta = {delta}")));
        }
        Ok(ConfidenceParams { samples, delta })
    }

    /// `u = 2 ln(8 / delta) / (9 N)`.
    pub fn u(&self) -> f64 {
        2.0 * (8.0 / self.delta).ln() / (9.0 * self.samples)
    }

    pub fn epsilon(&self) -> f64 {
        epsilon_of_u(self.u())
    }
}

fn epsilon_of_u(u: f64) -> f64 {
    3.0 * u.sqrt() * (u.sqrt() + (u + 1.0).sqrt())
}

/// Inverse of `epsilon_of_u`: with `t = eps / 3`, `u = t^2 / (2t + 1)`.
fn u_of_epsilon(eps: f64) -> f64 {
    let t = eps / 3.0;
    t * t / (2.0 * t + 1.0)
}

/// `eps = 3 sqrt(u) (sqrt(u) + sqrt(u + 1))`.
pub fn confidence_epsilon(samples: f64, delta: f64) -> f64 {
    ConfidenceParams { samples, delta }.epsilon()
}

/// Hilbert-Schmidt radius `eps(N, delta) * sigma`.
pub fn confidence_radius(cp: &ConfidenceParams, sigma: f64) -> f64 {
    cp.epsilon() * sigma
}

/// Smallest integer `N` with `eps(N, delta) * sigma <= radius`, by bisection.
pub fn samples_for_radius(sigma: f64, radius: f64, delta: f64) -> Result<u64, DirectionError> {
    if !(sigma > 0.0 && radius > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(DirectionError::InvalidParameter(format!("sigma = {sigma}, radius = {radius}, delta = {delta}")));
    }
    let fits = |n: u64| confidence_epsilon(n as f64, delta) * sigma <= radius;
    let mut hi = 1u64;
    while !fits(hi) {
        hi = hi.checked_mul(2).ok_or_else(|| DirectionError::InvalidParameter("radius too small".into()))?;
    }
    let mut lo = hi / 2;
    // invariant: fits(hi), and lo == 0 or !fits(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Real-valued `N` solving `eps(N, delta) * sigma = radius` exactly.
pub fn continuous_samples_for_radius(sigma: f64, radius: f64, delta: f64) -> f64 {
    2.0 * (8.0 / delta).ln() / (9.0 * u_of_epsilon(radius / sigma))
}

/// `N(sigma) / N(reference)` at a common radius from the real-valued
/// solution; `delta` cancels exactly.
pub fn sample_ratio(sigma: f64, reference: f64, radius: f64) -> f64 {
    u_of_epsilon(radius / reference) / u_of_epsilon(radius / sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_of_epsilon() {
        for u in [1e-8, 1e-3, 0.5, 7.0] {
            assert_relative_eq!(u_of_epsilon(epsilon_of_u(u)), u, max_relative = 1e-12);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn integer_solution_brackets_radius() {
        for (sigma, delta) in [(5.0, 0.05), (7.78, 0.318), (10.7, 0.01)] {
            let n = samples_for_radius(sigma, 0.1, delta).unwrap();
            assert!(confidence_epsilon(n as f64, delta) * sigma <= 0.1);
            assert!(confidence_epsilon((n - 1) as f64, delta) * sigma > 0.1);
            let real = continuous_samples_for_radius(sigma, 0.1, delta);
            assert!(real <= n as f64 && real > (n - 1) as f64);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(ConfidenceParams::new(0.5, 0.1).is_err());
        assert!(ConfidenceParams::new(10.0, 1.0).is_err());
        assert!(samples_for_radius(5.0, 0.0, 0.05).is_err());
    }
}
