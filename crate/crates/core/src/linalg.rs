//! Dense linear-algebra helpers shared by the design and simulation modules.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative singular-value cutoff for pseudoinverses and ranks.
pub const PINV_RTOL: f64 = 1e-10;

/// Moore-Penrose pseudoinverse through the SVD, discarding singular values
/// below `PINV_RTOL` times the largest one. Also returns the numerical rank.
pub fn pseudoinverse(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_RTOL * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut pinv = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            pinv += (v_t.row(i).transpose() / s) * u.column(i).transpose();
        }
    }
    (pinv, rank)
}

/// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues and
/// the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = CMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let diag = CMatrix::from_diagonal(&values.map(|x| C64::new(f(x), 0.0)));
    &vectors * diag * vectors.adjoint()
}

/// Square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    hermitian_map(m, |x| x.max(0.0).sqrt())
}

/// Closest unit-trace PSD matrix in eigenvalue terms: negative eigenvalues are
/// clipped and the spectrum renormalized. Falls back to the maximally mixed
/// state when nothing positive remains.
pub fn project_to_state(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let clipped = values.map(|x| x.max(0.0));
    let total: f64 = clipped.sum();
    let d = m.nrows();
    if total <= 0.0 {
        return CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
    }
    let diag = CMatrix::from_diagonal(&clipped.map(|x| C64::new(x / total, 0.0)));
    &vectors * diag * vectors.adjoint()
}

/// Largest absolute entry of `m - m^dagger`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Kronecker product of complex matrices in the given order.
pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors.iter().fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Result of [`minimize`].
#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Central-difference gradient with step `h`.
pub fn numeric_gradient(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Quasi-Newton (BFGS) descent with Armijo backtracking on numeric gradients.
/// Stops when an accepted step changes the value by less than
/// `tol * (1 + |f|)` or after `max_iters` iterations. Accepted steps never
/// increase the value.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], h: f64, max_iters: usize, tol: f64) -> Minimum {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    let mut g = DVector::from_vec(numeric_gradient(&mut f, x.as_slice(), h));
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut dir = -(&hinv * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            hinv = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = -g.norm_squared();
        }
        if slope == 0.0 {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x + &dir * step;
            let fc = f(cand.as_slice());
            if fc.is_finite() && fc <= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_)) = accepted else { break };
        let gn = DVector::from_vec(numeric_gradient(&mut f, xn.as_slice(), h));
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        let change = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if change.abs() < tol * (1.0 + fx.abs()) {
            break;
        }
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            hinv += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
    }
    Minimum { x: x.as_slice().to_vec(), value: fx, iterations }
}
