//! Small dense eigen-solvers and the pseudoinverse policy used by the
//! moment matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SteeringError};
use crate::scalar::{Complex, Real};

/// Relative singular-value cutoff for pseudoinverses.
pub const PINV_RCOND: f64 = 1e-10;
/// Allowed fraction of the commutator norm outside the covariance support.
pub const SUPPORT_RTOL: f64 = 1e-8;
/// Top eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-12;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigh<T: Real>(m: &DMatrix<Complex<T>>) -> (Vec<T>, Vec<DVector<Complex<T>>>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let sym = (m + m.adjoint()).scale(T::lit(0.5));
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigh<T: Real>(m: &DMatrix<T>) -> (Vec<T>, Vec<DVector<T>>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let sym = (m + m.transpose()).scale(T::lit(0.5));
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

pub fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    symmetric_eigh(m).0.first().copied().unwrap_or_else(T::zero)
}

pub fn max_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    symmetric_eigh(m).0.last().copied().unwrap_or_else(T::zero)
}

/// Largest eigenvalue and a deterministic unit eigenvector.
///
/// The sign is fixed so that the largest-magnitude component is positive.
/// If the top two eigenvalues are within [`DEGENERACY_GAP`], the candidate
/// whose sorted absolute-component pattern is lexicographically largest wins.
pub fn top_eigenpair<T: Real>(m: &DMatrix<T>) -> (T, DVector<T>) {
    let (values, vectors) = symmetric_eigh(m);
    let last = values.len() - 1;
    let top = values[last];
    let gap = T::tol(DEGENERACY_GAP);
    let mut best = fix_sign(vectors[last].clone());
    for i in (0..last).rev() {
        if top - values[i] >= gap {
            break;
        }
        let cand = fix_sign(vectors[i].clone());
        if abs_pattern_greater(&cand, &best) {
            best = cand;
        }
    }
    (top, best)
}

fn fix_sign<T: Real>(mut v: DVector<T>) -> DVector<T> {
    let mut idx = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[idx].abs() + T::tol(1e-14) {
            idx = i;
        }
    }
    if v[idx] < T::zero() {
        v.neg_mut();
    }
    v
}

fn abs_pattern_greater<T: Real>(a: &DVector<T>, b: &DVector<T>) -> bool {
    let eps = T::tol(1e-12);
    for (x, y) in a.iter().zip(b.iter()) {
        let (x, y) = (x.abs(), y.abs());
        if x > y + eps {
            return true;
        }
        if y > x + eps {
            return false;
        }
    }
    false
}

/// Moore-Penrose pseudoinverse of a symmetric positive semidefinite matrix,
/// stored in spectral form.
#[derive(Debug, Clone)]
pub struct PsdPseudoInverse<T: Real> {
    dim: usize,
    /// Retained eigenpairs.
    kept: Vec<(T, DVector<T>)>,
    /// Discarded eigenpairs spanning the numerical null space.
    null: Vec<(T, DVector<T>)>,
    sigma_max: T,
}

impl<T: Real> PsdPseudoInverse<T> {
    pub fn new(gamma: &DMatrix<T>) -> Self {
        let dim = gamma.nrows();
        let (values, vectors) = symmetric_eigh(gamma);
        let sigma_max = values
            .iter()
            .fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc });
        let cutoff = T::lit(PINV_RCOND) * sigma_max;
        let mut kept = Vec::new();
        let mut null = Vec::new();
        for (v, u) in values.into_iter().zip(vectors) {
            if sigma_max > T::zero() && v > cutoff {
                kept.push((v, u));
            } else {
                null.push((v, u));
            }
        }
        Self {
            dim,
            kept,
            null,
            sigma_max,
        }
    }

    /// Recomputes every eigenvalue as `f(u)` for its eigenvector `u`, where
    /// `f` evaluates `uᵀΓu` more accurately than the matrix it came from,
    /// then re-applies the cutoff.
    pub fn refine(self, f: impl Fn(&DVector<T>) -> T) -> Self {
        let pairs: Vec<(T, DVector<T>)> = self
            .kept
            .into_iter()
            .chain(self.null)
            .map(|(_, u)| (f(&u), u))
            .collect();
        let sigma_max = pairs.iter().fold(T::zero(), |acc, (v, _)| acc.max(*v));
        let cutoff = T::lit(PINV_RCOND) * sigma_max;
        let (kept, null) = pairs
            .into_iter()
            .partition(|(v, _)| sigma_max > T::zero() && *v > cutoff);
        Self {
            dim: self.dim,
            kept,
            null,
            sigma_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    /// Verifies that every row of `c` lies in the retained support.
    ///
    /// A discarded eigenvalue `λ` may still carry a component of size up to
    /// `2√(σ_max λ)` per row (Cauchy-Schwarz against the generator
    /// variances), so that budget is added to the relative tolerance.
    pub fn check_support(&self, c: &DMatrix<T>) -> Result<()> {
        let scale = c.norm();
        let mut residual = T::zero();
        let mut budget = T::zero();
        for (v, u) in &self.null {
            let proj = c * u;
            residual += proj.norm_squared();
            budget += T::lit(4.0) * self.sigma_max * v.max(T::zero());
        }
        let residual = residual.sqrt();
        let rows = T::lit(c.nrows() as f64);
        let rel = T::lit(SUPPORT_RTOL) * scale;
        let limit = (rel * rel + rows * budget).sqrt();
        if residual > limit && residual > T::tol(1e-13) {
            return Err(SteeringError::SupportViolation {
                residual: residual.as_f64(),
                scale: scale.as_f64(),
            });
        }
        Ok(())
    }

    /// `c · Γ⁺ · cᵀ` for a matrix whose columns are indexed like Γ.
    pub fn sandwich(&self, c: &DMatrix<T>) -> DMatrix<T> {
        let rows = c.nrows();
        let mut out = DMatrix::<T>::zeros(rows, rows);
        for (val, u) in &self.kept {
            let w = c * u;
            let inv = T::one() / *val;
            for i in 0..rows {
                for j in 0..rows {
                    out[(i, j)] += w[i] * w[j] * inv;
                }
            }
        }
        out
    }

    /// `Γ⁺ · v`.
    pub fn apply(&self, v: &DVector<T>) -> DVector<T> {
        let mut out = DVector::<T>::zeros(self.dim);
        for (val, u) in &self.kept {
            let coeff = u.dot(v) / *val;
            out.axpy(coeff, u, T::one());
        }
        out
    }
}

/// Symmetrized copy, used to remove rounding asymmetry before eigen-solves.
pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()).scale(T::lit(0.5))
}
