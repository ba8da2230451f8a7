//! Collective spin operators on the symmetric (Dicke) subspace of `n`
//! spin-1/2 particles.
//!
//! Basis index `k` counts spins pointing down, so `S_z |k⟩ = (n/2 − k)|k⟩`.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use parking_lot::RwLock;

use crate::error::{Result, SteeringError};
use crate::linalg::hermitian_eigh;
use crate::scalar::{c, cr, modulus, Complex, Real};

/// Hermiticity tolerance for operator construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DickeSpace {
    n_particles: usize,
}

impl DickeSpace {
    pub fn new(n_particles: usize) -> Self {
        Self { n_particles }
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.n_particles + 1
    }

    /// `S_z` eigenvalue of basis state `k`.
    pub fn sz_eigenvalue<T: Real>(&self, k: usize) -> T {
        T::lit(self.n_particles as f64 / 2.0 - k as f64)
    }
}

/// A Hermitian matrix on a Dicke space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp<T: Real> {
    matrix: DMatrix<Complex<T>>,
}

impl<T: Real> HermitianOp<T> {
    /// Wraps `matrix`, rejecting it if it deviates from its adjoint.
    pub fn new(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(SteeringError::Dimension {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > T::tol(HERMITIAN_TOL) {
            return Err(SteeringError::NotHermitian {
                deviation: deviation.as_f64(),
            });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: DMatrix<Complex<T>>) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.matrix
    }

    /// Real linear combination `Σ coeffs[i]·ops[i]`.
    pub fn combination(ops: &[&HermitianOp<T>], coeffs: &[T]) -> Self {
        assert_eq!(ops.len(), coeffs.len());
        let dim = ops.first().map_or(0, |o| o.dim());
        let mut m = DMatrix::zeros(dim, dim);
        for (op, &w) in ops.iter().zip(coeffs) {
            m += op.matrix.map(|z| z * w);
        }
        Self { matrix: m }
    }
}

pub fn hermitian_deviation<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = modulus(m[(i, j)] - m[(j, i)].conj());
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// The collective spin components on one Dicke space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrices<T: Real> {
    pub x: HermitianOp<T>,
    pub y: HermitianOp<T>,
    pub z: HermitianOp<T>,
}

impl<T: Real> SpinMatrices<T> {
    pub fn axis(&self, a: Axis) -> &HermitianOp<T> {
        match a {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    /// `n_x S_x + n_y S_y + n_z S_z`.
    pub fn along(&self, n: [T; 3]) -> HermitianOp<T> {
        HermitianOp::combination(&[&self.x, &self.y, &self.z], &n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// `(S_x, S_y, S_z)` built from the ladder operators.
pub fn spin_matrices<T: Real>(space: DickeSpace) -> SpinMatrices<T> {
    let dim = space.dim();
    let j = space.n_particles() as f64 / 2.0;
    // Raising operator: |k⟩ → |k−1⟩ increases m = j − k by one.
    let mut plus = DMatrix::<Complex<T>>::zeros(dim, dim);
    for k in 1..dim {
        let m = j - k as f64;
        let amp = (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt();
        plus[(k - 1, k)] = cr(T::lit(amp));
    }
    let minus = plus.adjoint();
    let half = T::lit(0.5);
    let x = (&plus + &minus).map(|z| z * half);
    let y = (&plus - &minus).map(|z| z * c(T::zero(), -half));
    let z = DMatrix::from_fn(dim, dim, |r, col| {
        if r == col {
            cr(space.sz_eigenvalue(r))
        } else {
            cr(T::zero())
        }
    });
    SpinMatrices {
        x: HermitianOp::new_unchecked(x),
        y: HermitianOp::new_unchecked(y),
        z: HermitianOp::new_unchecked(z),
    }
}

/// Observable sets `S⁽¹⁾ ⊂ S⁽²⁾ ⊂ S⁽³⁾`. Lower orders are prefixes of higher
/// ones, so coefficient vectors and matrices of a lower order are leading
/// sub-blocks of the higher-order ones.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis<T: Real> {
    space: DickeSpace,
    order: usize,
    ops: Vec<HermitianOp<T>>,
    labels: Vec<String>,
}

impl<T: Real> OperatorBasis<T> {
    pub fn space(&self) -> DickeSpace {
        self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ops(&self) -> &[HermitianOp<T>] {
        &self.ops
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Number of operators in `S⁽ⁿ⁾`.
pub fn operator_count(order: usize) -> Result<usize> {
    match order {
        1 => Ok(3),
        2 => Ok(9),
        3 => Ok(19),
        other => Err(SteeringError::UnsupportedOrder(other)),
    }
}

pub fn operator_set<T: Real>(space: DickeSpace, order: usize) -> Result<OperatorBasis<T>> {
    operator_count(order)?;
    let s = spin_matrices::<T>(space);
    let mut ops = Vec::new();
    let mut labels = Vec::new();
    for a in Axis::ALL {
        ops.push(s.axis(a).clone());
        labels.push(a.letter().to_string());
    }
    if order >= 2 {
        for a in Axis::ALL {
            let m = s.axis(a).matrix();
            ops.push(HermitianOp::new_unchecked(m * m));
            labels.push(format!("{0}{0}", a.letter()));
        }
        for (a, b) in [(Axis::X, Axis::Y), (Axis::X, Axis::Z), (Axis::Y, Axis::Z)] {
            ops.push(symmetrized_product(&s, &[a, b]));
            labels.push(format!("{}{}", a.letter(), b.letter()));
        }
    }
    if order >= 3 {
        for (a, b, c3) in cubic_multisets() {
            ops.push(symmetrized_product(&s, &[a, b, c3]));
            labels.push(format!("{}{}{}", a.letter(), b.letter(), c3.letter()));
        }
    }
    Ok(OperatorBasis {
        space,
        order,
        ops,
        labels,
    })
}

/// The ten degree-3 multisets in lexicographic order.
fn cubic_multisets() -> Vec<(Axis, Axis, Axis)> {
    let mut out = Vec::with_capacity(10);
    for (i, &a) in Axis::ALL.iter().enumerate() {
        for (j, &b) in Axis::ALL.iter().enumerate().skip(i) {
            for &c3 in Axis::ALL.iter().skip(j) {
                out.push((a, b, c3));
            }
        }
    }
    out
}

/// Average of `S_a S_b ...` over all distinct orderings of the factors.
fn symmetrized_product<T: Real>(s: &SpinMatrices<T>, axes: &[Axis]) -> HermitianOp<T> {
    let mut perms: Vec<Vec<Axis>> = Vec::new();
    permutations(axes.to_vec(), 0, &mut perms);
    perms.sort();
    perms.dedup();
    let dim = s.x.dim();
    let mut acc = DMatrix::<Complex<T>>::zeros(dim, dim);
    for p in &perms {
        let mut m = DMatrix::<Complex<T>>::identity(dim, dim);
        for &a in p {
            m *= s.axis(a).matrix();
        }
        acc += m;
    }
    let w = T::one() / T::lit(perms.len() as f64);
    let acc = acc.map(|z| z * w);
    // Exact Hermitian part removes rounding asymmetry.
    let herm = (&acc + acc.adjoint()).map(|z| z * T::lit(0.5));
    HermitianOp::new_unchecked(herm)
}

fn permutations(mut items: Vec<Axis>, k: usize, out: &mut Vec<Vec<Axis>>) {
    if k == items.len() {
        out.push(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items.clone(), k + 1, out);
        items.swap(k, i);
    }
}

/// A measurement direction `cos(φ)·y + sin(φ)·z` in the yz-plane.
///
/// The angle is stored as given. Directions φ and φ+π describe the same
/// observable up to sign and give the same outcome ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionYZ<T: Real> {
    phi: T,
}

impl<T: Real> DirectionYZ<T> {
    pub fn new(phi: T) -> Self {
        Self { phi }
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    /// Angle reduced into `[0, π)`.
    pub fn canonical_phi(&self) -> T {
        let pi = T::pi();
        let mut r = self.phi % pi;
        if r < T::zero() {
            r += pi;
        }
        if r >= pi {
            r -= pi;
        }
        r
    }

    /// Unit 3-vector `(0, cos φ, sin φ)`.
    pub fn unit(&self) -> [T; 3] {
        [T::zero(), self.phi.cos(), self.phi.sin()]
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementEigenbasis<T: Real> {
    pub space: DickeSpace,
    pub direction: DirectionYZ<T>,
    /// Ascending, equal to `l − n/2` for `l = 0..=n`.
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Vec<DVector<Complex<T>>>,
}

/// Minimum spacing accepted between neighbouring eigenvalues.
const SPECTRAL_GAP: f64 = 1e-10;

pub fn measurement_eigenbasis<T: Real>(
    space: DickeSpace,
    direction: DirectionYZ<T>,
) -> MeasurementEigenbasis<T> {
    let s = spin_matrices::<T>(space);
    let [_, cy, sz] = direction.unit();
    let op = HermitianOp::combination(&[&s.y, &s.z], &[cy, sz]);
    let (eigenvalues, vectors) = hermitian_eigh(op.matrix());
    for w in eigenvalues.windows(2) {
        assert!(
            w[1] - w[0] > T::lit(SPECTRAL_GAP),
            "collective spin spectrum must be nondegenerate"
        );
    }
    let eigenvectors = vectors.into_iter().map(fix_phase).collect();
    MeasurementEigenbasis {
        space,
        direction,
        eigenvalues,
        eigenvectors,
    }
}

/// Makes the largest-magnitude component real and positive. Near-ties go to
/// the lowest index.
fn fix_phase<T: Real>(v: DVector<Complex<T>>) -> DVector<Complex<T>> {
    let mut idx = 0;
    let mut best = T::zero();
    let slack = T::tol(1e-12);
    for (i, z) in v.iter().enumerate() {
        let m = modulus(*z);
        if m > best + slack {
            best = m;
            idx = i;
        }
    }
    if best == T::zero() {
        return v;
    }
    let phase = v[idx].conj() / cr(modulus(v[idx]));
    v.map(|z| z * phase)
}

type CacheKey = (TypeId, usize, usize);
type CacheMap = HashMap<CacheKey, Arc<dyn Any + Send + Sync>>;

fn operator_cache() -> &'static RwLock<CacheMap> {
    static CACHE: OnceLock<RwLock<CacheMap>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared, lazily built `operator_set(DickeSpace::new(n), order)`.
///
/// Concurrent misses may build the same set twice; the entries are equal so
/// whichever insert lands last is kept.
pub fn cached_operator_set<T: Real>(n_particles: usize, order: usize) -> Result<Arc<OperatorBasis<T>>> {
    let key = (TypeId::of::<T>(), n_particles, order);
    if let Some(hit) = operator_cache().read().get(&key) {
        return Ok(hit
            .clone()
            .downcast::<OperatorBasis<T>>()
            .expect("cache entry keyed by scalar type"));
    }
    let built = Arc::new(operator_set::<T>(DickeSpace::new(n_particles), order)?);
    operator_cache()
        .write()
        .insert(key, built.clone() as Arc<dyn Any + Send + Sync>);
    Ok(built)
}
