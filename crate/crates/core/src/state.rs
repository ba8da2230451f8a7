//! One-axis-twisted states, their 50/50 split into two parties, and Bob's
//! reduced density matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SteeringError};
use crate::linalg::hermitian_eigh;
use crate::scalar::{c, cr, modulus, Complex, Real};
use crate::spin::{spin_matrices, DickeSpace, HermitianOp};

pub const MIN_ATOMS: usize = 1;
/// Precision guard for `2^{-N}` and `√C(N,k)` in double precision.
pub const MAX_ATOMS: usize = 40;

/// Eigenvalue floor below which a density block is declared non-positive.
const PSD_TOL: f64 = 1e-12;
/// Eigenvalue pairs with `p_i + p_j` below this do not contribute to the QFI.
const QFI_PAIR_CUTOFF: f64 = 1e-14;

fn check_atoms(n: usize) -> Result<()> {
    if !(MIN_ATOMS..=MAX_ATOMS).contains(&n) {
        return Err(SteeringError::AtomNumber {
            n,
            min: MIN_ATOMS,
            max: MAX_ATOMS,
        });
    }
    Ok(())
}

/// `ln C(n, k)` by summing logarithms.
pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// `exp(−i(μ/2)(N/2 − k)²)` for `k` total spins down.
fn twist_phase<T: Real>(n_atoms: usize, mu: T, k_total: usize) -> Complex<T> {
    let d = T::lit(n_atoms as f64 / 2.0 - k_total as f64);
    let angle = -(mu / T::lit(2.0)) * d * d;
    c(angle.cos(), angle.sin())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OatState<T: Real> {
    pub n_atoms: usize,
    pub mu: T,
    pub amplitudes: DVector<Complex<T>>,
}

pub fn oat_state<T: Real>(n_atoms: usize, mu: T) -> Result<OatState<T>> {
    check_atoms(n_atoms)?;
    let ln2 = std::f64::consts::LN_2;
    let amplitudes = DVector::from_fn(n_atoms + 1, |k, _| {
        let mag = (0.5 * ln_binomial(n_atoms, k) - 0.5 * n_atoms as f64 * ln2).exp();
        twist_phase(n_atoms, mu, k) * T::lit(mag)
    });
    Ok(OatState {
        n_atoms,
        mu,
        amplitudes,
    })
}

/// Split state amplitudes, one `(N_A+1) × (N−N_A+1)` matrix per `N_A`,
/// rows indexed by `k_A` and columns by `k_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState<T: Real> {
    n_atoms: usize,
    mu: T,
    sectors: Vec<DMatrix<Complex<T>>>,
}

impl<T: Real> SplitState<T> {
    /// Assembles a state from explicit sector matrices, checking shapes.
    pub fn from_sectors(n_atoms: usize, mu: T, sectors: Vec<DMatrix<Complex<T>>>) -> Result<Self> {
        check_atoms(n_atoms)?;
        if sectors.len() != n_atoms + 1 {
            return Err(SteeringError::Dimension {
                expected: n_atoms + 1,
                found: sectors.len(),
            });
        }
        for (n_a, s) in sectors.iter().enumerate() {
            if s.shape() != (n_a + 1, n_atoms - n_a + 1) {
                return Err(SteeringError::Dimension {
                    expected: (n_a + 1) * (n_atoms - n_a + 1),
                    found: s.len(),
                });
            }
        }
        Ok(Self {
            n_atoms,
            mu,
            sectors,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn sectors(&self) -> &[DMatrix<Complex<T>>] {
        &self.sectors
    }

    pub fn sector(&self, n_a: usize) -> &DMatrix<Complex<T>> {
        &self.sectors[n_a]
    }

    /// Probability of finding `n_a` particles on Alice's side.
    pub fn sector_weight(&self, n_a: usize) -> T {
        self.sectors[n_a].norm_squared()
    }

    pub fn norm_squared(&self) -> T {
        self.sectors
            .iter()
            .fold(T::zero(), |acc, s| acc + s.norm_squared())
    }

    /// `⟨O_A ⊗ O_B⟩` for operators given per sector through closures
    /// returning the Alice and Bob matrices of the requested particle number.
    pub fn bipartite_expectation<'a, FA, FB>(&self, alice: FA, bob: FB) -> Complex<T>
    where
        FA: Fn(usize) -> &'a DMatrix<Complex<T>>,
        FB: Fn(usize) -> &'a DMatrix<Complex<T>>,
    {
        let mut acc = cr(T::zero());
        for (n_a, amp) in self.sectors.iter().enumerate() {
            let n_b = self.n_atoms - n_a;
            let oa = alice(n_a);
            let ob = bob(n_b);
            // Σ conj(A[k,l]) OA[k,k'] OB[l,l'] A[k',l'] = Tr(A† OA A OBᵀ)
            let left = amp.adjoint() * oa * amp;
            acc += left.component_mul(ob).sum();
        }
        acc
    }
}

pub fn split_state<T: Real>(n_atoms: usize, mu: T) -> Result<SplitState<T>> {
    check_atoms(n_atoms)?;
    let ln2 = std::f64::consts::LN_2;
    let sectors = (0..=n_atoms)
        .map(|n_a| {
            let n_b = n_atoms - n_a;
            let base = ln_binomial(n_atoms, n_a) - 2.0 * n_atoms as f64 * ln2;
            DMatrix::from_fn(n_a + 1, n_b + 1, |k_a, k_b| {
                let ln_sq = base + ln_binomial(n_a, k_a) + ln_binomial(n_b, k_b);
                twist_phase(n_atoms, mu, k_a + k_b) * T::lit((0.5 * ln_sq).exp())
            })
        })
        .collect();
    Ok(SplitState {
        n_atoms,
        mu,
        sectors,
    })
}

/// One particle-number block of Bob's reduced state. `matrix` carries the
/// block's probability as its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityBlock<T: Real> {
    pub n_b: usize,
    pub matrix: DMatrix<Complex<T>>,
}

impl<T: Real> DensityBlock<T> {
    pub fn weight(&self) -> T {
        self.matrix.trace().re
    }
}

/// Block-diagonal density matrix, one block per particle number `N_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensityMatrix<T: Real> {
    blocks: Vec<DensityBlock<T>>,
}

impl<T: Real> BlockDensityMatrix<T> {
    pub fn new(blocks: Vec<DensityBlock<T>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.n_b != i || b.matrix.shape() != (i + 1, i + 1) {
                return Err(SteeringError::Dimension {
                    expected: i + 1,
                    found: b.matrix.nrows(),
                });
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[DensityBlock<T>] {
        &self.blocks
    }

    pub fn block(&self, n_b: usize) -> &DensityBlock<T> {
        &self.blocks[n_b]
    }

    pub fn trace(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| acc + b.weight())
    }

    /// Largest entrywise deviation from another block matrix.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (x, y) in a.matrix.iter().zip(b.matrix.iter()) {
                let d = modulus(x - y);
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Sum over blocks of the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> T {
        let mut total = T::zero();
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            let (vals, _) = hermitian_eigh(&(&a.matrix - &b.matrix));
            total += vals.iter().fold(T::zero(), |acc, v| acc + v.abs());
        }
        total
    }
}

/// Bob's reduced state `Tr_A |Φ⟩⟨Φ|`, kept block-diagonal in `N_B`.
pub fn reduced_state_b<T: Real>(state: &SplitState<T>) -> BlockDensityMatrix<T> {
    let n = state.n_atoms();
    let blocks = (0..=n)
        .map(|n_b| {
            let amp = state.sector(n - n_b);
            // ρ[l, l'] = Σ_k A[k, l] conj(A[k, l'])
            let t = amp.transpose();
            DensityBlock {
                n_b,
                matrix: &t * t.adjoint(),
            }
        })
        .collect();
    BlockDensityMatrix { blocks }
}

/// Quantum Fisher information of a block-diagonal mixed state for a
/// block-diagonal generator, from an exact eigendecomposition of each block.
pub fn mixed_state_qfi<T: Real>(
    rho: &BlockDensityMatrix<T>,
    generator: &[HermitianOp<T>],
) -> Result<T> {
    if generator.len() != rho.blocks.len() {
        return Err(SteeringError::Dimension {
            expected: rho.blocks.len(),
            found: generator.len(),
        });
    }
    let cutoff = T::tol(QFI_PAIR_CUTOFF);
    let mut total = T::zero();
    for (block, g) in rho.blocks.iter().zip(generator) {
        if g.dim() != block.matrix.nrows() {
            return Err(SteeringError::Dimension {
                expected: block.matrix.nrows(),
                found: g.dim(),
            });
        }
        let (vals, vecs) = hermitian_eigh(&block.matrix);
        let mut probs = Vec::with_capacity(vals.len());
        for v in vals {
            if v < -T::tol(PSD_TOL) {
                return Err(SteeringError::NotPositive {
                    n_b: block.n_b,
                    eigenvalue: v.as_f64(),
                });
            }
            probs.push(if v < T::zero() { T::zero() } else { v });
        }
        let gv: Vec<DVector<Complex<T>>> = vecs.iter().map(|v| g.matrix() * v).collect();
        for i in 0..probs.len() {
            for j in 0..probs.len() {
                let s = probs[i] + probs[j];
                if s < cutoff {
                    continue;
                }
                let d = probs[i] - probs[j];
                let elem = vecs[i].dotc(&gv[j]).norm_sqr();
                total += T::lit(2.0) * d * d / s * elem;
            }
        }
    }
    Ok(total)
}

/// Collective generator `n·S` instantiated on every block of `rho`.
pub fn collective_generator<T: Real>(rho: &BlockDensityMatrix<T>, n: [T; 3]) -> Vec<HermitianOp<T>> {
    rho.blocks
        .iter()
        .map(|b| spin_matrices::<T>(DickeSpace::new(b.n_b)).along(n))
        .collect()
}

pub fn mixed_state_qfi_along<T: Real>(rho: &BlockDensityMatrix<T>, n: [T; 3]) -> Result<T> {
    mixed_state_qfi(rho, &collective_generator(rho, n))
}

/// The QFI formula evaluated with the ensemble `{p(N_A,k_A), |Ψ(N_A,k_A)⟩}`
/// that decomposes Bob's state, treating it as if it were spectral.
///
/// The vectors with equal `N_A` are generally not orthogonal, so this is a
/// diagnostic to compare against [`mixed_state_qfi`], not a QFI.
pub fn ensemble_qfi_diagnostic<T: Real>(state: &SplitState<T>, n: [T; 3]) -> T {
    let n_atoms = state.n_atoms();
    let ln2 = std::f64::consts::LN_2;
    let mut total = T::zero();
    for n_a in 0..=n_atoms {
        let n_b = n_atoms - n_a;
        let g = spin_matrices::<T>(DickeSpace::new(n_b)).along(n);
        let members: Vec<(T, DVector<Complex<T>>)> = (0..=n_a)
            .map(|k_a| {
                let p = (ln_binomial(n_atoms, n_a) + ln_binomial(n_a, k_a)
                    - (n_atoms + n_a) as f64 * ln2)
                    .exp();
                let psi = DVector::from_fn(n_b + 1, |k_b, _| {
                    let mag = (0.5 * ln_binomial(n_b, k_b) - 0.5 * n_b as f64 * ln2).exp();
                    twist_phase(n_atoms, state.mu(), k_a + k_b) * T::lit(mag)
                });
                (T::lit(p), psi)
            })
            .collect();
        for (pi, vi) in &members {
            let gvi = g.matrix() * vi;
            for (pj, vj) in &members {
                let s = *pi + *pj;
                if s < T::tol(QFI_PAIR_CUTOFF) {
                    continue;
                }
                let d = *pi - *pj;
                let elem = vj.dotc(&gvi).norm_sqr();
                total += T::lit(2.0) * d * d / s * elem;
            }
        }
    }
    total
}
