//! Alice-conditioned assemblages of Bob's pure states and the covariance,
//! commutator and moment matrices built from them.
//!
//! Generator sets are always `S⁽¹⁾`. Measurement sets `S⁽ⁿ⁾` are nested, so
//! per-outcome statistics are computed once at the highest order in use and
//! lower orders are read off as leading sub-blocks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SteeringError};
use crate::linalg::{symmetrize, PsdPseudoInverse};
use crate::scalar::{cr, Complex, Real};
use crate::spin::{
    cached_operator_set, measurement_eigenbasis, operator_count, DickeSpace, DirectionYZ,
    OperatorBasis,
};
use crate::state::{BlockDensityMatrix, DensityBlock, SplitState};

/// Outcomes below this probability are dropped.
pub const PRUNE_PROB: f64 = 1e-14;
/// Largest total probability that pruning may discard.
pub const PRUNE_MASS: f64 = 1e-12;
/// Imaginary residue tolerated in commutator expectations.
const COMM_IMAG_TOL: f64 = 1e-10;

pub const GENERATOR_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T: Real> {
    pub n_a: usize,
    pub l_a: usize,
    pub prob: T,
    pub n_b: usize,
    pub bob_state: DVector<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage<T: Real> {
    pub n_atoms: usize,
    pub direction: DirectionYZ<T>,
    pub outcomes: Vec<Outcome<T>>,
}

impl<T: Real> Assemblage<T> {
    pub fn total_probability(&self) -> T {
        self.outcomes.iter().fold(T::zero(), |acc, o| acc + o.prob)
    }

    /// `Σ_b p(b)|ψ_b⟩⟨ψ_b|`, accumulated per `N_B` block.
    pub fn mixture(&self) -> BlockDensityMatrix<T> {
        let mut blocks: Vec<DensityBlock<T>> = (0..=self.n_atoms)
            .map(|n_b| DensityBlock {
                n_b,
                matrix: DMatrix::zeros(n_b + 1, n_b + 1),
            })
            .collect();
        for o in &self.outcomes {
            blocks[o.n_b].matrix += (&o.bob_state * o.bob_state.adjoint()) * cr(o.prob);
        }
        BlockDensityMatrix::new(blocks).expect("blocks built with matching shapes")
    }
}

/// Projects Alice's half of `state` onto the eigenbasis of `cos φ S_y + sin φ S_z`.
pub fn measure_alice<T: Real>(state: &SplitState<T>, direction: DirectionYZ<T>) -> Result<Assemblage<T>> {
    let n = state.n_atoms();
    let mut outcomes = Vec::new();
    let mut dropped = T::zero();
    for n_a in 0..=n {
        let amp = state.sector(n_a);
        let basis = measurement_eigenbasis(DickeSpace::new(n_a), direction);
        let amp_t = amp.transpose();
        for (l_a, v) in basis.eigenvectors.iter().enumerate() {
            // bob[k_B] = Σ_{k_A} conj(v[k_A]) A[k_A, k_B]
            let bob = &amp_t * v.conjugate();
            let prob = bob.norm_squared();
            if prob < T::lit(PRUNE_PROB) {
                dropped += prob;
                continue;
            }
            let bob_state = bob.map(|z| z / cr(prob.sqrt()));
            outcomes.push(Outcome {
                n_a,
                l_a,
                prob,
                n_b: n - n_a,
                bob_state,
            });
        }
    }
    if dropped > T::tol(PRUNE_MASS) {
        return Err(SteeringError::Numerical(format!(
            "pruned outcome mass {dropped} exceeds {PRUNE_MASS:e}"
        )));
    }
    Ok(Assemblage {
        n_atoms: n,
        direction,
        outcomes,
    })
}

/// A pure state vector or an (unnormalized) density block.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a, T: Real> {
    Pure(&'a DVector<Complex<T>>),
    Mixed(&'a DMatrix<Complex<T>>),
}

impl<'a, T: Real> StateRef<'a, T> {
    fn dim(&self) -> usize {
        match self {
            StateRef::Pure(v) => v.len(),
            StateRef::Mixed(m) => m.nrows(),
        }
    }

    fn norm(&self) -> T {
        match self {
            StateRef::Pure(v) => v.norm_squared(),
            StateRef::Mixed(m) => m.trace().re,
        }
    }

    /// Normalized `⟨A B⟩`.
    fn expect_product(&self, a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> Complex<T> {
        let raw = match self {
            StateRef::Pure(v) => (a * *v).dotc(&(b * *v)),
            StateRef::Mixed(m) => (*m * a * b).trace(),
        };
        raw / cr(self.norm())
    }

    fn expect(&self, a: &DMatrix<Complex<T>>) -> Complex<T> {
        let raw = match self {
            StateRef::Pure(v) => v.dotc(&(a * *v)),
            StateRef::Mixed(m) => (*m * a).trace(),
        };
        raw / cr(self.norm())
    }
}

/// Symmetric covariance matrix over an operator set.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix<T: Real> {
    pub labels: Vec<String>,
    pub entries: DMatrix<T>,
}

/// `C_ij = −i⟨[X_j, H_i]⟩`, rows indexed by generators, columns by measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct CommMatrix<T: Real> {
    pub entries: DMatrix<T>,
}

/// Moment matrix indexed by the generator set.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix<T: Real> {
    pub entries: DMatrix<T>,
}

fn check_dims<T: Real>(state: &StateRef<'_, T>, ops: &OperatorBasis<T>) -> Result<()> {
    let expected = ops.space().dim();
    if state.dim() != expected {
        return Err(SteeringError::Dimension {
            expected,
            found: state.dim(),
        });
    }
    Ok(())
}

pub fn covariance_matrix<T: Real>(state: StateRef<'_, T>, ops: &OperatorBasis<T>) -> Result<CovMatrix<T>> {
    check_dims(&state, ops)?;
    let k = ops.len();
    let mut entries = DMatrix::zeros(k, k);
    if state.norm() > T::zero() {
        let means: Vec<T> = ops.ops().iter().map(|o| state.expect(o.matrix()).re).collect();
        for i in 0..k {
            for j in i..k {
                let ab = state.expect_product(ops.ops()[i].matrix(), ops.ops()[j].matrix());
                let v = ab.re - means[i] * means[j];
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
    }
    Ok(CovMatrix {
        labels: ops.labels().to_vec(),
        entries,
    })
}

pub fn commutator_matrix<T: Real>(
    state: StateRef<'_, T>,
    h_ops: &OperatorBasis<T>,
    x_ops: &OperatorBasis<T>,
) -> Result<CommMatrix<T>> {
    check_dims(&state, h_ops)?;
    check_dims(&state, x_ops)?;
    let mut entries = DMatrix::zeros(h_ops.len(), x_ops.len());
    if state.norm() > T::zero() {
        for (i, h) in h_ops.ops().iter().enumerate() {
            for (j, x) in x_ops.ops().iter().enumerate() {
                let xh = state.expect_product(x.matrix(), h.matrix());
                let hx = state.expect_product(h.matrix(), x.matrix());
                let val = (xh - hx) * Complex::new(T::zero(), -T::one());
                if val.im.abs() > T::tol(COMM_IMAG_TOL) {
                    return Err(SteeringError::Numerical(format!(
                        "commutator expectation has imaginary part {}",
                        val.im
                    )));
                }
                entries[(i, j)] = val.re;
            }
        }
    }
    Ok(CommMatrix { entries })
}

/// `M = C Γ⁺ Cᵀ` for a pure state.
pub fn moment_matrix<T: Real>(
    psi: &DVector<Complex<T>>,
    h_ops: &OperatorBasis<T>,
    x_ops: &OperatorBasis<T>,
) -> Result<MomentMatrix<T>> {
    let gamma = covariance_matrix(StateRef::Pure(psi), x_ops)?;
    let comm = commutator_matrix(StateRef::Pure(psi), h_ops, x_ops)?;
    let pinv = PsdPseudoInverse::new(&gamma.entries);
    pinv.check_support(&comm.entries)?;
    Ok(MomentMatrix {
        entries: symmetrize(&pinv.sandwich(&comm.entries)),
    })
}

/// First and second moments of one pure conditional state over `S⁽ⁿ⁾`.
#[derive(Debug, Clone)]
pub struct OutcomeStats<T: Real> {
    pub prob: T,
    pub n_b: usize,
    /// Covariance over the full measurement set.
    pub gamma: DMatrix<T>,
    /// Commutator matrix, generators `S⁽¹⁾` × measurement set.
    pub comm: DMatrix<T>,
    /// `(O_i − ⟨O_i⟩)ψ`, kept so small covariance eigenvalues can be
    /// recomputed as norms instead of read off the Gram matrix.
    centered: Vec<DVector<Complex<T>>>,
}

impl<T: Real> OutcomeStats<T> {
    pub fn from_pure(prob: T, n_b: usize, psi: &DVector<Complex<T>>, ops: &OperatorBasis<T>) -> Self {
        let k = ops.len();
        let w: Vec<DVector<Complex<T>>> = ops.ops().iter().map(|o| o.matrix() * psi).collect();
        let centered: Vec<DVector<Complex<T>>> = w
            .iter()
            .map(|wi| wi - psi * cr(psi.dotc(wi).re))
            .collect();
        let mut gamma = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = centered[i].dotc(&centered[j]).re;
                gamma[(i, j)] = v;
                gamma[(j, i)] = v;
            }
        }
        let mut comm = DMatrix::zeros(GENERATOR_COUNT, k);
        for i in 0..GENERATOR_COUNT {
            for j in 0..k {
                comm[(i, j)] = T::lit(2.0) * w[j].dotc(&w[i]).im;
            }
        }
        Self {
            prob,
            n_b,
            gamma,
            comm,
            centered,
        }
    }

    /// `‖Σ_j v_j (O_j − ⟨O_j⟩)ψ‖² = vᵀΓv` without the cancellation of the
    /// Gram matrix route.
    fn quadratic_form(&self, v: &DVector<T>) -> T {
        let mut acc = DVector::<Complex<T>>::zeros(self.centered[0].len());
        for (c, x) in v.iter().zip(&self.centered) {
            acc += x * cr(*c);
        }
        acc.norm_squared()
    }

    pub fn gamma_order(&self, order: usize) -> Result<DMatrix<T>> {
        let k = operator_count(order)?;
        Ok(self.gamma.view((0, 0), (k, k)).into_owned())
    }

    pub fn comm_order(&self, order: usize) -> Result<DMatrix<T>> {
        let k = operator_count(order)?;
        Ok(self.comm.view((0, 0), (GENERATOR_COUNT, k)).into_owned())
    }

    pub fn moment(&self, order: usize) -> Result<(DMatrix<T>, PsdPseudoInverse<T>)> {
        let gamma = self.gamma_order(order)?;
        let comm = self.comm_order(order)?;
        let pinv = PsdPseudoInverse::new(&gamma).refine(|v| self.quadratic_form(v));
        pinv.check_support(&comm)?;
        Ok((symmetrize(&pinv.sandwich(&comm)), pinv))
    }
}

/// Per-outcome statistics of an assemblage at a fixed maximal order.
#[derive(Debug, Clone)]
pub struct AssemblageStats<T: Real> {
    pub max_order: usize,
    pub outcomes: Vec<OutcomeStats<T>>,
}

impl<T: Real> AssemblageStats<T> {
    pub fn new(asm: &Assemblage<T>, max_order: usize) -> Result<Self> {
        operator_count(max_order)?;
        let outcomes = asm
            .outcomes
            .iter()
            .map(|o| {
                let ops = cached_operator_set::<T>(o.n_b, max_order)?;
                Ok(OutcomeStats::from_pure(o.prob, o.n_b, &o.bob_state, &ops))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            max_order,
            outcomes,
        })
    }

    fn check_order(&self, order: usize) -> Result<usize> {
        let k = operator_count(order)?;
        if order > self.max_order {
            return Err(SteeringError::UnsupportedOrder(order));
        }
        Ok(k)
    }

    /// `Γ^{B|A}` over `S⁽ⁿ⁾`.
    pub fn conditional_covariance(&self, order: usize) -> Result<DMatrix<T>> {
        let k = self.check_order(order)?;
        let mut acc = DMatrix::zeros(k, k);
        for o in &self.outcomes {
            acc += o.gamma.view((0, 0), (k, k)) * o.prob;
        }
        Ok(acc)
    }

    /// `Σ_b p(b) M[ψ_b, S⁽¹⁾, S⁽ⁿ⁾]`.
    pub fn conditional_moment(&self, order: usize) -> Result<DMatrix<T>> {
        self.check_order(order)?;
        let mut acc = DMatrix::zeros(GENERATOR_COUNT, GENERATOR_COUNT);
        for o in &self.outcomes {
            acc += o.moment(order)?.0 * o.prob;
        }
        Ok(symmetrize(&acc))
    }

    /// Per-outcome optimal measurement coefficients `∝ Γ_b⁺ C_bᵀ n`.
    pub fn optimal_measurements(&self, order: usize, n: &DVector<T>) -> Result<Vec<DVector<T>>> {
        self.check_order(order)?;
        self.outcomes
            .iter()
            .map(|o| {
                let (_, pinv) = o.moment(order)?;
                let comm = o.comm_order(order)?;
                Ok(normalized(pinv.apply(&(comm.transpose() * n))))
            })
            .collect()
    }

    /// `C[ρ_B] (Γ^{B|A})⁺ C[ρ_B]ᵀ` with the commutator matrix of Bob's
    /// reduced state supplied by the caller.
    pub fn reid_moment(&self, order: usize, reduced_comm: &DMatrix<T>) -> Result<DMatrix<T>> {
        let k = self.check_order(order)?;
        let comm = reduced_comm.view((0, 0), (GENERATOR_COUNT, k)).into_owned();
        let pinv = PsdPseudoInverse::new(&self.conditional_covariance(order)?);
        pinv.check_support(&comm)?;
        Ok(symmetrize(&pinv.sandwich(&comm)))
    }

    /// The single optimal measurement `∝ (Γ^{B|A})⁺ C[ρ_B]ᵀ n`.
    pub fn reid_measurement(&self, order: usize, reduced_comm: &DMatrix<T>, n: &DVector<T>) -> Result<DVector<T>> {
        let k = self.check_order(order)?;
        let comm = reduced_comm.view((0, 0), (GENERATOR_COUNT, k)).into_owned();
        let pinv = PsdPseudoInverse::new(&self.conditional_covariance(order)?);
        Ok(normalized(pinv.apply(&(comm.transpose() * n))))
    }
}

fn normalized<T: Real>(v: DVector<T>) -> DVector<T> {
    let norm = v.norm();
    if norm > T::zero() {
        v / norm
    } else {
        v
    }
}

pub fn conditional_covariance<T: Real>(asm: &Assemblage<T>, order: usize) -> Result<CovMatrix<T>> {
    let stats = AssemblageStats::new(asm, order)?;
    let labels = cached_operator_set::<T>(0, order)?.labels().to_vec();
    Ok(CovMatrix {
        labels,
        entries: stats.conditional_covariance(order)?,
    })
}

/// Conditional moment matrix together with the per-outcome statistics needed
/// to recover Bob's optimal measurements.
#[derive(Debug, Clone)]
pub struct ConditionalMoment<T: Real> {
    pub order: usize,
    pub matrix: MomentMatrix<T>,
    stats: AssemblageStats<T>,
}

impl<T: Real> ConditionalMoment<T> {
    pub fn optimal_measurements(&self, n: &DVector<T>) -> Result<Vec<DVector<T>>> {
        self.stats.optimal_measurements(self.order, n)
    }
}

pub fn conditional_moment<T: Real>(asm: &Assemblage<T>, x_order: usize) -> Result<ConditionalMoment<T>> {
    let stats = AssemblageStats::new(asm, x_order)?;
    let entries = stats.conditional_moment(x_order)?;
    Ok(ConditionalMoment {
        order: x_order,
        matrix: MomentMatrix { entries },
        stats,
    })
}

/// Commutator matrix of Bob's reduced state, `S⁽¹⁾ × S⁽ⁿ⁾`, summed over blocks.
pub fn reduced_commutator<T: Real>(rho_b: &BlockDensityMatrix<T>, x_order: usize) -> Result<CommMatrix<T>> {
    let k = operator_count(x_order)?;
    let mut acc = DMatrix::zeros(GENERATOR_COUNT, k);
    for block in rho_b.blocks() {
        let w = block.weight();
        if w <= T::zero() {
            continue;
        }
        let h = cached_operator_set::<T>(block.n_b, 1)?;
        let x = cached_operator_set::<T>(block.n_b, x_order)?;
        let c = commutator_matrix(StateRef::Mixed(&block.matrix), &h, &x)?;
        acc += c.entries * w;
    }
    Ok(CommMatrix { entries: acc })
}

pub fn reid_moment<T: Real>(
    asm: &Assemblage<T>,
    rho_b: &BlockDensityMatrix<T>,
    x_order: usize,
) -> Result<MomentMatrix<T>> {
    let stats = AssemblageStats::new(asm, x_order)?;
    let comm = reduced_commutator(rho_b, x_order)?;
    Ok(MomentMatrix {
        entries: stats.reid_moment(x_order, &comm.entries)?,
    })
}
