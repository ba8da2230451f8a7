//! Brute-force references for tiny systems.
//!
//! Nothing here reuses the sector layout, assemblage or criteria code. The
//! state is rebuilt by expanding creation operators through a 50/50
//! splitter, reduced states come from explicit index sums over Fock
//! occupations, and criteria are maximized on a plain angle grid with dense
//! linear algebra. Only the collective spin matrices are shared.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::criteria::CriterionId;
use crate::error::{Result, SteeringError};
use crate::scalar::Complex;
use crate::spin::{operator_set, spin_matrices, DickeSpace};
use crate::state::{BlockDensityMatrix, DensityBlock, SplitState};

/// Largest particle number the Fock construction accepts.
pub const ORACLE_MAX_ATOMS: usize = 4;
/// Largest particle number the dense criterion evaluation accepts.
pub const DENSE_MAX_ATOMS: usize = 8;

type C64 = Complex<f64>;

/// Occupations `(n_↑A, n_↓A, n_↑B, n_↓B)`.
pub type Occupation = [usize; 4];

/// Four-mode state with a fixed total particle number, basis ordered
/// lexicographically by occupation tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState4Mode {
    pub n_total: usize,
    pub occupations: Vec<Occupation>,
    pub amplitudes: DVector<C64>,
}

impl FockState4Mode {
    pub fn amplitude(&self, occ: Occupation) -> C64 {
        self.occupations
            .binary_search(&occ)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Regroups amplitudes into per-`N_A` sector matrices indexed
    /// `[n_↓A, n_↓B]`.
    pub fn to_split_state(&self, mu: f64) -> Result<SplitState<f64>> {
        let n = self.n_total;
        let mut sectors: Vec<DMatrix<C64>> = (0..=n)
            .map(|n_a| DMatrix::zeros(n_a + 1, n - n_a + 1))
            .collect();
        for (occ, amp) in self.occupations.iter().zip(self.amplitudes.iter()) {
            let n_a = occ[0] + occ[1];
            sectors[n_a][(occ[1], occ[3])] = *amp;
        }
        SplitState::from_sectors(n, mu, sectors)
    }
}

/// All occupation tuples with the given total, lexicographic.
fn occupations(n: usize) -> Vec<Occupation> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n - a {
            for c in 0..=n - a - b {
                out.push([a, b, c, n - a - b - c]);
            }
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Polynomial in the four output creation operators.
type Poly = BTreeMap<Occupation, f64>;

/// Multiplies by `(a†_{σA} + a†_{σB}) / √2` for spin mode `sigma` (0 = ↑).
fn apply_splitter(p: &Poly, sigma: usize) -> Poly {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Poly::new();
    for (mono, coeff) in p {
        for mode in [sigma, sigma + 2] {
            let mut m = *mono;
            m[mode] += 1;
            *out.entry(m).or_insert(0.0) += coeff * s;
        }
    }
    out
}

/// Splits each spin mode of the two-mode twisted state on a 50/50 beam
/// splitter.
pub fn beam_splitter_state(n_atoms: usize, mu: f64) -> Result<FockState4Mode> {
    if n_atoms > ORACLE_MAX_ATOMS {
        return Err(SteeringError::AtomNumber {
            n: n_atoms,
            min: 0,
            max: ORACLE_MAX_ATOMS,
        });
    }
    let occs = occupations(n_atoms);
    let mut amps = DVector::<C64>::zeros(occs.len());
    let half = n_atoms as f64 / 2.0;
    for k in 0..=n_atoms {
        // |N−k, k⟩ = (a↑†)^{N−k} (a↓†)^k |0⟩ / √((N−k)! k!)
        let m = half - k as f64;
        let c_k = C64::from_polar(
            (binomial(n_atoms, k) / 2f64.powi(n_atoms as i32)).sqrt(),
            -mu / 2.0 * m * m,
        );
        let mut poly = Poly::from([([0; 4], 1.0 / (factorial(n_atoms - k) * factorial(k)).sqrt())]);
        for _ in 0..n_atoms - k {
            poly = apply_splitter(&poly, 0);
        }
        for _ in 0..k {
            poly = apply_splitter(&poly, 1);
        }
        for (mono, coeff) in poly {
            // (a†)^e |0⟩ = √(e!) |e⟩
            let norm: f64 = mono.iter().map(|&e| factorial(e).sqrt()).product();
            let idx = occs.binary_search(&mono).expect("occupation in basis");
            amps[idx] += c_k * (coeff * norm);
        }
    }
    Ok(FockState4Mode {
        n_total: n_atoms,
        occupations: occs,
        amplitudes: amps,
    })
}

/// Traces out Alice's two modes by explicit summation over her occupations.
pub fn dense_partial_trace(fock: &FockState4Mode) -> Result<BlockDensityMatrix<f64>> {
    let n = fock.n_total;
    let bob: Vec<[usize; 2]> = (0..=n)
        .flat_map(|nb| (0..=nb).map(move |d| [nb - d, d]))
        .collect();
    let alice = bob.clone();
    let dim = bob.len();
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for a in &alice {
        for (i, b) in bob.iter().enumerate() {
            let x = fock.amplitude([a[0], a[1], b[0], b[1]]);
            if x == C64::default() {
                continue;
            }
            for (j, b2) in bob.iter().enumerate() {
                let y = fock.amplitude([a[0], a[1], b2[0], b2[1]]);
                rho[(i, j)] += x * y.conj();
            }
        }
    }
    let mut blocks = Vec::with_capacity(n + 1);
    let mut offset = 0;
    for n_b in 0..=n {
        let d = n_b + 1;
        // bob[offset + d'] has n_↓B = d'
        blocks.push(DensityBlock {
            n_b,
            matrix: rho.view((offset, offset), (d, d)).into_owned(),
        });
        offset += d;
    }
    BlockDensityMatrix::new(blocks)
}

/// Global state as a dense matrix `Ψ[a, b]` over Alice's and Bob's full Fock
/// spaces, both ordered by `(n, n_↓)`.
struct DenseBipartite {
    n: usize,
    psi: DMatrix<C64>,
}

fn offset(n: usize) -> usize {
    n * (n + 1) / 2
}

impl DenseBipartite {
    fn from_split(state: &SplitState<f64>) -> Self {
        let n = state.n_atoms();
        let dim = offset(n + 1);
        let mut psi = DMatrix::zeros(dim, dim);
        for n_a in 0..=n {
            let n_b = n - n_a;
            let s = state.sector(n_a);
            for ka in 0..=n_a {
                for kb in 0..=n_b {
                    psi[(offset(n_a) + ka, offset(n_b) + kb)] = s[(ka, kb)];
                }
            }
        }
        Self { n, psi }
    }

    fn dim(&self) -> usize {
        self.psi.nrows()
    }

    /// Block-diagonal embedding of per-particle-number operators.
    fn embed(&self, f: impl Fn(usize) -> DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for m in 0..=self.n {
            let block = f(m);
            out.view_mut((offset(m), offset(m)), (m + 1, m + 1)).copy_from(&block);
        }
        out
    }

    /// Unnormalized conditional states of Bob for Alice measuring
    /// `cos φ S_y + sin φ S_z` together with her particle number.
    fn conditional_states(&self, phi: f64) -> Vec<(f64, DVector<C64>)> {
        let mut out = Vec::new();
        for n_a in 0..=self.n {
            let s = spin_matrices::<f64>(DickeSpace::new(n_a));
            let obs = s.along([0.0, phi.cos(), phi.sin()]).into_matrix();
            let eig = SymmetricEigen::new(obs);
            for l in 0..=n_a {
                let v = eig.eigenvectors.column(l);
                let mut proj = DVector::<C64>::zeros(self.dim());
                for ka in 0..=n_a {
                    let row = self.psi.row(offset(n_a) + ka).transpose();
                    proj += row * v[ka].conj();
                }
                let p = proj.norm_squared();
                if p > 1e-15 {
                    out.push((p, proj / C64::from(p.sqrt())));
                }
            }
        }
        out
    }
}

fn mean(psi: &DVector<C64>, op: &DMatrix<C64>) -> f64 {
    psi.dotc(&(op * psi)).re
}

/// Per-angle dense statistics: the conditional Fisher matrix over
/// `(S_x, S_y, S_z)` and the conditional moment matrix for `order`.
struct DenseProfile {
    fisher: DMatrix<f64>,
    moment: DMatrix<f64>,
    cond_gamma: DMatrix<f64>,
}

fn dense_profile(setup: &DenseSetup, phi: f64) -> DenseProfile {
    let ops = &setup.ops;
    let reduced_comm = setup.reduced_comm.as_ref();
    let k = ops.len();
    let mut fisher = DMatrix::<f64>::zeros(3, 3);
    let mut moment = DMatrix::<f64>::zeros(3, 3);
    let mut cond_gamma = DMatrix::<f64>::zeros(k, k);
    for (p, psi) in setup.bp.conditional_states(phi) {
        let means: Vec<f64> = ops.iter().map(|o| mean(&psi, o)).collect();
        let images: Vec<DVector<C64>> = ops.iter().map(|o| o * &psi).collect();
        // ⟨{O_i, O_j}⟩/2 = Re⟨O_i ψ, O_j ψ⟩ and ⟨[O_j, O_i]⟩ = 2i Im⟨O_j ψ, O_i ψ⟩
        let gamma = DMatrix::from_fn(k, k, |i, j| images[i].dotc(&images[j]).re - means[i] * means[j]);
        let comm = DMatrix::from_fn(3, k, |i, j| 2.0 * images[j].dotc(&images[i]).im);
        let pinv = psd_pinv(&gamma);
        fisher += gamma.view((0, 0), (3, 3)) * (4.0 * p);
        if reduced_comm.is_none() {
            moment += (&comm * pinv * comm.transpose()) * p;
        }
        cond_gamma += gamma * p;
    }
    if let Some(c) = reduced_comm {
        let pinv = psd_pinv(&cond_gamma);
        moment = c * pinv * c.transpose();
    }
    DenseProfile {
        fisher,
        moment,
        cond_gamma,
    }
}

/// Spectral pseudoinverse. The SVD route is avoided on purpose: it returns
/// inaccurate factors for some rank-deficient covariance matrices.
fn psd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let top = eig.eigenvalues.amax();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if top > 0.0 && v > 1e-10 * top {
            let u = eig.eigenvectors.column(i);
            out += u * u.transpose() / v;
        }
    }
    out
}

fn lambda_max(m: DMatrix<f64>) -> f64 {
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.max()
}

struct DenseSetup {
    bp: DenseBipartite,
    ops: Vec<DMatrix<C64>>,
    reduced_comm: Option<DMatrix<f64>>,
}

fn dense_setup(state: &SplitState<f64>, criterion: CriterionId, order: usize) -> Result<DenseSetup> {
    let n = state.n_atoms();
    if n > DENSE_MAX_ATOMS {
        return Err(SteeringError::AtomNumber {
            n,
            min: 0,
            max: DENSE_MAX_ATOMS,
        });
    }
    let order = match criterion {
        CriterionId::Delta1 => 1,
        CriterionId::Delta4 => {
            return Err(SteeringError::InvalidInput("delta4 has no angle search".into()));
        }
        _ => order,
    };
    let bp = DenseBipartite::from_split(state);
    let sets: Vec<_> = (0..=n)
        .map(|m| operator_set::<f64>(DickeSpace::new(m), order))
        .collect::<Result<_>>()?;
    let count = sets[0].len();
    let ops: Vec<DMatrix<C64>> = (0..count)
        .map(|i| bp.embed(|m| sets[m].ops()[i].matrix().clone()))
        .collect();
    let reduced_comm = if criterion == CriterionId::Delta3 {
        // ρ_B = Ψᵀ Ψ̄ over Bob's full Fock space
        let rho = bp.psi.transpose() * bp.psi.conjugate();
        Some(DMatrix::from_fn(3, count, |i, j| {
            let c = &ops[j] * &ops[i] - &ops[i] * &ops[j];
            ((&rho * c).trace() * C64::new(0.0, -1.0)).re
        }))
    } else {
        None
    };
    Ok(DenseSetup {
        bp,
        ops,
        reduced_comm,
    })
}

fn first_of(criterion: CriterionId, p: &DenseProfile) -> &DMatrix<f64> {
    match criterion {
        CriterionId::Delta1 => &p.fisher,
        _ => &p.moment,
    }
}

/// Exhaustive maximum over a `resolution_deg` grid of `(φ_X, φ_Y)` on
/// `[0, π)²`, without refinement.
pub fn fine_grid_criterion(state: &SplitState<f64>, criterion: CriterionId, order: usize, resolution_deg: f64) -> Result<f64> {
    let setup = dense_setup(state, criterion, order)?;
    let angles = grid(resolution_deg)?;
    let profiles: Vec<DenseProfile> = angles
        .iter()
        .map(|&a| dense_profile(&setup, a))
        .collect();
    let mut best = f64::NEG_INFINITY;
    for px in &profiles {
        for py in &profiles {
            best = best.max(lambda_max(first_of(criterion, py) - &px.fisher));
        }
    }
    Ok(best)
}

/// Maximum over a `resolution_deg` grid of `φ_Y` of `λ_max` of the first
/// term of `criterion`.
pub fn fine_grid_first_term(state: &SplitState<f64>, criterion: CriterionId, order: usize, resolution_deg: f64) -> Result<f64> {
    let setup = dense_setup(state, criterion, order)?;
    let mut best = f64::NEG_INFINITY;
    for a in grid(resolution_deg)? {
        let p = dense_profile(&setup, a);
        best = best.max(lambda_max(first_of(criterion, &p).clone()));
    }
    Ok(best)
}

/// `λ_max` of the first term of `criterion` at one Alice angle.
pub fn dense_first_term_at(state: &SplitState<f64>, criterion: CriterionId, order: usize, phi: f64) -> Result<f64> {
    let setup = dense_setup(state, criterion, order)?;
    let p = dense_profile(&setup, phi);
    Ok(lambda_max(first_of(criterion, &p).clone()))
}

/// Dense conditional covariance `Σ p Γ[ψ_{a}]` over the first-order
/// generators at one Alice angle.
pub fn dense_conditional_covariance(state: &SplitState<f64>, phi: f64) -> Result<DMatrix<f64>> {
    let setup = dense_setup(state, CriterionId::Delta1, 1)?;
    Ok(dense_profile(&setup, phi).cond_gamma)
}

/// Criterion matrix `λ_max(F(φ_Y) − 4Γ^{B|A}(φ_X))` at fixed angles.
pub fn dense_criterion_at(
    state: &SplitState<f64>,
    criterion: CriterionId,
    order: usize,
    phi_x: f64,
    phi_y: f64,
) -> Result<f64> {
    let setup = dense_setup(state, criterion, order)?;
    let px = dense_profile(&setup, phi_x);
    let py = dense_profile(&setup, phi_y);
    Ok(lambda_max(first_of(criterion, &py) - &px.fisher))
}

fn grid(resolution_deg: f64) -> Result<Vec<f64>> {
    if !(resolution_deg > 0.0 && resolution_deg <= 45.0) {
        return Err(SteeringError::InvalidInput(format!(
            "grid resolution must lie in (0, 45] degrees, got {resolution_deg}"
        )));
    }
    let points = (180.0 / resolution_deg).round() as usize;
    Ok((0..points)
        .map(|i| std::f64::consts::PI * i as f64 / points as f64)
        .collect())
}
