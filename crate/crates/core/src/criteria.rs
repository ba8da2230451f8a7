//! Optimized steering witnesses δ₁, δ₂⁽ⁿ⁾, δ₃⁽ⁿ⁾ and δ₄.
//!
//! Every angle-optimized criterion has the form
//!
//! ```text
//! δ = max_{φ_X, φ_Y} λ_max( F(φ_Y) − 4Γ^{B|A}(φ_X) )
//! ```
//!
//! where `F` is `4Γ^{B|A}` (Fisher), the conditional moment matrix
//! (conditional squeezing) or the Reid moment matrix. The 3×3 matrices depend
//! on a single Alice angle each, so [`SteeringAnalysis`] memoizes them per
//! angle and the joint search only pays for small eigenvalue problems.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use parking_lot::Mutex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assemblage::{measure_alice, reduced_commutator, AssemblageStats};
use crate::error::{Result, SteeringError};
use crate::linalg::{max_eigenvalue, symmetric_eigh, top_eigenpair};
use crate::scalar::{Complex, Real};
use crate::spin::{operator_count, spin_matrices, DickeSpace, DirectionYZ, SpinMatrices};
use crate::state::{reduced_state_b, BlockDensityMatrix, SplitState};

/// Relative slack for the criterion hierarchy checks.
pub const HIERARCHY_SLACK: f64 = 1e-7;
/// Bound on `|⟨S_{y,z}⟩|` for the linear-estimate Reid criterion, where the
/// estimators are assumed unbiased.
pub const UNBIASED_TOL: f64 = 1e-10;

/// Half-width, in grid steps, of each local refinement grid.
const REFINE_HALF_POINTS: usize = 10;
/// Coarse local maxima that get refined.
const REFINE_CANDIDATES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionId {
    Delta1,
    Delta2,
    Delta3,
    Delta4,
}

impl CriterionId {
    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::Delta1 => "delta1",
            CriterionId::Delta2 => "delta2",
            CriterionId::Delta3 => "delta3",
            CriterionId::Delta4 => "delta4",
        }
    }

    /// Whether the criterion takes a measurement order.
    pub fn has_order(self) -> bool {
        matches!(self, CriterionId::Delta2 | CriterionId::Delta3)
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = SteeringError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta1" => Ok(CriterionId::Delta1),
            "delta2" => Ok(CriterionId::Delta2),
            "delta3" => Ok(CriterionId::Delta3),
            "delta4" => Ok(CriterionId::Delta4),
            other => Err(SteeringError::InvalidInput(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Coarse grid over `[origin, origin + π)` per angle, then shrinking local
/// grids around the best coarse maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSearchPolicy {
    pub coarse_points: usize,
    pub refine_rounds: usize,
    pub refine_shrink: f64,
    #[serde(default)]
    pub origin: f64,
}

impl Default for AngleSearchPolicy {
    fn default() -> Self {
        Self {
            coarse_points: 121,
            refine_rounds: 3,
            refine_shrink: 0.1,
            origin: 0.0,
        }
    }
}

impl AngleSearchPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_points < 8 {
            return Err(SteeringError::InvalidInput(format!(
                "coarse_points must be at least 8, got {}",
                self.coarse_points
            )));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return Err(SteeringError::InvalidInput(format!(
                "refine_shrink must lie in (0, 1), got {}",
                self.refine_shrink
            )));
        }
        if !self.origin.is_finite() {
            return Err(SteeringError::InvalidInput("origin must be finite".into()));
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        PI / self.coarse_points as f64
    }

    fn grid(&self) -> Vec<f64> {
        (0..self.coarse_points)
            .map(|i| self.origin + self.step() * i as f64)
            .collect()
    }

    fn reduce(&self, phi: f64) -> f64 {
        self.origin + (phi - self.origin).rem_euclid(PI)
    }
}

/// Bob's optimal measurement for one of Alice's outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeMeasurement<T: Real> {
    pub n_a: usize,
    pub l_a: usize,
    pub coefficients: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementChoice<T: Real> {
    /// δ₁ and the Fisher first term need no explicit measurement.
    None,
    /// δ₂: one observable per conditional state.
    PerOutcome(Vec<OutcomeMeasurement<T>>),
    /// δ₃ and δ₄: a single observable for the whole assemblage.
    Single(DVector<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult<T: Real> {
    pub criterion: CriterionId,
    pub order: usize,
    pub value: T,
    pub phi_x: T,
    pub phi_y: T,
    /// Bob's generator direction over `(S_x, S_y, S_z)`.
    pub n_opt: DVector<T>,
    pub m_opt: MeasurementChoice<T>,
    pub first_term: T,
    pub second_term: T,
    /// `(g_y, g_z)` for δ₄.
    pub gains: Option<(T, T)>,
}

/// Angle-optimized first terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstTerms<T: Real> {
    pub fisher: AngleMax<T>,
    pub moment: Vec<(usize, AngleMax<T>)>,
    pub reid: Vec<(usize, AngleMax<T>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleMax<T: Real> {
    pub value: T,
    pub phi: T,
}

/// The 3×3 matrices that one Alice angle contributes.
#[derive(Debug, Clone)]
struct AngleProfile<T: Real> {
    /// `4Γ^{B|A}` over `S⁽¹⁾`.
    fisher: DMatrix<T>,
    /// Conditional moment matrices, index `order − 1`.
    moment: Vec<DMatrix<T>>,
    /// Reid moment matrices, index `order − 1`.
    reid: Vec<DMatrix<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FirstKind {
    Fisher,
    Moment(usize),
    Reid(usize),
}

impl FirstKind {
    fn pick<'a, T: Real>(&self, p: &'a AngleProfile<T>) -> &'a DMatrix<T> {
        match *self {
            FirstKind::Fisher => &p.fisher,
            FirstKind::Moment(o) => &p.moment[o - 1],
            FirstKind::Reid(o) => &p.reid[o - 1],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Peak {
    value: f64,
    phi_x: f64,
    phi_y: f64,
}

/// Shared state for evaluating several criteria on one split state.
pub struct SteeringAnalysis<T: Real> {
    state: SplitState<T>,
    rho_b: BlockDensityMatrix<T>,
    max_order: usize,
    reduced_comm: DMatrix<T>,
    profiles: Mutex<HashMap<u64, Arc<AngleProfile<T>>>>,
}

impl<T: Real> SteeringAnalysis<T> {
    /// Prepares an analysis supporting measurement orders up to `max_order`.
    pub fn new(state: SplitState<T>, max_order: usize) -> Result<Self> {
        operator_count(max_order)?;
        let rho_b = reduced_state_b(&state);
        let reduced_comm = reduced_commutator(&rho_b, max_order)?.entries;
        Ok(Self {
            state,
            rho_b,
            max_order,
            reduced_comm,
            profiles: Mutex::new(HashMap::new()),
        })
    }

    pub fn state(&self) -> &SplitState<T> {
        &self.state
    }

    pub fn reduced_state(&self) -> &BlockDensityMatrix<T> {
        &self.rho_b
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn check_order(&self, order: usize) -> Result<()> {
        operator_count(order)?;
        if order > self.max_order {
            return Err(SteeringError::UnsupportedOrder(order));
        }
        Ok(())
    }

    fn stats_at(&self, phi: T) -> Result<AssemblageStats<T>> {
        let asm = measure_alice(&self.state, DirectionYZ::new(phi))?;
        AssemblageStats::new(&asm, self.max_order)
    }

    fn build_profile(&self, phi: f64) -> Result<AngleProfile<T>> {
        let stats = self.stats_at(T::lit(phi))?;
        let fisher = stats.conditional_covariance(1)? * T::lit(4.0);
        let mut moment = Vec::with_capacity(self.max_order);
        let mut reid = Vec::with_capacity(self.max_order);
        for order in 1..=self.max_order {
            moment.push(stats.conditional_moment(order)?);
            reid.push(stats.reid_moment(order, &self.reduced_comm)?);
        }
        Ok(AngleProfile {
            fisher,
            moment,
            reid,
        })
    }

    /// Profiles for `angles`, computing misses in parallel.
    fn profiles(&self, angles: &[f64]) -> Result<Vec<Arc<AngleProfile<T>>>> {
        let missing: Vec<f64> = {
            let memo = self.profiles.lock();
            let mut seen = std::collections::HashSet::new();
            angles
                .iter()
                .copied()
                .filter(|a| !memo.contains_key(&a.to_bits()) && seen.insert(a.to_bits()))
                .collect()
        };
        let built: Vec<(u64, AngleProfile<T>)> = missing
            .par_iter()
            .map(|&a| Ok((a.to_bits(), self.build_profile(a)?)))
            .collect::<Result<_>>()?;
        let mut memo = self.profiles.lock();
        for (k, p) in built {
            memo.entry(k).or_insert_with(|| Arc::new(p));
        }
        Ok(angles.iter().map(|a| memo[&a.to_bits()].clone()).collect())
    }

    fn pair_value(first: &DMatrix<T>, fisher_x: &DMatrix<T>) -> f64 {
        max_eigenvalue(&(first - fisher_x)).as_f64()
    }

    /// Best value over a rectangular grid of X and Y angles. Ties keep the
    /// lowest (x, y) index pair.
    fn grid_best(&self, kind: FirstKind, xs: &[f64], ys: &[f64]) -> Result<(Peak, Vec<Vec<f64>>)> {
        let px = self.profiles(xs)?;
        let py = self.profiles(ys)?;
        let table: Vec<Vec<f64>> = px
            .par_iter()
            .map(|p| {
                py.iter()
                    .map(|q| Self::pair_value(kind.pick(q), &p.fisher))
                    .collect()
            })
            .collect();
        let mut best = Peak {
            value: f64::NEG_INFINITY,
            phi_x: xs[0],
            phi_y: ys[0],
        };
        for (i, row) in table.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.value {
                    best = Peak {
                        value: v,
                        phi_x: xs[i],
                        phi_y: ys[j],
                    };
                }
            }
        }
        Ok((best, table))
    }

    fn search_pair(&self, kind: FirstKind, policy: &AngleSearchPolicy) -> Result<Peak> {
        policy.validate()?;
        let grid = policy.grid();
        let (_, table) = self.grid_best(kind, &grid, &grid)?;
        let g = grid.len();
        let mut maxima: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..g {
            for j in 0..g {
                let v = table[i][j];
                let mut is_max = true;
                'nb: for di in [g - 1, 0, 1] {
                    for dj in [g - 1, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        if table[(i + di) % g][(j + dj) % g] > v {
                            is_max = false;
                            break 'nb;
                        }
                    }
                }
                if is_max {
                    maxima.push((v, i, j));
                }
            }
        }
        maxima.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then((a.1, a.2).cmp(&(b.1, b.2))));
        maxima.truncate(REFINE_CANDIDATES);

        let mut overall: Option<Peak> = None;
        for &(v, i, j) in &maxima {
            let mut peak = Peak {
                value: v,
                phi_x: grid[i],
                phi_y: grid[j],
            };
            let mut half = policy.step();
            for _ in 0..policy.refine_rounds {
                let xs = local_axis(peak.phi_x, half);
                let ys = local_axis(peak.phi_y, half);
                let (cand, _) = self.grid_best(kind, &xs, &ys)?;
                if cand.value > peak.value {
                    peak = cand;
                }
                half *= policy.refine_shrink;
            }
            if overall.is_none_or(|o| peak.value > o.value) {
                overall = Some(peak);
            }
        }
        Ok(overall.expect("grid has at least one local maximum"))
    }

    fn search_single(&self, kind: FirstKind, policy: &AngleSearchPolicy) -> Result<(f64, f64)> {
        policy.validate()?;
        let grid = policy.grid();
        let profiles = self.profiles(&grid)?;
        let values: Vec<f64> = profiles
            .iter()
            .map(|p| max_eigenvalue(kind.pick(p)).as_f64())
            .collect();
        let g = grid.len();
        let mut maxima: Vec<(f64, usize)> = (0..g)
            .filter(|&i| values[i] >= values[(i + g - 1) % g] && values[i] >= values[(i + 1) % g])
            .map(|i| (values[i], i))
            .collect();
        maxima.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
        maxima.truncate(REFINE_CANDIDATES);
        let mut overall: Option<(f64, f64)> = None;
        for &(v, i) in &maxima {
            let mut best = (v, grid[i]);
            let mut half = policy.step();
            for _ in 0..policy.refine_rounds {
                let axis = local_axis(best.1, half);
                let ps = self.profiles(&axis)?;
                for (a, p) in axis.iter().zip(&ps) {
                    let val = max_eigenvalue(kind.pick(p)).as_f64();
                    if val > best.0 {
                        best = (val, *a);
                    }
                }
                half *= policy.refine_shrink;
            }
            if overall.is_none_or(|o| best.0 > o.0) {
                overall = Some(best);
            }
        }
        Ok(overall.expect("grid has at least one local maximum"))
    }

    fn finish(
        &self,
        criterion: CriterionId,
        order: usize,
        kind: FirstKind,
        peak: Peak,
        policy: &AngleSearchPolicy,
    ) -> Result<CriterionResult<T>> {
        let phi_x = policy.reduce(peak.phi_x);
        let phi_y = policy.reduce(peak.phi_y);
        let px = self.profiles(&[peak.phi_x])?;
        let py = self.profiles(&[peak.phi_y])?;
        let first = kind.pick(&py[0]);
        let second = &px[0].fisher;
        let (value, n_opt) = top_eigenpair(&(first - second));
        let first_term = quad(first, &n_opt);
        let second_term = quad(second, &n_opt);
        let m_opt = match kind {
            FirstKind::Fisher => MeasurementChoice::None,
            FirstKind::Moment(o) => {
                let phi = T::lit(peak.phi_y);
                let asm = measure_alice(&self.state, DirectionYZ::new(phi))?;
                let stats = AssemblageStats::new(&asm, o)?;
                let ms = stats.optimal_measurements(o, &n_opt)?;
                MeasurementChoice::PerOutcome(
                    asm.outcomes
                        .iter()
                        .zip(ms)
                        .map(|(out, coefficients)| OutcomeMeasurement {
                            n_a: out.n_a,
                            l_a: out.l_a,
                            coefficients,
                        })
                        .collect(),
                )
            }
            FirstKind::Reid(o) => {
                let stats = self.stats_at(T::lit(peak.phi_y))?;
                MeasurementChoice::Single(stats.reid_measurement(o, &self.reduced_comm, &n_opt)?)
            }
        };
        Ok(CriterionResult {
            criterion,
            order,
            value,
            phi_x: T::lit(phi_x),
            phi_y: T::lit(phi_y),
            n_opt,
            m_opt,
            first_term,
            second_term,
            gains: None,
        })
    }

    pub fn delta1(&self, policy: &AngleSearchPolicy) -> Result<CriterionResult<T>> {
        let peak = self.search_pair(FirstKind::Fisher, policy)?;
        self.finish(CriterionId::Delta1, 1, FirstKind::Fisher, peak, policy)
    }

    pub fn delta2(&self, x_order: usize, policy: &AngleSearchPolicy) -> Result<CriterionResult<T>> {
        self.check_order(x_order)?;
        let kind = FirstKind::Moment(x_order);
        let peak = self.search_pair(kind, policy)?;
        self.finish(CriterionId::Delta2, x_order, kind, peak, policy)
    }

    pub fn delta3(&self, x_order: usize, policy: &AngleSearchPolicy) -> Result<CriterionResult<T>> {
        self.check_order(x_order)?;
        let kind = FirstKind::Reid(x_order);
        let peak = self.search_pair(kind, policy)?;
        self.finish(CriterionId::Delta3, x_order, kind, peak, policy)
    }

    /// Criterion value at fixed Alice angles, without optimization.
    pub fn value_at(&self, criterion: CriterionId, order: usize, phi_x: f64, phi_y: f64) -> Result<T> {
        let kind = match criterion {
            CriterionId::Delta1 => FirstKind::Fisher,
            CriterionId::Delta2 => {
                self.check_order(order)?;
                FirstKind::Moment(order)
            }
            CriterionId::Delta3 => {
                self.check_order(order)?;
                FirstKind::Reid(order)
            }
            CriterionId::Delta4 => return Ok(self.delta4()?.value),
        };
        let px = self.profiles(&[phi_x])?;
        let py = self.profiles(&[phi_y])?;
        Ok(max_eigenvalue(&(kind.pick(&py[0]) - &px[0].fisher)))
    }

    /// Linear-estimate Reid criterion with the observables aligned to the
    /// squeezing frame: `H = S_{y'}^B`, `M = S_{z'}^B`, Alice measuring the
    /// same components.
    pub fn delta4(&self) -> Result<CriterionResult<T>> {
        let pm = PairMoments::new(&self.state);
        let theta_z = pm.squeezing_angle();
        let theta_y = (theta_z + PI / 2.0).rem_euclid(PI);
        let uz = [T::zero(), T::lit(theta_z.cos()), T::lit(theta_z.sin())];
        let uy = [T::zero(), T::lit(theta_y.cos()), T::lit(theta_y.sin())];

        for (name, v) in [
            ("S_y'^A", pm.mean_a(uy)),
            ("S_y'^B", pm.mean_b(uy)),
            ("S_z'^A", pm.mean_a(uz)),
            ("S_z'^B", pm.mean_b(uz)),
        ] {
            if v.abs() > T::tol(UNBIASED_TOL) {
                return Err(SteeringError::Numerical(format!(
                    "linear estimator is biased: <{name}> = {v}"
                )));
            }
        }

        let (vay, vby, cy) = pm.second_moments(uy);
        let (vaz, vbz, cz) = pm.second_moments(uz);
        if vay <= T::zero() || vaz <= T::zero() {
            return Err(SteeringError::Numerical("vanishing local variance on Alice's side".into()));
        }
        let g_y = cy / vay;
        let g_z = -cz / vaz;
        // Var[g A + s B] = g² V_A + 2 g s Cov + V_B
        let var_z = g_z * g_z * vaz + T::lit(2.0) * g_z * cz + vbz;
        let var_y = g_y * g_y * vay - T::lit(2.0) * g_y * cy + vby;
        if var_z <= T::zero() {
            return Err(SteeringError::Numerical("vanishing inferred variance".into()));
        }
        let sx_b = pm.mean_b([T::one(), T::zero(), T::zero()]);
        let first_term = sx_b * sx_b / var_z;
        let second_term = T::lit(4.0) * var_y;
        Ok(CriterionResult {
            criterion: CriterionId::Delta4,
            order: 1,
            value: first_term - second_term,
            phi_x: T::lit(theta_y),
            phi_y: T::lit(theta_z),
            n_opt: DVector::from_vec(uy.to_vec()),
            m_opt: MeasurementChoice::Single(DVector::from_vec(uz.to_vec())),
            first_term,
            second_term,
            gains: Some((g_y, g_z)),
        })
    }

    pub fn evaluate(&self, criterion: CriterionId, order: usize, policy: &AngleSearchPolicy) -> Result<CriterionResult<T>> {
        match criterion {
            CriterionId::Delta1 => self.delta1(policy),
            CriterionId::Delta2 => self.delta2(order, policy),
            CriterionId::Delta3 => self.delta3(order, policy),
            CriterionId::Delta4 => self.delta4(),
        }
    }

    pub fn first_terms(&self, orders: &[usize], policy: &AngleSearchPolicy) -> Result<FirstTerms<T>> {
        let to_max = |(v, phi): (f64, f64)| AngleMax {
            value: T::lit(v),
            phi: T::lit(policy.reduce(phi)),
        };
        let fisher = to_max(self.search_single(FirstKind::Fisher, policy)?);
        let mut moment = Vec::new();
        let mut reid = Vec::new();
        for &o in orders {
            self.check_order(o)?;
            moment.push((o, to_max(self.search_single(FirstKind::Moment(o), policy)?)));
            reid.push((o, to_max(self.search_single(FirstKind::Reid(o), policy)?)));
        }
        Ok(FirstTerms {
            fisher,
            moment,
            reid,
        })
    }

    pub fn hierarchy_check(&self, orders: &[usize], policy: &AngleSearchPolicy) -> Result<HierarchyReport<T>> {
        let mut orders = orders.to_vec();
        orders.sort_unstable();
        orders.dedup();
        if !orders.contains(&1) {
            orders.insert(0, 1);
        }
        let d1 = self.delta1(policy)?;
        let d2: Vec<CriterionResult<T>> = orders
            .iter()
            .map(|&o| self.delta2(o, policy))
            .collect::<Result<_>>()?;
        let d3: Vec<CriterionResult<T>> = orders
            .iter()
            .map(|&o| self.delta3(o, policy))
            .collect::<Result<_>>()?;
        let d4 = self.delta4()?;

        let mut checks = Vec::new();
        let mut push = |name: String, larger: T, smaller: T| {
            let slack = HIERARCHY_SLACK
                * 1f64.max(larger.as_f64().abs()).max(smaller.as_f64().abs());
            checks.push(HierarchyCheck {
                name,
                larger: larger.as_f64(),
                smaller: smaller.as_f64(),
                slack,
                passed: larger.as_f64() + slack >= smaller.as_f64(),
            });
        };
        for (a, b) in d2.iter().zip(&d3) {
            push(format!("delta1 >= delta2({})", a.order), d1.value, a.value);
            push(format!("delta2({0}) >= delta3({0})", a.order), a.value, b.value);
            push(format!("delta1 >= delta3({})", b.order), d1.value, b.value);
        }
        for w in d2.windows(2) {
            push(format!("delta2({}) >= delta2({})", w[1].order, w[0].order), w[1].value, w[0].value);
        }
        for w in d3.windows(2) {
            push(format!("delta3({}) >= delta3({})", w[1].order, w[0].order), w[1].value, w[0].value);
        }
        push("delta3(1) >= delta4".into(), d3[0].value, d4.value);

        let mut results = vec![d1];
        results.extend(d2);
        results.extend(d3);
        results.push(d4);
        Ok(HierarchyReport {
            n_atoms: self.state.n_atoms(),
            mu: self.state.mu(),
            results,
            checks,
        })
    }
}

/// One inequality of the hierarchy: `larger + slack ≥ smaller`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyCheck {
    pub name: String,
    pub larger: f64,
    pub smaller: f64,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyReport<T: Real> {
    pub n_atoms: usize,
    pub mu: T,
    pub results: Vec<CriterionResult<T>>,
    pub checks: Vec<HierarchyCheck>,
}

impl<T: Real> HierarchyReport<T> {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn value(&self, criterion: CriterionId, order: usize) -> Option<T> {
        self.results
            .iter()
            .find(|r| r.criterion == criterion && (r.order == order || !criterion.has_order()))
            .map(|r| r.value)
    }
}

fn local_axis(center: f64, half: f64) -> Vec<f64> {
    let r = REFINE_HALF_POINTS as i64;
    (-r..=r)
        .map(|k| center + half * k as f64 / r as f64)
        .collect()
}

fn quad<T: Real>(m: &DMatrix<T>, v: &DVector<T>) -> T {
    (v.transpose() * m * v)[(0, 0)]
}

/// First and second moments of local collective spins on the bipartite state.
struct PairMoments<'a, T: Real> {
    state: &'a SplitState<T>,
    spins: Vec<SpinMatrices<T>>,
}

impl<'a, T: Real> PairMoments<'a, T> {
    fn new(state: &'a SplitState<T>) -> Self {
        let spins = (0..=state.n_atoms())
            .map(|n| spin_matrices::<T>(DickeSpace::new(n)))
            .collect();
        Self { state, spins }
    }

    fn along(&self, n: usize, u: [T; 3]) -> DMatrix<Complex<T>> {
        self.spins[n].along(u).into_matrix()
    }

    fn expect(&self, alice: impl Fn(usize) -> DMatrix<Complex<T>>, bob: impl Fn(usize) -> DMatrix<Complex<T>>) -> T {
        let a: Vec<_> = (0..=self.state.n_atoms()).map(&alice).collect();
        let b: Vec<_> = (0..=self.state.n_atoms()).map(&bob).collect();
        self.state.bipartite_expectation(|n| &a[n], |n| &b[n]).re
    }

    fn identity(n: usize) -> DMatrix<Complex<T>> {
        DMatrix::identity(n + 1, n + 1)
    }

    fn mean_a(&self, u: [T; 3]) -> T {
        self.expect(|n| self.along(n, u), Self::identity)
    }

    fn mean_b(&self, u: [T; 3]) -> T {
        self.expect(Self::identity, |n| self.along(n, u))
    }

    /// `(Var S_u^A, Var S_u^B, Cov(S_u^A, S_u^B))`.
    fn second_moments(&self, u: [T; 3]) -> (T, T, T) {
        let sq = |n: usize| {
            let m = self.along(n, u);
            &m * &m
        };
        let (ma, mb) = (self.mean_a(u), self.mean_b(u));
        let va = self.expect(sq, Self::identity) - ma * ma;
        let vb = self.expect(Self::identity, sq) - mb * mb;
        let c = self.expect(|n| self.along(n, u), |n| self.along(n, u)) - ma * mb;
        (va, vb, c)
    }

    /// Angle in `[0, π)` of the minimum-variance direction of the total spin
    /// in the yz-plane. Isotropic states return `π/2` (the z axis).
    fn squeezing_angle(&self) -> f64 {
        let y = [T::zero(), T::one(), T::zero()];
        let z = [T::zero(), T::zero(), T::one()];
        let diag = |u: [T; 3]| {
            let (va, vb, c) = self.second_moments(u);
            va + vb + T::lit(2.0) * c
        };
        let vyy = diag(y);
        let vzz = diag(z);
        // Var(S_y + S_z) on the diagonal direction gives the cross term.
        let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let vd = diag([T::zero(), s, s]);
        let cyz = vd - (vyy + vzz) / T::lit(2.0);
        let gamma = DMatrix::from_row_slice(2, 2, &[vyy, cyz, cyz, vzz]);
        let (vals, vecs) = symmetric_eigh(&gamma);
        let scale = vals[1].abs().max(T::one());
        if vals[1] - vals[0] < T::tol(1e-12) * scale {
            return PI / 2.0;
        }
        let u = &vecs[0];
        u[1].as_f64().atan2(u[0].as_f64()).rem_euclid(PI)
    }
}

pub fn delta1<T: Real>(state: &SplitState<T>, policy: &AngleSearchPolicy) -> Result<CriterionResult<T>> {
    SteeringAnalysis::new(state.clone(), 1)?.delta1(policy)
}

pub fn delta2<T: Real>(state: &SplitState<T>, x_order: usize, policy: &AngleSearchPolicy) -> Result<CriterionResult<T>> {
    SteeringAnalysis::new(state.clone(), x_order)?.delta2(x_order, policy)
}

pub fn delta3<T: Real>(state: &SplitState<T>, x_order: usize, policy: &AngleSearchPolicy) -> Result<CriterionResult<T>> {
    SteeringAnalysis::new(state.clone(), x_order)?.delta3(x_order, policy)
}

pub fn delta4<T: Real>(state: &SplitState<T>) -> Result<CriterionResult<T>> {
    SteeringAnalysis::new(state.clone(), 1)?.delta4()
}

pub fn first_terms<T: Real>(state: &SplitState<T>, orders: &[usize], policy: &AngleSearchPolicy) -> Result<FirstTerms<T>> {
    let max = orders.iter().copied().max().unwrap_or(1);
    SteeringAnalysis::new(state.clone(), max)?.first_terms(orders, policy)
}

pub fn hierarchy_check<T: Real>(state: &SplitState<T>, orders: &[usize], policy: &AngleSearchPolicy) -> Result<HierarchyReport<T>> {
    let max = orders.iter().copied().max().unwrap_or(1);
    SteeringAnalysis::new(state.clone(), max)?.hierarchy_check(orders, policy)
}
