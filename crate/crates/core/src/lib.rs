//! EPR-steering witnesses for split one-axis-twisted spin ensembles.
//!
//! The crate builds the split state, derives the assemblages produced by
//! Alice's yz-plane spin measurements and evaluates four steering criteria:
//! the Fisher-information criterion, the conditional spin-squeezing
//! criterion (optionally with quadratic and cubic measurement sets), the
//! general Reid criterion and the linear-estimate Reid criterion.
//!
//! All numerical types are generic over [`Real`]; the `*64` aliases below
//! fix the scalar to `f64`, which is what the tolerances are calibrated for.

pub mod assemblage;
pub mod criteria;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod spin;
pub mod state;

pub use assemblage::{
    commutator_matrix, conditional_covariance, conditional_moment, covariance_matrix,
    measure_alice, moment_matrix, reduced_commutator, reid_moment, Assemblage, AssemblageStats,
    CommMatrix, CovMatrix, MomentMatrix, Outcome, StateRef,
};
pub use criteria::{
    delta1, delta2, delta3, delta4, first_terms, hierarchy_check, AngleSearchPolicy,
    AngleMax, CriterionId, CriterionResult, FirstTerms, HierarchyReport, MeasurementChoice,
    SteeringAnalysis,
};
pub use error::{Result, SteeringError};
pub use scalar::{Complex, Real};
pub use spin::{
    measurement_eigenbasis, operator_set, spin_matrices, DickeSpace, DirectionYZ, HermitianOp,
    MeasurementEigenbasis, OperatorBasis,
};
pub use state::{
    collective_generator, mixed_state_qfi, mixed_state_qfi_along, oat_state, reduced_state_b,
    split_state, BlockDensityMatrix, DensityBlock, OatState, SplitState,
};

pub type SplitState64 = SplitState<f64>;
pub type Assemblage64 = Assemblage<f64>;
pub type BlockDensityMatrix64 = BlockDensityMatrix<f64>;
pub type CriterionResult64 = CriterionResult<f64>;
pub type SteeringAnalysis64 = SteeringAnalysis<f64>;
pub type HermitianOp64 = HermitianOp<f64>;
