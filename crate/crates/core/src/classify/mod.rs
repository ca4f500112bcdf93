//! Existence and uniqueness of equivariant homomorphisms with prescribed
//! K-data, candidate search, and finite-depth intertwining of towers.

mod intertwine;
mod ksearch;
mod lift;
mod uniqueness;

pub use intertwine::{intertwine, verify_certificate, CorrectedHom, IntertwiningCertificate, PairSource};
pub use ksearch::ksearch;
pub use lift::{lift, lift_with, LiftOrder};
pub use uniqueness::{equiv_unitary, verify_equivalence, UniquenessWitness, WitnessBlock};

use thiserror::Error;

use crate::kinv::{KPair, KinvError};
use crate::matrix::MatrixError;
use crate::report::Report;
use crate::system::HomError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("the pair does not satisfy the invariant conditions:\n{0}")]
    PairCheckFailed(Report),
    #[error("source piece {source_piece} into target piece {target_piece}: {detail}")]
    CaseShapeViolation { source_piece: usize, target_piece: usize, detail: String },
    #[error("target block {block}: {detail}")]
    PackingInfeasible { block: usize, detail: String },
    #[error("sqrt({p}) is not in Q(zeta_{order}); use a field order divisible by {needed}")]
    FieldTooSmall { p: u32, order: u32, needed: u32 },
    #[error("constructed homomorphism failed validation:\n{0}")]
    InvalidHom(Report),
    #[error("constructed homomorphism induces {found:?} instead of {expected:?}")]
    RoundTrip { expected: KPair, found: KPair },
    #[error("the homomorphisms have different K-data: {first:?} vs {second:?}")]
    KDataMismatch { first: KPair, second: KPair },
    #[error("target block {block}: no unitary intertwiner with entries in the field")]
    UnitaryNotFoundInField { block: usize },
    #[error("constructed unitary failed its checks:\n{0}")]
    WitnessFailed(Report),
    #[error("no stage within depth makes the square commute at step {stage}: {detail}")]
    ReindexFailed { stage: usize, detail: String },
    #[error("lift failed at stage {stage}: {error}")]
    LiftFailed { stage: usize, error: Box<ClassifyError> },
    #[error("correction failed at stage {stage}: {error}")]
    CorrectionFailed { stage: usize, error: Box<ClassifyError> },
    #[error("invalid tower: {0}")]
    InvalidTower(String),
    #[error(transparent)]
    Kinv(#[from] KinvError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}
