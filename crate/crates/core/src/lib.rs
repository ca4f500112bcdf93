//! Exact classification machinery for Z/pZ actions on finite-dimensional
//! C*-algebras and on truncated AF towers.
//!
//! All arithmetic happens in the cyclotomic field Q(ζ_N) with arbitrary
//! precision rationals; nothing in a decision path uses floating point.

pub mod classify;
pub mod crossed;
pub mod cyclo;
pub mod kinv;
pub mod matrix;
pub mod report;
pub mod system;
pub mod towers;
pub mod wire;

pub use crossed::{CrossedElement, CrossedPresentation};
pub use cyclo::{FieldContext, Rational, Scalar};
pub use kinv::{KInvariant, KPair};
pub use matrix::Mat;
pub use report::{Report, Violation};
pub use system::{CanonicalForm, CanonicalSystem, EqHom, FdSystem, Piece, Slot, TargetBlock};
pub use towers::Tower;
