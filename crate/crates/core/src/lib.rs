//! Numerical toolkit for commuting tuples of contraction matrices.
//!
//! The crate classifies tuples (pure, Szegő, Beurling), computes their defect
//! operators, builds truncated Hardy-space models for inner symbols, realizes
//! the canonical dilation into a vector-valued Hardy space and evaluates the
//! characteristic function of a Beurling tuple.
//!
//! Indices are 0-based throughout: `T_0, ..., T_{n-1}`.

pub mod battery;
pub mod charfn;
pub mod defects;
pub mod dilation;
pub mod hardy;
pub mod io;
pub mod numerics;
pub mod random;
pub mod tuples;

pub use numerics::{CMatrix, CVector, Subspace, Tolerances};
pub use tuples::CTuple;
