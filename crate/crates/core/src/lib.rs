//! Computational toolkit for unitarily invariant complete Nevanlinna-Pick
//! spaces on the unit ball of `C^d`.
//!
//! A kernel `K(z, w) = Σ a_n ⟨z, w⟩^n` is described by its coefficient
//! sequence ([`series::CoefficientSequence`]). From it the crate derives the
//! Nevanlinna-Pick coefficients `b_n` of `1 - 1/K`, certifies the complete
//! Nevanlinna-Pick property at a finite truncation, solves Pick feasibility
//! problems, embeds the ball into Drury-Arveson space, restricts to
//! homogeneous varieties, computes graded multiplier norms, and decides
//! isomorphism questions for restricted multiplier algebras.

pub mod cli;
pub mod embed;
pub mod equiv;
pub mod error;
pub mod linalg;
pub mod moebius;
pub mod multop;
pub mod number;
pub mod pick;
pub mod poly;
pub mod report;
pub mod series;
pub mod variety;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// A point of `C^d`.
pub type Point = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
