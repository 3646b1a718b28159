//! Sparse point-source localisation over discrete Radon measures.

pub mod algorithms;
pub mod experiment;
pub mod forward;
pub mod harness;
pub mod inner;
pub mod kernels;
pub mod measures;
pub mod verify;

/// A point in ℝᴺ.
pub type Loc<const N: usize> = [f64; N];
