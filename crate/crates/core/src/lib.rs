//! Rain-streak removal for video volumes.
//!
//! The background `B` and the rain layer `R` of an observed volume `O` are
//! separated by minimising
//!
//! ```text
//! α1‖∇1 R‖1 + α2‖R‖1 + α3‖∇2 B‖1 + α4‖∇t B‖1 + ½‖O − B − R‖F²
//! subject to 0 ≤ B ≤ O, 0 ≤ R ≤ O
//! ```
//!
//! with a split augmented Lagrangian iteration ([`solver`]). Oblique streaks
//! are first measured ([`geometry::detect_angle`]) and then made near-vertical
//! by an exactly invertible row-shift ([`geometry::ShiftPlan`]).
//!
//! The crate is `no_std` and only needs `alloc`. The quadratic sub-problems
//! are diagonalised by a 3-D DFT supplied through the [`spectral::Fft3`]
//! trait; [`spectral::DirectDft3`] is a dependency-free reference backend,
//! and the `fastderain` companion crate provides an FFT-backed one.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diffops;
mod error;
pub mod geometry;
pub mod metrics;
pub mod shrinkage;
pub mod solver;
pub mod spectral;
pub mod synth;
pub mod tensor;

pub use diffops::Axis;
pub use error::{Error, Result};
pub use shrinkage::ShrinkMode;
pub use solver::{DerainResult, DerainSolver, DerainState, IterationRecord, SolverParams};
pub use tensor::{ColorVideo, Dims, Plane, Tensor3};
