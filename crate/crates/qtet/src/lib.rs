//! Computation and verification kernel for quantum 6j-symbols at odd roots of
//! unity, the hyperbolic geometry of deeply truncated tetrahedra, discrete
//! Fourier transforms of the associated invariants, their large-r asymptotics,
//! and Gram-determinant torsion formulas.
//!
//! Numeric conventions used throughout:
//! - magnitudes that overflow f64 are carried as [`scaled::ScaledComplex`]
//!   (natural-log magnitude plus phase);
//! - complex logarithms and square roots are principal-branch unless a
//!   function documents otherwise;
//! - angles are radians; the deformation parameter is always `q = e^{2·pi·i/r}`
//!   with odd `r >= 3`.

pub mod asymptotics;
pub mod dft;
pub mod error;
pub mod geometry;
pub mod qdilog;
pub mod qkernel;
pub mod scaled;
pub mod torsion;

pub use error::{Error, Result};
pub use scaled::{ScaledAccumulator, ScaledComplex};
