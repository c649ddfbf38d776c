//! Numerical laboratory for the bosonic convolution calculus.
//!
//! States live in a truncated Fock basis (photon numbers `0..=N`). Two-mode
//! intermediates are truncated by *total* photon number, which keeps the
//! beam-splitter unitary exactly unitary on the workspace. On top of that
//! layer the crate provides quantum, classical and mixed convolutions, the
//! heat semigroup, Kubo–Mori–Bogoliubov and linear-family Fisher
//! informations, the symmetric lifting machinery, and margin-reporting
//! checks for the entropy power and Fisher–Stam type inequalities.

pub mod classical;
pub mod convolution;
mod error;
pub mod fockspace;
pub mod inequalities;
pub mod information;
pub mod liftproof;
pub mod linalg;
pub mod quadrature;
pub mod runner;
pub mod subset;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;

pub use classical::ClassicalRV;
pub use fockspace::{DensityMatrix, FockOperator, StateFamily};
pub use information::InnerProductSpec;
pub use subset::Subset;

