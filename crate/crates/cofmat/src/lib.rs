//! Cosine and sine operator families of block operator matrices, at desk scale.
//!
//! Everything here is dense, finite-dimensional and deterministic: matrix
//! trigonometric kernels ([`funcalc`]), triangular and fully coupled block
//! assemblies ([`blockops`]), finite-difference model operators ([`discrete`]),
//! boundary problems with dynamic boundary conditions ([`ibvp`]), overdamped
//! second-order problems ([`damped`]), and the numerical instruments that check
//! them ([`diagnostics`]).

pub mod blockops;
pub mod damped;
pub mod diagnostics;
pub mod discrete;
pub mod ensemble;
pub mod error;
pub mod funcalc;
pub mod ibvp;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod space;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use space::GradedSpace;
