//! Steady-state propagation of two-excitation wave functions for spinor slow
//! light in a Rydberg-EIT medium.
//!
//! The library works throughout in dimensionless units: the intermediate-state
//! decay rate is Gamma = 1, lengths are measured in resonant absorption
//! lengths, and velocities in absorption lengths per decay time.  In these
//! units the photon-atom coupling drops out of every equation and a medium of
//! optical depth `alpha` has length `alpha`.
//!
//! Modules:
//! - [`linalg`]: complex 2x2 / 4x4 matrices and the pair-amplitude type.
//! - [`model`]: physical parameters and derived quantities.
//! - [`closure`]: algebraic elimination of the double-Rydberg amplitude.
//! - [`numerics`]: transport marcher, implicit stepper, convergence tools.
//! - [`fullsolve`]: the full (z, z') steady-state system.
//! - [`equalsolve`]: the closed equal-detuning equation and G2 sweeps.
//! - [`ladder2`]: the double-ladder reduction.

pub mod closure;
pub mod equalsolve;
pub mod fullsolve;
pub mod ladder2;
pub mod linalg;
pub mod model;
pub mod numerics;

use thiserror::Error;

/// Errors shared by parameter validation and the solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("closure system is numerically singular (condition number {condition:.3e})")]
    SingularClosure { condition: f64 },

    #[error("singular pivot block in row {row} of banded solve")]
    SingularPivot { row: usize },

    #[error("non-finite field value at grid node ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("grid too coarse: {message}")]
    GridRefinement { message: String },

    #[error("solution norm grew by {growth:.3e}x; refine the grid steps")]
    Unstable { growth: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
