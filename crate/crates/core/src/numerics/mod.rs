//! Shared numerical kernels: the wavefront transport marcher for the causal
//! (z, z') systems, the implicit trapezoidal stepper with its block
//! tridiagonal solver, and grid-convergence estimation.

mod convergence;
mod march;
mod stepper;

pub use convergence::{estimate_order, ConvergenceReport};
pub use march::{march_transport, Direction, TransportSystem};
pub use stepper::{
    block_tridiagonal_solve, implicit_step, BandedBlockSystem, BlockTridiagonalOp, CrankNicolson,
};

use crate::{Error, Result};

/// Uniform square grid over (z, z') in [0, extent]^2 with n nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointGrid {
    pub n: usize,
    pub h: f64,
    pub extent: f64,
}

impl TwoPointGrid {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", "need at least 2 nodes per axis"));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::invalid("extent", "must be positive"));
        }
        Ok(TwoPointGrid {
            n,
            h: extent / (n - 1) as f64,
            extent,
        })
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n
    }
}
