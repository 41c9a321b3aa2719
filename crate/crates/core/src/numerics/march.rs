//! Explicit Heun (trapezoidal predictor-corrector) marching for systems of
//! first-order transport equations on a (z, z') grid.
//!
//! The systems handled here are causal in the anti-diagonal ordering: the
//! value at node (i, j) depends only on nodes with a smaller index sum, so a
//! single sweep in wavefront order suffices.

use crate::linalg::PairField;
use crate::numerics::TwoPointGrid;
use crate::{Error, Result};

/// Transport direction of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    /// d/dz at fixed z'; values imposed on the z = 0 edge.
    Z,
    /// d/dz' at fixed z; values imposed on the z' = 0 edge.
    ZPrime,
    /// d/dz + d/dz' along the grid diagonal; values imposed on both edges.
    Diagonal,
}

impl Direction {
    fn imposed(&self, i: usize, j: usize) -> bool {
        match self {
            Direction::Z => i == 0,
            Direction::ZPrime => j == 0,
            Direction::Diagonal => i == 0 || j == 0,
        }
    }

    fn upwind(&self, i: usize, j: usize) -> (usize, usize) {
        match self {
            Direction::Z => (i - 1, j),
            Direction::ZPrime => (i, j - 1),
            Direction::Diagonal => (i - 1, j - 1),
        }
    }
}

/// A coupled system of `NF` pair-amplitude fields transported across the
/// grid.  The right-hand side is local: it sees only the node coordinates and
/// the field values at that node.
pub trait TransportSystem<const NF: usize> {
    fn direction(&self, field: usize) -> Direction;

    /// Imposed value of `field` on its inflow edge.
    fn boundary(&self, field: usize, i: usize, j: usize) -> PairField;

    /// Derivatives of all fields along their characteristics at node (i, j).
    fn rhs(&self, i: usize, j: usize, values: &[PairField; NF]) -> [PairField; NF];
}

/// Marches the system across the grid in wavefront order and returns the
/// node-major field array (index `i * n + j`).
///
/// Each field advances along its own characteristic with a Heun step; the
/// corrector evaluates the right-hand side at the target node using the
/// predicted values of every field.  Aborts if a non-finite value appears.
pub fn march_transport<S, const NF: usize>(
    sys: &S,
    grid: &TwoPointGrid,
) -> Result<Vec<[PairField; NF]>>
where
    S: TransportSystem<NF>,
{
    let n = grid.n;
    let h = grid.h;
    let mut values = vec![[PairField::zeros(); NF]; grid.node_count()];

    for wave in 0..=(2 * (n - 1)) {
        let i_lo = wave.saturating_sub(n - 1);
        let i_hi = wave.min(n - 1);
        for i in i_lo..=i_hi {
            let j = wave - i;
            let mut committed = [PairField::zeros(); NF];
            let mut predicted = [PairField::zeros(); NF];
            let mut slope_at_upwind = [PairField::zeros(); NF];
            let mut marched = [false; NF];

            for f in 0..NF {
                let dir = sys.direction(f);
                if dir.imposed(i, j) {
                    let bc = sys.boundary(f, i, j);
                    committed[f] = bc;
                    predicted[f] = bc;
                } else {
                    let (ui, uj) = dir.upwind(i, j);
                    let upwind = &values[grid.idx(ui, uj)];
                    let slopes = sys.rhs(ui, uj, upwind);
                    slope_at_upwind[f] = slopes[f];
                    predicted[f] = upwind[f] + slopes[f] * h;
                    marched[f] = true;
                }
            }

            let corrector = sys.rhs(i, j, &predicted);
            for f in 0..NF {
                if marched[f] {
                    let (ui, uj) = sys.direction(f).upwind(i, j);
                    let upwind = values[grid.idx(ui, uj)][f];
                    committed[f] = upwind + (slope_at_upwind[f] + corrector[f]) * (0.5 * h);
                }
                if !committed[f].is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
            }
            values[grid.idx(i, j)] = committed;
        }
    }
    Ok(values)
}
