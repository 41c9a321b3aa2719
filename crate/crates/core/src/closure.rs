//! Algebraic elimination of the double-Rydberg amplitude Phi_ss.
//!
//! The steady-state constraint coupling Phi_ss to the photon-Rydberg
//! amplitudes is, with W_{j,m} = dtilde_m^{-1} v_{j,m},
//!
//! ```text
//! (W Phi_ss + Phi_ss W^T) - 2 V Phi_ss = -(W Phi_Es + Phi_sE W^T)
//! ```
//!
//! Splitting the solution as Phi_ss = X + Y - Phi_plus decouples it into a
//! part X driven by the antisymmetric combination, which has a closed form,
//! and a part Y driven by the symmetric combination, expressed through the
//! 4x4 coefficient matrix A obtained from a linear solve.  In the strong
//! blockade limit V -> inf the coefficients reduce to the identity and
//! Phi_ss -> 0.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::linalg::{Mat2, Mat4, PairField, C64, ONE, ZERO};
use crate::model::{DerivedContext, Potential};
use crate::{Error, Result};

/// Condition number above which the 4x4 closure solve carries no significant
/// digits in double precision.
const CONDITION_LIMIT: f64 = 1e12;

/// The 4x4 map A_{j,l;m,n} from symmetric combinations to the interacting
/// part of Phi_ss, together with the interaction value it was computed at.
#[derive(Debug, Clone, Copy)]
pub struct ClosureCoefficients {
    pub a: Mat4,
    pub interaction: Potential,
}

/// Symmetric/antisymmetric combinations: `plus = (es + se)/2`,
/// `minus = (es - se)/2`.
pub fn split_sym_antisym(es: &PairField, se: &PairField) -> (PairField, PairField) {
    let plus = (*es + *se).scale(C64::new(0.5, 0.0));
    let minus = (*es - *se).scale(C64::new(0.5, 0.0));
    (plus, minus)
}

/// Weighted velocity matrix W_{j,m} = dtilde_m^{-1} v_{j,m}.
pub(crate) fn weighted_velocity(ctx: &DerivedContext) -> Mat2 {
    let d1 = ONE / ctx.dtilde1;
    let d2 = ONE / ctx.dtilde2;
    Mat2::new(
        ctx.v.get(0, 0) * d1,
        ctx.v.get(0, 1) * d2,
        ctx.v.get(1, 0) * d1,
        ctx.v.get(1, 1) * d2,
    )
}

/// Shared denominator `tr(W) - 2 V`.
fn denominator(w: &Mat2, vr: f64) -> C64 {
    w.trace() - C64::new(2.0 * vr, 0.0)
}

/// Closed-form part of Phi_ss driven by the antisymmetric combination:
///
/// ```text
/// X = (minus W^T - W minus) / (tr(W) - 2 V)
/// ```
///
/// For the infinite-interaction sentinel X vanishes.
pub fn compute_x(minus: &PairField, ctx: &DerivedContext, vr: Potential) -> PairField {
    let vr = match vr {
        Potential::Infinite => return PairField::zeros(),
        Potential::Finite(v) => v,
    };
    let w = weighted_velocity(ctx);
    let num = minus.right_mul_transpose(&w) - minus.left_mul(&w);
    num.scale(ONE / denominator(&w, vr))
}

/// Coefficients A such that `Y = -(2V / (tr(W) - 2V)) * A * plus` solves the
/// symmetric part of the constraint for every right-hand side.
///
/// Computed by solving the 4x4 operator `M Y = W Y + Y W^T - 2 V Y` against
/// the four unit right-hand sides; `A = (tr(W) - 2V) M^{-1}`.  Errors out
/// when the operator's condition number exceeds 1e12.
pub fn compute_a(ctx: &DerivedContext, vr: Potential) -> Result<ClosureCoefficients> {
    let v = match vr {
        Potential::Infinite => {
            return Ok(ClosureCoefficients {
                a: Mat4::identity(),
                interaction: vr,
            });
        }
        Potential::Finite(v) => v,
    };
    let w = weighted_velocity(ctx);
    let mut m = Mat4::zeros();
    // M[(j,l);(m,n)] = W_{j,m} d_{l,n} + W_{l,n} d_{j,m} - 2V d_{j,m} d_{l,n}
    for j in 0..2 {
        for l in 0..2 {
            let row = 2 * j + l;
            for mm in 0..2 {
                for n in 0..2 {
                    let col = 2 * mm + n;
                    let mut entry = ZERO;
                    if l == n {
                        entry += w.get(j, mm);
                    }
                    if j == mm {
                        entry += w.get(l, n);
                    }
                    if row == col {
                        entry -= C64::new(2.0 * v, 0.0);
                    }
                    m.e[row][col] = entry;
                }
            }
        }
    }
    let d = denominator(&w, v);
    let m_inv = m
        .solve_matrix(&Mat4::identity())
        .map_err(|_| Error::SingularClosure {
            condition: f64::INFINITY,
        })?;
    let condition = m.norm_inf() * m_inv.norm_inf();
    if condition > CONDITION_LIMIT {
        return Err(Error::SingularClosure { condition });
    }
    let mut a = m_inv;
    for row in a.e.iter_mut() {
        for entry in row.iter_mut() {
            *entry *= d;
        }
    }
    Ok(ClosureCoefficients { a, interaction: vr })
}

/// Interacting part of Phi_ss driven by the symmetric combination.
pub fn compute_y(plus: &PairField, ctx: &DerivedContext, coeff: &ClosureCoefficients) -> PairField {
    match coeff.interaction {
        // Blockade limit: Y -> plus.
        Potential::Infinite => *plus,
        Potential::Finite(v) => {
            if v == 0.0 {
                return PairField::zeros();
            }
            let w = weighted_velocity(ctx);
            let pref = -C64::new(2.0 * v, 0.0) / denominator(&w, v);
            coeff.a.apply(plus).scale(pref)
        }
    }
}

/// Full elimination `Phi_ss = X + Y - plus` at one interaction value, with the
/// coefficient matrix computed on the fly.
pub fn solve_phi_ss(
    es: &PairField,
    se: &PairField,
    ctx: &DerivedContext,
    vr: Potential,
) -> Result<PairField> {
    let coeff = compute_a(ctx, vr)?;
    Ok(solve_phi_ss_with(es, se, ctx, &coeff))
}

/// Same as [`solve_phi_ss`], reusing precomputed coefficients (they depend
/// only on the context and the interaction value, so solvers cache them per
/// grid radius).
pub fn solve_phi_ss_with(
    es: &PairField,
    se: &PairField,
    ctx: &DerivedContext,
    coeff: &ClosureCoefficients,
) -> PairField {
    let (plus, minus) = split_sym_antisym(es, se);
    let x = compute_x(&minus, ctx, coeff.interaction);
    let y = compute_y(&plus, ctx, coeff);
    x + y - plus
}

/// Read-mostly cache of closure coefficients keyed by grid radius index.
///
/// Entries are computed once per (context, radius) and shared by concurrent
/// solver runs; inserts are atomic behind the lock.
pub struct CoefficientCache {
    entries: RwLock<HashMap<u64, ClosureCoefficients>>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        CoefficientCache {
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn get_or_compute(
        &self,
        key: u64,
        ctx: &DerivedContext,
        vr: Potential,
    ) -> Result<ClosureCoefficients> {
        if let Some(hit) = self.entries.read().unwrap().get(&key) {
            return Ok(*hit);
        }
        let computed = compute_a(ctx, vr)?;
        self.entries.write().unwrap().entry(key).or_insert(computed);
        Ok(computed)
    }
}

impl Default for CoefficientCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Residual of the original algebraic constraint for a candidate Phi_ss,
/// normalized by the largest field magnitude involved.  Used by tests and by
/// callers wanting a self-check; the infinite-interaction case checks the
/// limit form `Phi_ss = 0`.
pub fn constraint_residual(
    es: &PairField,
    se: &PairField,
    ss: &PairField,
    ctx: &DerivedContext,
    vr: Potential,
) -> f64 {
    let scale = es
        .norm_max()
        .max(se.norm_max())
        .max(ss.norm_max())
        .max(f64::MIN_POSITIVE);
    let v = match vr {
        Potential::Infinite => return ss.norm_max() / scale,
        Potential::Finite(v) => v,
    };
    let w = weighted_velocity(ctx);
    let lhs = (*es + *ss).left_mul(&w) + (*se + *ss).right_mul_transpose(&w)
        - ss.scale(C64::new(2.0 * v, 0.0));
    lhs.norm_max() / scale
}
