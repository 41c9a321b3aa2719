//! Full steady-state system on the (z, z') grid: Phi_Es transported along z,
//! Phi_sE along z', Phi_EE along the diagonal, with the double-Rydberg
//! amplitude eliminated pointwise by the closure algebra.
//!
//! Used to validate the approximation Phi_EE = -(Phi_Es + Phi_sE)/2 against
//! the unreduced dynamics, optionally keeping the v/c correction terms that
//! the reduced transport equations drop.

use crate::closure::{self, ClosureCoefficients};
use crate::linalg::{Mat2, PairField, C64, ONE};
use crate::model::{DerivedContext, SchemeParams};
use crate::numerics::{march_transport, Direction, TransportSystem, TwoPointGrid};
use crate::Result;

/// Edge data: `ee_edge` is imposed on both inflow edges for Phi_EE, `es_edge`
/// on z = 0 for Phi_Es and on z' = 0 for Phi_sE.
#[derive(Debug, Clone, Copy)]
pub struct FullBoundary {
    pub ee_edge: PairField,
    pub es_edge: PairField,
}

impl FullBoundary {
    /// Uniform input on both probes: every pair component enters with
    /// amplitude a^2 and a formed dark-state polariton (es = -ee).
    pub fn both_beams(amplitude: f64) -> Self {
        let a2 = C64::new(amplitude * amplitude, 0.0);
        let ee = PairField::uniform(a2);
        FullBoundary {
            ee_edge: ee,
            es_edge: -ee,
        }
    }

    /// Only probe 1 enters the medium.
    pub fn single_beam(amplitude: f64) -> Self {
        let a2 = C64::new(amplitude * amplitude, 0.0);
        let ee = PairField::component(0, 0, a2);
        FullBoundary {
            ee_edge: ee,
            es_edge: -ee,
        }
    }
}

/// Gridded solution of the full system.
#[derive(Debug, Clone)]
pub struct FullSolution {
    pub grid: TwoPointGrid,
    pub params: SchemeParams,
    pub ee: Vec<PairField>,
    pub es: Vec<PairField>,
    pub se: Vec<PairField>,
    pub ss: Vec<PairField>,
}

struct FullSystem<'a> {
    ctx: &'a DerivedContext,
    bc: FullBoundary,
    coeffs: &'a [ClosureCoefficients],
    inv_d1: C64,
    inv_d2: C64,
    // W / c_ratio, present only with the v/c correction terms
    vc_weight: Option<Mat2>,
}

impl<'a> FullSystem<'a> {
    fn inv_d(&self, j: usize) -> C64 {
        if j == 0 {
            self.inv_d1
        } else {
            self.inv_d2
        }
    }

    fn phi_ss(&self, i: usize, j: usize, es: &PairField, se: &PairField) -> PairField {
        let offset = i.abs_diff(j);
        closure::solve_phi_ss_with(es, se, self.ctx, &self.coeffs[offset])
    }
}

const F_ES: usize = 0;
const F_SE: usize = 1;
const F_EE: usize = 2;

impl<'a> TransportSystem<3> for FullSystem<'a> {
    fn direction(&self, field: usize) -> Direction {
        match field {
            F_ES => Direction::Z,
            F_SE => Direction::ZPrime,
            _ => Direction::Diagonal,
        }
    }

    fn boundary(&self, field: usize, _i: usize, _j: usize) -> PairField {
        match field {
            F_ES | F_SE => self.bc.es_edge,
            _ => self.bc.ee_edge,
        }
    }

    fn rhs(&self, i: usize, j: usize, values: &[PairField; 3]) -> [PairField; 3] {
        let es = &values[F_ES];
        let se = &values[F_SE];
        let ee = &values[F_EE];
        let ss = self.phi_ss(i, j, es, se);
        let half_i = C64::new(0.0, 0.5);

        let mut d_es = PairField::zeros();
        let mut d_se = PairField::zeros();
        let mut d_ee = PairField::zeros();
        for pj in 0..2 {
            for pl in 0..2 {
                d_es.e[pj][pl] = half_i * self.inv_d(pj) * (es.e[pj][pl] + ss.e[pj][pl]);
                d_se.e[pj][pl] = half_i * self.inv_d(pl) * (se.e[pj][pl] + ss.e[pj][pl]);
                // grouped so that the dark state (ee = -es = -se) cancels
                // exactly, not just to rounding
                d_ee.e[pj][pl] = half_i
                    * (self.inv_d(pl) * (ee.e[pj][pl] + es.e[pj][pl])
                        + self.inv_d(pj) * (ee.e[pj][pl] + se.e[pj][pl]));
            }
        }
        if let Some(w) = &self.vc_weight {
            let es_ee = (*es + *ee).right_mul_transpose(w);
            let se_ee = (*se + *ee).left_mul(w);
            d_es = d_es + es_ee * half_i;
            d_se = d_se + se_ee * half_i;
        }
        [d_es, d_se, d_ee]
    }
}

/// Solves the full system.  `include_vc` keeps the v/c coupling terms in the
/// Phi_Es / Phi_sE transport equations.
pub fn solve_full(
    params: &SchemeParams,
    grid: &TwoPointGrid,
    bc: &FullBoundary,
    include_vc: bool,
) -> Result<FullSolution> {
    let ctx = DerivedContext::new(params)?;
    let coeffs = diagonal_coefficients(&ctx, grid)?;
    let w = closure::weighted_velocity(&ctx);
    let system = FullSystem {
        ctx: &ctx,
        bc: *bc,
        coeffs: &coeffs,
        inv_d1: ONE / ctx.dtilde1,
        inv_d2: ONE / ctx.dtilde2,
        vc_weight: include_vc.then(|| w.scale(C64::new(1.0 / params.c_ratio, 0.0))),
    };
    let values = march_transport(&system, grid)?;
    let mut ee = Vec::with_capacity(values.len());
    let mut es = Vec::with_capacity(values.len());
    let mut se = Vec::with_capacity(values.len());
    let mut ss = Vec::with_capacity(values.len());
    for i in 0..grid.n {
        for j in 0..grid.n {
            let v = &values[grid.idx(i, j)];
            ee.push(v[F_EE]);
            es.push(v[F_ES]);
            se.push(v[F_SE]);
            ss.push(system.phi_ss(i, j, &v[F_ES], &v[F_SE]));
        }
    }
    Ok(FullSolution {
        grid: *grid,
        params: *params,
        ee,
        es,
        se,
        ss,
    })
}

/// Closure coefficients for every diagonal offset |i - j| of the grid.
fn diagonal_coefficients(
    ctx: &DerivedContext,
    grid: &TwoPointGrid,
) -> Result<Vec<ClosureCoefficients>> {
    (0..grid.n)
        .map(|offset| {
            let r = offset as f64 * grid.h;
            closure::compute_a(ctx, ctx.potential(r))
        })
        .collect()
}

/// Largest violation of Phi_EE = -(Phi_Es + Phi_sE)/2 over interior nodes,
/// normalized per node by max(|Phi_EE|, 1e-12 a^2).
pub fn validate_ee_approx(sol: &FullSolution) -> f64 {
    let a2 = sol.params.amplitude * sol.params.amplitude;
    let eps = 1e-12 * a2;
    let mut worst: f64 = 0.0;
    for i in 1..sol.grid.n {
        for j in 1..sol.grid.n {
            let k = sol.grid.idx(i, j);
            let plus = (sol.es[k] + sol.se[k]) * 0.5;
            let res = (sol.ee[k] + plus).norm_max();
            let denom = sol.ee[k].norm_max().max(eps);
            worst = worst.max(res / denom);
        }
    }
    worst
}

/// Relative change of Phi_EE at shared nodes when the grid is refined once
/// (n -> 2n - 1).  Values above 0.1 indicate the grid is too coarse.
pub fn refinement_change(
    params: &SchemeParams,
    grid: &TwoPointGrid,
    bc: &FullBoundary,
    include_vc: bool,
) -> Result<f64> {
    let coarse = solve_full(params, grid, bc, include_vc)?;
    let fine_grid = TwoPointGrid::new(2 * grid.n - 1, grid.extent)?;
    let fine = solve_full(params, &fine_grid, bc, include_vc)?;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..grid.n {
        for j in 0..grid.n {
            let c = coarse.ee[grid.idx(i, j)];
            let f = fine.ee[fine_grid.idx(2 * i, 2 * j)];
            num = num.max((c - f).norm_max());
            den = den.max(f.norm_max());
        }
    }
    Ok(num / den.max(f64::MIN_POSITIVE))
}
