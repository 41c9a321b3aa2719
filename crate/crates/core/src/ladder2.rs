//! Double-ladder reduction: diagonal control couplings of equal strength, so
//! photons never convert between the probes and the pair components evolve
//! independently.  Each pair (j, l) obeys a closed pair of transport
//! equations whose right-hand sides share the denominator
//! `Vt(r) - (dtilde_j^{-1} + dtilde_l^{-1}) / 2` with `Vt = V / |Omega|^2`;
//! the denominator's imaginary part never vanishes, so the equations are
//! regular at every separation.

use crate::linalg::{PairField, C64, ONE};
use crate::model::{DerivedContext, Potential, SchemeParams};
use crate::numerics::{march_transport, Direction, TransportSystem, TwoPointGrid};
use crate::{Error, Result};

/// Which probe pairs enter the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderBoundary {
    /// Both probes incident with equal amplitude: every pair component is
    /// driven.
    BothBeams,
    /// Only probe 1 incident: just the (1,1) component is driven.
    SingleBeam,
}

impl LadderBoundary {
    fn ee_edge(&self, amplitude: f64) -> PairField {
        let a2 = C64::new(amplitude * amplitude, 0.0);
        match self {
            LadderBoundary::BothBeams => PairField::uniform(a2),
            LadderBoundary::SingleBeam => PairField::component(0, 0, a2),
        }
    }
}

/// Gridded double-ladder solution.
#[derive(Debug, Clone)]
pub struct LadderSolution {
    pub grid: TwoPointGrid,
    pub params: SchemeParams,
    pub ee: Vec<PairField>,
    pub es: Vec<PairField>,
    pub se: Vec<PairField>,
}

struct LadderSystem {
    es_edge: PairField,
    inv_d: [C64; 2],
    // Vt(offset) for each diagonal offset of the grid
    vtilde: Vec<Potential>,
}

impl LadderSystem {
    /// d(es)/dz for one pair component; the se equation is the mirror image.
    fn slope(&self, own: C64, other: C64, inv_own: C64, inv_other: C64, vt: Potential) -> C64 {
        let half_i = C64::new(0.0, 0.5);
        match vt {
            // deep-blockade limit of the ratio
            Potential::Infinite => half_i * inv_own * own,
            Potential::Finite(v) => {
                let vt = C64::new(v, 0.0);
                let num = vt * own + 0.5 * inv_other * (other - own);
                let den = vt - 0.5 * (inv_own + inv_other);
                half_i * inv_own * num / den
            }
        }
    }
}

const F_ES: usize = 0;
const F_SE: usize = 1;

impl TransportSystem<2> for LadderSystem {
    fn direction(&self, field: usize) -> Direction {
        if field == F_ES {
            Direction::Z
        } else {
            Direction::ZPrime
        }
    }

    fn boundary(&self, _field: usize, _i: usize, _j: usize) -> PairField {
        self.es_edge
    }

    fn rhs(&self, i: usize, j: usize, values: &[PairField; 2]) -> [PairField; 2] {
        let vt = self.vtilde[i.abs_diff(j)];
        let es = &values[F_ES];
        let se = &values[F_SE];
        let mut d_es = PairField::zeros();
        let mut d_se = PairField::zeros();
        for pj in 0..2 {
            for pl in 0..2 {
                d_es.e[pj][pl] = self.slope(
                    es.e[pj][pl],
                    se.e[pj][pl],
                    self.inv_d[pj],
                    self.inv_d[pl],
                    vt,
                );
                d_se.e[pj][pl] = self.slope(
                    se.e[pj][pl],
                    es.e[pj][pl],
                    self.inv_d[pl],
                    self.inv_d[pj],
                    vt,
                );
            }
        }
        [d_es, d_se]
    }
}

/// Solves the double-ladder pair equations and assembles
/// Phi_EE = -(Phi_Es + Phi_sE)/2, with the imposed edge values kept exact.
pub fn solve_double_ladder(
    params: &SchemeParams,
    grid: &TwoPointGrid,
    bc: LadderBoundary,
) -> Result<LadderSolution> {
    if !params.is_double_ladder() {
        return Err(Error::invalid(
            "rabi",
            "double-ladder solver requires Omega_12 = Omega_21 = 0 and Omega_11 = Omega_22",
        ));
    }
    let ctx = DerivedContext::new(params)?;
    let omega_sq = params.omega_max() * params.omega_max();
    let vtilde = (0..grid.n)
        .map(|offset| {
            let r = offset as f64 * grid.h;
            match ctx.potential(r) {
                Potential::Infinite => Potential::Infinite,
                Potential::Finite(v) => Potential::Finite(v / omega_sq),
            }
        })
        .collect();
    let ee_edge = bc.ee_edge(params.amplitude);
    let system = LadderSystem {
        es_edge: -ee_edge,
        inv_d: [ONE / ctx.dtilde1, ONE / ctx.dtilde2],
        vtilde,
    };
    let values = march_transport(&system, grid)?;
    let mut ee = Vec::with_capacity(values.len());
    let mut es = Vec::with_capacity(values.len());
    let mut se = Vec::with_capacity(values.len());
    for i in 0..grid.n {
        for j in 0..grid.n {
            let v = &values[grid.idx(i, j)];
            let assembled = if i == 0 || j == 0 {
                ee_edge
            } else {
                -(v[F_ES] + v[F_SE]) * 0.5
            };
            ee.push(assembled);
            es.push(v[F_ES]);
            se.push(v[F_SE]);
        }
    }
    Ok(LadderSolution {
        grid: *grid,
        params: *params,
        ee,
        es,
        se,
    })
}

/// |Phi_{E_j E_l}(z, z')|^2 normalized to the input-edge intensity, node
/// major (index i * n + j).
pub fn correlation_map(sol: &LadderSolution, component: (usize, usize)) -> Vec<f64> {
    let a2 = sol.params.amplitude * sol.params.amplitude;
    let norm = a2 * a2;
    sol.ee
        .iter()
        .map(|f| f.get(component.0, component.1).norm_sqr() / norm)
        .collect()
}

/// Relative change of Phi_EE at shared nodes under one refinement
/// (n -> 2n - 1); above 0.1 the grid is too coarse.
pub fn refinement_change(
    params: &SchemeParams,
    grid: &TwoPointGrid,
    bc: LadderBoundary,
) -> Result<f64> {
    let coarse = solve_double_ladder(params, grid, bc)?;
    let fine_grid = TwoPointGrid::new(2 * grid.n - 1, grid.extent)?;
    let fine = solve_double_ladder(params, &fine_grid, bc)?;
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
