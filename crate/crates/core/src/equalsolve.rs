//! Closed propagation equation for equal one-photon detunings, in
//! center-of-mass / relative coordinates (R, r).
//!
//! The equation marched in R is, per pair component and in dimensionless
//! units (dtilde = 2*delta - i),
//!
//! ```text
//! i dPhi/dR = -4 dtilde d^2Phi/dr^2
//!             + i/(vbar - dtilde V(r)) * SO(dPhi/dr)
//!             + V(r)/(vbar - dtilde V(r)) * A(r) Phi
//! ```
//!
//! with the spin-orbit coupling SO(Psi)_{j,l} = sum_m (v_{l,m} Psi_{j,m} -
//! v_{j,m} Psi_{m,l}).  `smooth` mode discretizes this equation as written;
//! `piecewise` mode replaces it by its blockade limit (potential term
//! -Phi/dtilde, no spin-orbit) for |r| below the widened blockade radius and
//! by its V = 0 limit outside, which is the approximation used for the
//! second-order correlation sweeps.
//!
//! R-stepping is implicit trapezoidal on a block-tridiagonal operator with
//! 4x4 blocks; the r grid holds r = 0 as a node while the blockade interface
//! falls mid-cell.

use rayon::prelude::*;

use crate::closure::{self, ClosureCoefficients};
use crate::linalg::{Mat4, PairField, C64, ONE, ZERO};
use crate::model::{modified_blockade_radius, DerivedContext, Potential, SchemeParams};
use crate::numerics::{BlockTridiagonalOp, CrankNicolson};
use crate::{Error, Result};

/// Which form of the closed equation is marched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Piecewise,
    Smooth,
}

/// Center-of-mass / relative grid.  r nodes sit at k * hr for k in
/// [-n_side, n_side]; r = 0 is always a node and the blockade interface lies
/// mid-cell by construction (half-integer number of cells inside).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComRelGrid {
    pub hr: f64,
    pub h_r_big: f64,
    pub n_side: usize,
    pub n_steps: usize,
    pub r_extent: f64,
    pub alpha: f64,
    /// Recorded ratio h_R / hr^2.
    pub stability_factor: f64,
}

impl ComRelGrid {
    /// Builds the grid for a medium of depth `alpha` and widened blockade
    /// radius `rbar`.  `cells_per_rbar` (>= 8) cells plus a half-cell span
    /// the blockade radius; the R step is `r_step_factor * hr`.
    pub fn new(alpha: f64, rbar: f64, cells_per_rbar: usize, r_step_factor: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(rbar > 0.0) || !rbar.is_finite() {
            return Err(Error::invalid("rbar", "must be positive"));
        }
        if cells_per_rbar < 8 {
            return Err(Error::invalid(
                "cells_per_rbar",
                "blockade radius must span at least 8 cells",
            ));
        }
        if !(r_step_factor > 0.0) || !r_step_factor.is_finite() {
            return Err(Error::invalid("r_step_factor", "must be positive"));
        }
        let hr = rbar / (cells_per_rbar as f64 + 0.5);
        let n_side = (alpha / hr).ceil() as usize;
        let n_steps = (alpha / (r_step_factor * hr)).ceil() as usize;
        let h_r_big = alpha / n_steps as f64;
        Ok(ComRelGrid {
            hr,
            h_r_big,
            n_side,
            n_steps,
            r_extent: n_side as f64 * hr,
            alpha,
            stability_factor: h_r_big / (hr * hr),
        })
    }

    /// Number of r nodes.
    pub fn n_r(&self) -> usize {
        2 * self.n_side + 1
    }

    pub fn r(&self, k: usize) -> f64 {
        (k as f64 - self.n_side as f64) * self.hr
    }

    /// Index of the r = 0 node.
    pub fn center(&self) -> usize {
        self.n_side
    }
}

/// Resolution policy from which per-detuning grids are built during sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub cells_per_rbar: usize,
    pub r_step_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            cells_per_rbar: 12,
            r_step_factor: 0.5,
        }
    }
}

impl GridSpec {
    pub fn build(&self, params: &SchemeParams) -> Result<ComRelGrid> {
        let rbar = modified_blockade_radius(params.rb, params.delta1);
        ComRelGrid::new(params.alpha, rbar, self.cells_per_rbar, self.r_step_factor)
    }

    /// Scales the resolution (cells and R steps) by `factor` for grid
    /// studies.
    pub fn refine(&self, factor: f64) -> GridSpec {
        GridSpec {
            cells_per_rbar: ((self.cells_per_rbar as f64) * factor).round() as usize,
            r_step_factor: self.r_step_factor,
        }
    }
}

/// Diagnostic knobs for [`solve_closed_with`].
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Drop the imaginary (diffusive) part of the kinetic coefficient so the
    /// free equation becomes norm-conserving.
    pub lossless_kinetic: bool,
    /// Replace the standard inflow profile by a custom one (length must be
    /// `grid.n_r()`); edge values are pinned to the profile's endpoints.
    pub initial: Option<Vec<PairField>>,
    /// Keep every `stride`-th R slice (0 picks a stride that retains about
    /// 128 slices).
    pub slice_stride: usize,
}

/// Gridded solution of the closed equation.
#[derive(Debug, Clone)]
pub struct ClosedSolution {
    pub grid: ComRelGrid,
    pub params: SchemeParams,
    pub mode: SolveMode,
    /// Decimated (R, profile) history including R = 0.
    pub slices: Vec<(f64, Vec<PairField>)>,
    /// Profile at R = alpha.
    pub final_slice: Vec<PairField>,
    /// Discrete L2 norm of the profile after every step.
    pub l2_history: Vec<f64>,
}

/// One row of a detuning sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub delta: f64,
    pub g: [[f64; 2]; 2],
}

/// Per-detuning failure recorded without aborting the sweep.
#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub delta: f64,
    pub error: String,
}

/// Detuning-sweep results, rows sorted by detuning.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// 4x4 matrix of the spin-orbit coupling SO(Psi)_{j,l} =
/// sum_m (v_{l,m} Psi_{j,m} - v_{j,m} Psi_{m,l}).
fn spin_orbit_matrix(ctx: &DerivedContext) -> Mat4 {
    let mut so = Mat4::zeros();
    for j in 0..2 {
        for l in 0..2 {
            let row = 2 * j + l;
            for m in 0..2 {
                for n in 0..2 {
                    let col = 2 * m + n;
                    let mut entry = ZERO;
                    if j == m {
                        entry += ctx.v.get(l, n);
                    }
                    if l == n {
                        entry -= ctx.v.get(j, m);
                    }
                    so.e[row][col] = entry;
                }
            }
        }
    }
    so
}

/// Coefficients of the closed equation at one radius: the spin-orbit
/// prefactor `i q(r)` and the potential term `p(r) A(r)`.
struct NodeCoefficients {
    so: C64,
    pot: Mat4,
}

/// Above this interaction strength the denominator `vbar - dtilde V` is
/// evaluated in the overflow-safe form `V (vbar/V - dtilde)`.
const STABILIZED_V: f64 = 4.0e15;

fn smooth_node_coefficients(
    ctx: &DerivedContext,
    coeff: &ClosureCoefficients,
    vr: Potential,
) -> NodeCoefficients {
    let dtilde = ctx.dtilde1;
    match vr {
        Potential::Infinite => NodeCoefficients {
            so: ZERO,
            pot: scale_mat4(&coeff.a, -ONE / dtilde),
        },
        Potential::Finite(v) => {
            if v == 0.0 {
                NodeCoefficients {
                    so: C64::new(0.0, 1.0) / C64::new(ctx.vbar, 0.0),
                    pot: Mat4::zeros(),
                }
            } else if v > STABILIZED_V {
                let den = C64::new(ctx.vbar / v, 0.0) - dtilde;
                NodeCoefficients {
                    so: C64::new(0.0, 1.0 / v) / den,
                    pot: scale_mat4(&coeff.a, ONE / den),
                }
            } else {
                let den = C64::new(ctx.vbar, 0.0) - dtilde * v;
                NodeCoefficients {
                    so: C64::new(0.0, 1.0) / den,
                    pot: scale_mat4(&coeff.a, C64::new(v, 0.0) / den),
                }
            }
        }
    }
}

fn scale_mat4(m: &Mat4, s: C64) -> Mat4 {
    let mut out = *m;
    for row in out.e.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

/// Checks the smooth-mode resonance rule: where Re(vbar - dtilde V(r))
/// crosses zero the grid must place at least 4 nodes across the resonance
/// width set by the imaginary part.
fn check_smooth_resolution(params: &SchemeParams, ctx: &DerivedContext, hr: f64) -> Result<()> {
    let delta = params.delta1;
    if delta <= 0.0 || ctx.c6 == 0.0 {
        return Ok(());
    }
    let v_star = ctx.vbar / (2.0 * delta);
    let r_star = (ctx.c6 / v_star).powf(1.0 / 6.0);
    let half_width = r_star / (12.0 * delta);
    let required = half_width / 2.0;
    if hr > required {
        return Err(Error::GridRefinement {
            message: format!(
                "smooth mode needs hr <= {required:.3e} to resolve the denominator \
                 resonance at r = {r_star:.3e} (grid has hr = {hr:.3e})"
            ),
        });
    }
    Ok(())
}

fn assemble_operator(
    params: &SchemeParams,
    ctx: &DerivedContext,
    grid: &ComRelGrid,
    mode: SolveMode,
    lossless: bool,
) -> Result<BlockTridiagonalOp> {
    let n = grid.n_r();
    let hr = grid.hr;
    let dtilde = ctx.dtilde1;
    let dt_kin = if lossless {
        C64::new(dtilde.re, 0.0)
    } else {
        dtilde
    };
    let so_mat = spin_orbit_matrix(ctx);
    let kin_off = -4.0 * dt_kin / (hr * hr); // H contribution of each neighbor
    let kin_diag = 8.0 * dt_kin / (hr * hr);
    let inv_2hr = 1.0 / (2.0 * hr);

    // smooth-mode coefficients depend on |r| only; one entry per radius
    let radial: Vec<NodeCoefficients> = match mode {
        SolveMode::Smooth => (0..=grid.n_side)
            .map(|offset| {
                let vr = ctx.potential(offset as f64 * hr);
                let coeff = closure::compute_a(ctx, vr)?;
                Ok(smooth_node_coefficients(ctx, &coeff, vr))
            })
            .collect::<Result<_>>()?,
        SolveMode::Piecewise => Vec::new(),
    };

    let mut op = BlockTridiagonalOp::zeros(4, n);
    for k in 0..n {
        let r = grid.r(k);
        let (so_coeff, pot) = match mode {
            SolveMode::Piecewise => {
                let inside = params.interaction && r.abs() < ctx.rb_bar;
                if inside {
                    (ZERO, scale_mat4(&Mat4::identity(), -ONE / dtilde))
                } else {
                    (C64::new(0.0, 1.0) / C64::new(ctx.vbar, 0.0), Mat4::zeros())
                }
            }
            SolveMode::Smooth => {
                let c = &radial[k.abs_diff(grid.n_side)];
                (c.so, c.pot)
            }
        };
        // H blocks, negated into the generator convention Op = -H
        let diag = BlockTridiagonalOp::block_mut(&mut op.diag, 4, k);
        for p in 0..4 {
            for q in 0..4 {
                let mut h = -pot.e[p][q];
                if p == q {
                    h -= kin_diag;
                }
                diag[p * 4 + q] = h;
            }
        }
        if k > 0 {
            let sub = BlockTridiagonalOp::block_mut(&mut op.sub, 4, k);
            for p in 0..4 {
                for q in 0..4 {
                    let mut h = so_coeff * so_mat.e[p][q] * inv_2hr; // -(-1/(2hr)) folded
                    if p == q {
                        h -= kin_off;
                    }
                    sub[p * 4 + q] = h;
                }
            }
        }
        if k + 1 < n {
            let sup = BlockTridiagonalOp::block_mut(&mut op.sup, 4, k);
            for p in 0..4 {
                for q in 0..4 {
                    let mut h = -so_coeff * so_mat.e[p][q] * inv_2hr;
                    if p == q {
                        h -= kin_off;
                    }
                    sup[p * 4 + q] = h;
                }
            }
        }
    }
    Ok(op)
}

/// Standard inflow/edge profile: component (1,1) at a^2, the rest zero.
fn standard_profile(params: &SchemeParams, n: usize) -> Vec<PairField> {
    let a2 = C64::new(params.amplitude * params.amplitude, 0.0);
    vec![PairField::component(0, 0, a2); n]
}

/// Solves the closed equation with the standard boundary data: the driven
/// component holds a^2 at R = 0 and at the r edges, all others zero.
pub fn solve_closed(
    params: &SchemeParams,
    grid: &ComRelGrid,
    mode: SolveMode,
) -> Result<ClosedSolution> {
    solve_closed_with(params, grid, mode, &SolveOptions::default())
}

pub fn solve_closed_with(
    params: &SchemeParams,
    grid: &ComRelGrid,
    mode: SolveMode,
    options: &SolveOptions,
) -> Result<ClosedSolution> {
    params.validate()?;
    if params.delta1 != params.delta2 {
        return Err(Error::invalid(
            "delta2",
            "the equal-detuning solver requires delta1 == delta2",
        ));
    }
    let ctx = DerivedContext::new(params)?;
    if params.interaction && ctx.rb_bar / grid.hr < 8.0 {
        return Err(Error::GridRefinement {
            message: format!(
                "blockade radius {:.3} spans fewer than 8 cells at hr = {:.3e}",
                ctx.rb_bar, grid.hr
            ),
        });
    }
    if mode == SolveMode::Smooth {
        check_smooth_resolution(params, &ctx, grid.hr)?;
    }

    let n = grid.n_r();
    let (profile, anchor): (Vec<PairField>, Vec<PairField>) = match &options.initial {
        Some(p) => {
            if p.len() != n {
                return Err(Error::invalid("initial", "profile length must match grid"));
            }
            (p.clone(), vec![PairField::zeros(); n])
        }
        // The standard inflow profile doubles as the anchor: the march
        // evolves the deviation from it, so the transparency fixed point is
        // preserved exactly rather than to solver roundoff.
        None => {
            let p = standard_profile(params, n);
            (p.clone(), p)
        }
    };

    let op = assemble_operator(params, &ctx, grid, mode, options.lossless_kinetic)?;
    let stepper = CrankNicolson::new(&op, grid.h_r_big)?;

    let stride = if options.slice_stride == 0 {
        (grid.n_steps / 128).max(1)
    } else {
        options.slice_stride
    };

    let anchor_flat: Vec<C64> = anchor.iter().flat_map(|f| f.to_vec4()).collect();
    // h * S with S = i Op anchor, the source of the deviation system
    let mut source: Vec<C64> = vec![ZERO; 4 * n];
    op.apply(&anchor_flat, &mut source);
    let ih = C64::new(0.0, grid.h_r_big);
    for s in source.iter_mut() {
        *s *= ih;
    }

    let mut deviation: Vec<C64> = profile
        .iter()
        .zip(anchor.iter())
        .flat_map(|(f, a)| (*f - *a).to_vec4())
        .collect();
    let mut total = vec![ZERO; 4 * n];
    let combine = |dev: &[C64], out: &mut [C64]| {
        for (o, (d, a)) in out.iter_mut().zip(dev.iter().zip(anchor_flat.iter())) {
            *o = d + a;
        }
    };
    let l2 = |v: &[C64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    combine(&deviation, &mut total);
    let norm0 = l2(&total).max(f64::MIN_POSITIVE);
    let mut l2_history = Vec::with_capacity(grid.n_steps + 1);
    l2_history.push(l2(&total));
    let mut slices = vec![(0.0, profile)];
    let to_fields = |flat: &[C64]| -> Vec<PairField> {
        (0..n)
            .map(|k| {
                PairField::from_vec4([
                    flat[4 * k],
                    flat[4 * k + 1],
                    flat[4 * k + 2],
                    flat[4 * k + 3],
                ])
            })
            .collect()
    };

    for step in 1..=grid.n_steps {
        stepper.step_with_source(&mut deviation, Some(&source));
        combine(&deviation, &mut total);
        let norm = l2(&total);
        l2_history.push(norm);
        if !norm.is_finite() {
            return Err(Error::NonFinite { i: step, j: 0 });
        }
        if norm > 10.0 * norm0 {
            return Err(Error::Unstable {
                growth: norm / norm0,
            });
        }
        if step % stride == 0 || step == grid.n_steps {
            slices.push((step as f64 * grid.h_r_big, to_fields(&total)));
        }
    }
    let final_slice = slices.last().expect("at least the initial slice").1.clone();
    Ok(ClosedSolution {
        grid: *grid,
        params: *params,
        mode,
        slices,
        final_slice,
        l2_history,
    })
}

/// Second-order correlations at zero separation:
/// `G_{j,l} = |Phi_{j,l}(R = alpha, r = 0)|^2 / a^4`.
pub fn g2_at_zero(sol: &ClosedSolution) -> [[f64; 2]; 2] {
    let a2 = sol.params.amplitude * sol.params.amplitude;
    let center = sol.final_slice[sol.grid.center()];
    let mut g = [[0.0; 2]; 2];
    for j in 0..2 {
        for l in 0..2 {
            g[j][l] = center.get(j, l).norm_sqr() / (a2 * a2);
        }
    }
    g
}

/// Runs one solve per detuning (rows fan out across threads), recording
/// per-row failures instead of aborting.  Rows come back sorted by detuning.
pub fn sweep_detuning(
    params: &SchemeParams,
    deltas: &[f64],
    spec: &GridSpec,
    mode: SolveMode,
) -> SweepTable {
    let outcomes: Vec<(f64, std::result::Result<SweepRow, String>)> = deltas
        .par_iter()
        .map(|&delta| {
            let run = || -> Result<SweepRow> {
                let mut p = *params;
                p.delta1 = delta;
                p.delta2 = delta;
                p.validate()?;
                let grid = spec.build(&p)?;
                let sol = solve_closed(&p, &grid, mode)?;
                Ok(SweepRow {
                    delta,
                    g: g2_at_zero(&sol),
                })
            };
            (delta, run().map_err(|e| e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (delta, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(error) => failures.push(SweepFailure { delta, error }),
        }
    }
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    failures.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    SweepTable { rows, failures }
}

/// Effective mass `1/(16 delta)` and effective potential depth `1/(2 delta)`
/// of the large-detuning limit; undefined on resonance.
pub fn effective_diagnostics(params: &SchemeParams) -> Result<(f64, f64)> {
    if params.delta1 != params.delta2 {
        return Err(Error::invalid(
            "delta2",
            "effective diagnostics require delta1 == delta2",
        ));
    }
    let delta = params.delta1;
    if delta == 0.0 {
        return Err(Error::invalid(
            "delta1",
            "effective mass and potential are undefined at zero detuning",
        ));
    }
    Ok((1.0 / (16.0 * delta), 1.0 / (2.0 * delta)))
}
