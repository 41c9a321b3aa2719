//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Regression constants marked "frozen" come from Richardson-extrapolated
//! fine-grid reference runs of this code base (three resolutions per value);
//! the tests compare default-grid results against them.

use std::sync::OnceLock;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use rydeit::closure;
use rydeit::equalsolve::{self, GridSpec, SolveMode, SweepTable};
use rydeit::fullsolve::{self, FullBoundary};
use rydeit::ladder2::{self, LadderBoundary};
use rydeit::linalg::{BlockLu, Mat2, Mat4, PairField, C64, ONE, ZERO};
use rydeit::model::{
    rabi_diagonal, rabi_from_velocity_ratio, DerivedContext, Potential, SchemeParams,
};
use rydeit::numerics::{
    implicit_step, march_transport, BlockTridiagonalOp, Direction, TransportSystem, TwoPointGrid,
};

use rydeit_cli::config::parse_config;
use rydeit_cli::run::run_converge;

// ---------------------------------------------------------------- criterion 1

fn random_context(rng: &mut StdRng) -> DerivedContext {
    let entry = |rng: &mut StdRng| {
        let mag = rng.gen_range(0.5..3.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        C64::new(mag * phase.cos(), mag * phase.sin())
    };
    let rabi = Mat2::new(entry(rng), entry(rng), entry(rng), entry(rng));
    let params = SchemeParams::new(
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-5.0..5.0),
        rabi,
        30.0,
        0.4,
    )
    .unwrap();
    DerivedContext::new(&params).unwrap()
}

fn random_field(rng: &mut StdRng) -> PairField {
    let mut f = PairField::zeros();
    for j in 0..2 {
        for l in 0..2 {
            f.set(
                j,
                l,
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
    }
    f
}

/// Independent oracle: dense Gauss-Jordan solve of the 4-unknown constraint
///   sum_m dtilde_m^{-1} (v_{j,m} (es + ss)_{m,l} + v_{l,m} (se + ss)_{j,m})
///     = 2 V ss_{j,l}
/// assembled directly, sharing no code with the closure path.
fn dense_phi_ss(es: &PairField, se: &PairField, ctx: &DerivedContext, v: f64) -> PairField {
    let d = [ONE / ctx.dtilde1, ONE / ctx.dtilde2];
    let mut m = [[ZERO; 4]; 4];
    let mut rhs = [ZERO; 4];
    for j in 0..2 {
        for l in 0..2 {
            let row = 2 * j + l;
            for mm in 0..2 {
                // coefficient of ss_{mm,l}
                m[row][2 * mm + l] += d[mm] * ctx.v.get(j, mm);
                // coefficient of ss_{j,mm}
                m[row][2 * j + mm] += d[mm] * ctx.v.get(l, mm);
                rhs[row] -=
                    d[mm] * (ctx.v.get(j, mm) * es.get(mm, l) + ctx.v.get(l, mm) * se.get(j, mm));
            }
            m[row][row] -= C64::new(2.0 * v, 0.0);
        }
    }
    // Gauss-Jordan with partial pivoting
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if m[r][col].norm() > m[piv][col].norm() {
                piv = r;
            }
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        let inv = ONE / m[col][col];
        for r in 0..4 {
            if r == col {
                continue;
            }
            let f = m[r][col] * inv;
            for c in col..4 {
                let v = m[col][c];
                m[r][c] -= f * v;
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    for r in 0..4 {
        rhs[r] /= m[r][r];
    }
    PairField::from_vec4(rhs)
}

#[test]
fn criterion_1_closure_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(20260810);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let ctx = random_context(&mut rng);
        let es = random_field(&mut rng);
        let se = random_field(&mut rng);
        for &v in &[0.0, 0.1, 1.0, 10.0, 1e6] {
            let ss = closure::solve_phi_ss(&es, &se, &ctx, Potential::Finite(v)).unwrap();
            let reference = dense_phi_ss(&es, &se, &ctx, v);
            let scale = reference.norm_max().max(es.norm_max()).max(se.norm_max());
            let rel = (ss - reference).norm_max() / scale.max(1e-30);
            worst = worst.max(rel);
            assert!(rel <= 1e-10, "closure mismatch {rel} at V = {v}");
        }
        // the blockade sentinel gives the identity coefficients exactly
        let coeff = closure::compute_a(&ctx, Potential::Infinite).unwrap();
        assert_eq!(coeff.a, Mat4::identity());
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "criterion 1 took {elapsed:.1}s");
    println!(
        "acceptance 1 (closure oracle equivalence, worst rel {worst:.2e}, {elapsed:.2}s): PASS"
    );
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_2_transparency_fixed_points() {
    let start = Instant::now();
    let tol = 1e-12;

    // full system, default grid
    let params = SchemeParams::new(
        1.0,
        1.0,
        rabi_from_velocity_ratio(1.0, 0.5).unwrap(),
        30.0,
        0.4,
    )
    .unwrap()
    .without_interaction();
    let grid = TwoPointGrid::new(301, 30.0).unwrap();
    let bc = FullBoundary::both_beams(1.0);
    let sol = fullsolve::solve_full(&params, &grid, &bc, false).unwrap();
    let mut worst_full: f64 = 0.0;
    for k in 0..grid.node_count() {
        worst_full = worst_full.max((sol.ee[k] - bc.ee_edge).norm_max());
        worst_full = worst_full.max((sol.es[k] - bc.es_edge).norm_max());
    }
    assert!(worst_full <= tol, "full deviates by {worst_full}");

    // closed equation, default grid
    let cgrid = GridSpec::default().build(&params).unwrap();
    let closed = equalsolve::solve_closed(&params, &cgrid, SolveMode::Piecewise).unwrap();
    let expect = PairField::component(0, 0, ONE);
    let mut worst_closed: f64 = 0.0;
    for f in &closed.final_slice {
        worst_closed = worst_closed.max((*f - expect).norm_max());
    }
    assert!(worst_closed <= tol, "closed deviates by {worst_closed}");

    // double ladder, default grid
    let lparams = SchemeParams::new(2.5, -2.5, rabi_diagonal(1.0), 30.0, 0.4)
        .unwrap()
        .without_interaction();
    let lad = ladder2::solve_double_ladder(&lparams, &grid, LadderBoundary::BothBeams).unwrap();
    let one = PairField::uniform(ONE);
    let mut worst_ladder: f64 = 0.0;
    for k in 0..grid.node_count() {
        worst_ladder = worst_ladder.max((lad.ee[k] - one).norm_max());
    }
    assert!(worst_ladder <= tol, "ladder deviates by {worst_ladder}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 2 took {elapsed:.1}s");
    println!(
        "acceptance 2 (transparency fixed points: full {worst_full:.1e}, closed {worst_closed:.1e}, ladder {worst_ladder:.1e}, {elapsed:.2}s): PASS"
    );
}

// ---------------------------------------------------------------- criterion 3

fn sweep_params(delta: f64) -> SchemeParams {
    SchemeParams::new(
        delta,
        delta,
        rabi_from_velocity_ratio(1.0, 0.5).unwrap(),
        30.0,
        0.4,
    )
    .unwrap()
}

fn reference_sweep() -> &'static SweepTable {
    static SWEEP: OnceLock<SweepTable> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let deltas: Vec<f64> = (0..33).map(|k| -4.0 + 0.25 * k as f64).collect();
        let table = equalsolve::sweep_detuning(
            &sweep_params(0.0),
            &deltas,
            &GridSpec::default(),
            SolveMode::Piecewise,
        );
        assert!(
            table.failures.is_empty(),
            "sweep rows failed: {:?}",
            table.failures
        );
        table
    })
}

fn sweep_row(delta: f64) -> [[f64; 2]; 2] {
    reference_sweep()
        .rows
        .iter()
        .find(|r| (r.delta - delta).abs() < 1e-9)
        .unwrap_or_else(|| panic!("no sweep row at delta = {delta}"))
        .g
}

/// Frozen Richardson-extrapolated references (cells_per_rbar 12/24/48).
const G11_AT_ZERO: f64 = 0.22513587;
const G11_AT_2P5: f64 = 1.20663366;
const G22_AT_0P5: f64 = 5.552849e-3;

#[test]
fn criterion_3a_antibunching_below_threshold() {
    let g11 = sweep_row(0.0)[0][0];
    // Regression guard first: the computed value itself is stable.
    assert!(
        (g11 - G11_AT_ZERO).abs() < 0.005 * G11_AT_ZERO,
        "G11(0) = {g11} drifted from the frozen reference {G11_AT_ZERO}"
    );
    let pass = g11 < 0.1;
    println!(
        "acceptance 3a (G11 at delta 0 < 0.1; measured {g11:.5}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    // The propagation equations as published give ~0.225 here; three
    // independent routes (piecewise, smooth, full (z, z') system) and an
    // external reference implementation agree to better than 3%, so the 0.1
    // bound is not reachable with these equations at these parameters.  See
    // README, "Acceptance status".
    assert!(pass, "G11(0) = {g11:.5}, bound 0.1");
}

#[test]
fn criterion_3b_bunching_above_one() {
    let plus = sweep_row(2.5)[0][0];
    let minus = sweep_row(-2.5)[0][0];
    assert!(
        (plus - G11_AT_2P5).abs() < 0.005 * G11_AT_2P5,
        "G11(2.5) = {plus} drifted from the frozen reference {G11_AT_2P5}"
    );
    assert!(plus > 1.0 && minus > 1.0, "G11(+-2.5) = {plus}, {minus}");
    println!("acceptance 3b (G11 at |delta| 2.5 > 1; measured {plus:.5}): PASS");
}

#[test]
fn criterion_3c_g22_interior_maximum() {
    let table = reference_sweep();
    let (best, g22_max) = table
        .rows
        .iter()
        .map(|r| (r.delta, r.g[1][1]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let g22_zero = sweep_row(0.0)[1][1];
    let g22_edge = sweep_row(4.0)[1][1].max(sweep_row(-4.0)[1][1]);
    assert!(
        g22_max > 1e-4,
        "G22 maximum {g22_max} is not distinguishable from zero"
    );
    assert!(
        best.abs() > 1e-9 && best.abs() < 4.0,
        "G22 maximum sits at delta = {best}, not in the interior"
    );
    assert!(g22_max > g22_zero && g22_max > g22_edge);
    assert!(
        (g22_max - G22_AT_0P5).abs() < 0.01 * G22_AT_0P5,
        "G22 max {g22_max} drifted from the frozen reference {G22_AT_0P5}"
    );
    println!(
        "acceptance 3c (G22 interior maximum {g22_max:.3e} at |delta| = {:.2}): PASS",
        best.abs()
    );
}

#[test]
fn criterion_3d_detuning_reflection_symmetry() {
    let table = reference_sweep();
    let mut worst: f64 = 0.0;
    for row in &table.rows {
        if row.delta <= 0.0 {
            continue;
        }
        let mirror = sweep_row(-row.delta);
        for j in 0..2 {
            for l in 0..2 {
                let a = row.g[j][l];
                let b = mirror[j][l];
                worst = worst.max((a - b).abs() / a.abs().max(1e-12));
            }
        }
    }
    assert!(worst <= 1e-6, "reflection asymmetry {worst}");
    println!("acceptance 3d (G(-delta) = G(delta) to {worst:.1e}): PASS");
}

// ---------------------------------------------------------------- criterion 4

/// Frozen fine-grid reference (801/1201/2401 nodes agree to 5 digits).
const M12_DIAGONAL_OUTPUT: f64 = 0.853254;

#[test]
fn criterion_4_opposite_detuning_maps() {
    let start = Instant::now();
    let params = SchemeParams::new(2.5, -2.5, rabi_diagonal(1.0), 30.0, 0.4).unwrap();
    let grid = TwoPointGrid::new(301, 30.0).unwrap();
    let sol = ladder2::solve_double_ladder(&params, &grid, LadderBoundary::BothBeams).unwrap();
    let m11 = ladder2::correlation_map(&sol, (0, 0));
    let m12 = ladder2::correlation_map(&sol, (0, 1));
    let m21 = ladder2::correlation_map(&sol, (1, 0));

    let max11 = (3 * (grid.n - 1) / 4..grid.n)
        .map(|i| m11[grid.idx(i, i)])
        .fold(0.0_f64, f64::max);
    assert!(max11 > 1.0, "same-beam diagonal peak {max11} <= 1");

    let from = (3.0 / grid.h).ceil() as usize;
    let max12 = (from..grid.n)
        .map(|i| m12[grid.idx(i, i)])
        .fold(0.0_f64, f64::max);
    assert!(max12 < 1.0, "cross-beam diagonal {max12} >= 1");

    let out12 = m12[grid.idx(grid.n - 1, grid.n - 1)];
    assert!(
        (out12 - M12_DIAGONAL_OUTPUT).abs() < 0.01 * M12_DIAGONAL_OUTPUT,
        "cross-beam dip {out12} drifted from the frozen reference {M12_DIAGONAL_OUTPUT}"
    );

    let mut asym: f64 = 0.0;
    for i in 0..grid.n {
        for j in 0..grid.n {
            asym = asym.max((m12[grid.idx(i, j)] - m21[grid.idx(j, i)]).abs());
        }
    }
    assert!(asym <= 1e-12, "transpose asymmetry {asym}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 4 took {elapsed:.1}s");
    println!(
        "acceptance 4 (same-beam diagonal peak {max11:.4} > 1, cross-beam {max12:.4} < 1, transpose {asym:.1e}, {elapsed:.2}s): PASS"
    );
}

// ---------------------------------------------------------------- criterion 5

/// Frozen default-grid reference for the half-sum residual at delta = 2.
const EE_RESIDUAL_DELTA2: f64 = 0.066807905380;

#[test]
fn criterion_5_ee_approximation_validation() {
    // exact zero on the transparency fixed point
    let dark = SchemeParams::new(1.5, 1.5, rabi_diagonal(1.0), 30.0, 0.4)
        .unwrap()
        .without_interaction();
    let grid = TwoPointGrid::new(301, 30.0).unwrap();
    let sol = fullsolve::solve_full(&dark, &grid, &FullBoundary::both_beams(1.0), false).unwrap();
    let zero = fullsolve::validate_ee_approx(&sol);
    assert_eq!(zero, 0.0, "dark-state residual must vanish exactly");

    // finite, frozen value at the sweep parameters
    let params = sweep_params(2.0);
    let sol =
        fullsolve::solve_full(&params, &grid, &FullBoundary::single_beam(1.0), false).unwrap();
    let residual = fullsolve::validate_ee_approx(&sol);
    assert!(
        (residual - EE_RESIDUAL_DELTA2).abs() < 0.01 * EE_RESIDUAL_DELTA2,
        "residual {residual} drifted from the frozen reference {EE_RESIDUAL_DELTA2}"
    );
    println!("acceptance 5 (dark-state residual exactly 0; delta-2 residual {residual:.6}): PASS");
}

#[test]
fn criterion_5_vc_residual_decreases_with_c_ratio() {
    let params = sweep_params(2.0);
    let grid = TwoPointGrid::new(301, 30.0).unwrap();
    let bc = FullBoundary::single_beam(1.0);
    let res_at = |c_ratio: f64| {
        let p = params.with_c_ratio(c_ratio).unwrap();
        fullsolve::validate_ee_approx(&fullsolve::solve_full(&p, &grid, &bc, true).unwrap())
    };
    let lo = res_at(1e3);
    let hi = res_at(1e5);
    let pass = hi < lo;
    println!(
        "acceptance 5-vc (residual decreases with c_ratio; 1e3 -> {lo:.9}, 1e5 -> {hi:.9}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    // Measured behavior: the v/c terms slightly reduce the half-sum
    // residual, so the corrected runs approach the reduced-run residual from
    // below as c_ratio grows (gap ~ 1.4e-3 / c_ratio) and the residual
    // *increases* with c_ratio.  The expected decrease is therefore not
    // observable for this system.  See README, "Acceptance status".
    assert!(
        pass,
        "residual rose from {lo:.9} to {hi:.9} as c_ratio grew"
    );
}

// ---------------------------------------------------------------- criterion 6

struct Decay;

impl TransportSystem<1> for Decay {
    fn direction(&self, _f: usize) -> Direction {
        Direction::Z
    }
    fn boundary(&self, _f: usize, _i: usize, _j: usize) -> PairField {
        PairField::uniform(ONE)
    }
    fn rhs(&self, _i: usize, _j: usize, v: &[PairField; 1]) -> [PairField; 1] {
        [v[0] * C64::new(-0.5, 0.0)]
    }
}

#[test]
fn criterion_6_numerics_properties() {
    // transport marcher: e^{-1/2} to 1e-6 at h = 1e-3, observed order 2
    let err_at = |n: usize| {
        let grid = TwoPointGrid::new(n, 1.0).unwrap();
        let sol = march_transport(&Decay, &grid).unwrap();
        (sol[grid.idx(n - 1, 0)][0].get(0, 0).re - (-0.5_f64).exp()).abs()
    };
    let e_fine = err_at(1001);
    assert!(e_fine < 1e-6, "exponential error {e_fine}");
    let order = (err_at(501) / e_fine).log2();
    assert!((1.8..=2.2).contains(&order), "marcher order {order}");

    // implicit stepper: norm preservation for anti-Hermitian generators
    let mut rng = StdRng::seed_from_u64(99);
    let n = 64;
    let mut op = BlockTridiagonalOp::zeros(1, n);
    for row in 0..n {
        op.diag[row] = C64::new(rng.gen_range(-2.0..2.0), 0.0);
    }
    for row in 1..n {
        let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        op.sub[row] = v;
        op.sup[row - 1] = v.conj();
    }
    let mut field: Vec<C64> = (0..n)
        .map(|k| {
            if k == 0 || k == n - 1 {
                ZERO
            } else {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }
        })
        .collect();
    let mut worst_drift: f64 = 0.0;
    for _ in 0..20 {
        let before: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        field = implicit_step(&op, &field, 0.03).unwrap();
        let after: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        worst_drift = worst_drift.max((after - before).abs() / before);
    }
    assert!(worst_drift <= 1e-12, "norm drift {worst_drift}");

    // block-tridiagonal solve: residual below 1e-12 * ||rhs||
    let mut worst_res: f64 = 0.0;
    for _ in 0..20 {
        let rows = 6;
        let mut op = BlockTridiagonalOp::zeros(4, rows);
        let mut fill = |dst: &mut [C64], boost: f64| {
            for (k, v) in dst.iter_mut().enumerate() {
                *v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if k % 5 == 0 {
                    *v += C64::new(boost, 0.0);
                }
            }
        };
        for row in 0..rows {
            fill(BlockTridiagonalOp::block_mut(&mut op.diag, 4, row), 6.0);
            if row > 0 {
                fill(BlockTridiagonalOp::block_mut(&mut op.sub, 4, row), 0.0);
            }
            if row + 1 < rows {
                fill(BlockTridiagonalOp::block_mut(&mut op.sup, 4, row), 0.0);
            }
        }
        let rhs: Vec<C64> = (0..4 * rows)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let sys = rydeit::numerics::BandedBlockSystem {
            op: op.clone(),
            rhs: rhs.clone(),
        };
        let x = rydeit::numerics::block_tridiagonal_solve(&sys).unwrap();
        let mut back = vec![ZERO; rhs.len()];
        op.apply(&x, &mut back);
        let rhs_norm = rhs.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
        for (a, b) in back.iter().zip(rhs.iter()) {
            worst_res = worst_res.max((a - b).norm() / rhs_norm);
        }
    }
    assert!(worst_res <= 1e-12, "solve residual {worst_res}");

    // tiny LU building block stays exact on the scalar case
    let lu = BlockLu::factor(&[C64::new(2.0, 0.0)], 1).unwrap();
    let mut x = [C64::new(4.0, 0.0)];
    lu.solve(&mut x);
    assert_eq!(x[0], C64::new(2.0, 0.0));

    println!(
        "acceptance 6 (marcher order {order:.2}, norm drift {worst_drift:.1e}, solve residual {worst_res:.1e}): PASS"
    );
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7a_sweep_grid_convergence() {
    let deltas = [0.0, 1.0, -1.0, 2.5, -2.5, 4.0, -4.0];
    let coarse = equalsolve::sweep_detuning(
        &sweep_params(0.0),
        &deltas,
        &GridSpec {
            cells_per_rbar: 12,
            r_step_factor: 0.5,
        },
        SolveMode::Piecewise,
    );
    // cells 12 -> 24 shrinks hr (and with it hR) by a factor 1.96
    let fine = equalsolve::sweep_detuning(
        &sweep_params(0.0),
        &deltas,
        &GridSpec {
            cells_per_rbar: 24,
            r_step_factor: 0.5,
        },
        SolveMode::Piecewise,
    );
    assert!(coarse.failures.is_empty() && fine.failures.is_empty());
    let mut worst: f64 = 0.0;
    for (a, b) in coarse.rows.iter().zip(fine.rows.iter()) {
        assert_eq!(a.delta, b.delta);
        for j in 0..2 {
            for l in 0..2 {
                let change = (a.g[j][l] - b.g[j][l]).abs() / b.g[j][l].max(1e-10);
                worst = worst.max(change);
            }
        }
    }
    assert!(worst < 0.05, "grid halving changes G by {worst}");
    println!("acceptance 7a (halving steps changes G by at most {worst:.2e}): PASS");
}

#[test]
fn criterion_7b_smooth_mode_order() {
    let recipe = rydeit_cli::recipes::RECIPES
        .iter()
        .find(|(name, _)| *name == "converge_smooth.toml")
        .unwrap()
        .1;
    let config = parse_config(recipe).unwrap();
    let outcome = run_converge(&config, 1.0).unwrap();
    let table = &outcome.tables[0];
    let order_col = table.columns.iter().position(|c| c == "order").unwrap();
    let order = table.rows[0][order_col];
    assert!(order >= 1.8, "smooth-mode observed order {order}");
    println!("acceptance 7b (smooth-mode convergence order {order:.2}): PASS");
}
