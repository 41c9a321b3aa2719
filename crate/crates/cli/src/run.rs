//! Run orchestration: turns a validated config into output tables.

use rydeit::equalsolve::{self, SolveOptions};
use rydeit::fullsolve::{self, FullBoundary};
use rydeit::ladder2::{self, LadderBoundary};
use rydeit::numerics::estimate_order;

use crate::config::{parse_component, to_toml, RunConfig, Solver};
use crate::output::{config_hash, standard_provenance, OutputTable};

#[derive(Debug)]
pub enum RunError {
    Config(crate::config::ConfigError),
    Solver(rydeit::Error),
    Usage(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Solver(e) => write!(f, "{e}"),
            RunError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<rydeit::Error> for RunError {
    fn from(e: rydeit::Error) -> Self {
        RunError::Solver(e)
    }
}

/// Result of one subcommand: emitted tables plus the number of per-row
/// failures (nonzero turns into exit code 2).
pub struct ExecOutcome {
    pub tables: Vec<OutputTable>,
    pub row_failures: usize,
    pub warnings: Vec<String>,
}

fn hash_of(config: &RunConfig) -> String {
    config_hash(&to_toml(config))
}

/// Detuning sweep of the equal-detuning solver.
pub fn run_sweep(config: &RunConfig, grid_scale: f64) -> Result<ExecOutcome, RunError> {
    if config.solver != Solver::Equal {
        return Err(RunError::Usage(
            "`sweep` needs solver = \"equal\"".to_string(),
        ));
    }
    let params = config.scheme_params()?;
    let spec = config.grid_spec(grid_scale);
    let deltas = config.sweep_deltas();
    let table = equalsolve::sweep_detuning(&params, &deltas, &spec, config.mode.into());

    let mut out = OutputTable::new("sweep", &["delta", "g11", "g22", "g12", "g21"]);
    out.provenance = standard_provenance(
        &hash_of(config),
        &format!(
            "cells_per_rbar={} r_step_factor={} scale={grid_scale}",
            spec.cells_per_rbar, spec.r_step_factor
        ),
    );
    for failure in &table.failures {
        out.provenance
            .push(format!("failed delta={}: {}", failure.delta, failure.error));
    }
    for row in &table.rows {
        out.push_row(vec![
            row.delta,
            row.g[0][0],
            row.g[1][1],
            row.g[0][1],
            row.g[1][0],
        ]);
    }
    Ok(ExecOutcome {
        tables: vec![out],
        row_failures: table.failures.len(),
        warnings: Vec::new(),
    })
}

/// Long-format correlation maps of the selected solver.
pub fn run_map(config: &RunConfig, grid_scale: f64) -> Result<ExecOutcome, RunError> {
    let params = config.scheme_params()?;
    let hash = hash_of(config);
    let components: Vec<(String, (usize, usize))> = config
        .output
        .components
        .iter()
        .map(|c| (c.clone(), parse_component(c).expect("validated")))
        .collect();
    let mut tables = Vec::new();
    match config.solver {
        Solver::Ladder2 | Solver::Full => {
            let grid = config.two_point_grid(grid_scale)?;
            let a2 = params.amplitude * params.amplitude;
            let norm = a2 * a2;
            let ee: Vec<rydeit::linalg::PairField> = match config.solver {
                Solver::Ladder2 => {
                    let sol =
                        ladder2::solve_double_ladder(&params, &grid, LadderBoundary::BothBeams)?;
                    sol.ee
                }
                _ => {
                    let bc = FullBoundary::both_beams(params.amplitude);
                    let sol = fullsolve::solve_full(&params, &grid, &bc, config.include_vc)?;
                    sol.ee
                }
            };
            for (label, (pj, pl)) in &components {
                let mut t = OutputTable::new(format!("map_{label}"), &["z", "zprime", "value"]);
                t.provenance = standard_provenance(
                    &hash,
                    &format!("nz={} h={:.6e} scale={grid_scale}", grid.n, grid.h),
                );
                for i in 0..grid.n {
                    for j in 0..grid.n {
                        let v = ee[grid.idx(i, j)].get(*pj, *pl).norm_sqr() / norm;
                        t.push_row(vec![grid.coord(i), grid.coord(j), v]);
                    }
                }
                tables.push(t);
            }
        }
        Solver::Equal => {
            let spec = config.grid_spec(grid_scale);
            let grid = spec.build(&params)?;
            let sol = equalsolve::solve_closed_with(
                &params,
                &grid,
                config.mode.into(),
                &SolveOptions {
                    lossless_kinetic: config.lossless,
                    ..SolveOptions::default()
                },
            )?;
            let a2 = params.amplitude * params.amplitude;
            let norm = a2 * a2;
            for (label, (pj, pl)) in &components {
                let mut t = OutputTable::new(format!("map_{label}"), &["r_com", "r_rel", "value"]);
                t.provenance = standard_provenance(
                    &hash,
                    &format!(
                        "hr={:.6e} hR={:.6e} n_r={} steps={} sf={:.3e} scale={grid_scale}",
                        grid.hr,
                        grid.h_r_big,
                        grid.n_r(),
                        grid.n_steps,
                        grid.stability_factor
                    ),
                );
                for (r_com, profile) in &sol.slices {
                    for (k, f) in profile.iter().enumerate() {
                        t.push_row(vec![*r_com, grid.r(k), f.get(*pj, *pl).norm_sqr() / norm]);
                    }
                }
                tables.push(t);
            }
        }
    }
    Ok(ExecOutcome {
        tables,
        row_failures: 0,
        warnings: Vec::new(),
    })
}

/// Solves the full system and reports the half-sum approximation residual
/// plus a one-refinement grid check.
pub fn run_full_validate(config: &RunConfig, grid_scale: f64) -> Result<ExecOutcome, RunError> {
    if config.solver != Solver::Full {
        return Err(RunError::Usage(
            "`full-validate` needs solver = \"full\"".to_string(),
        ));
    }
    let params = config.scheme_params()?;
    let grid = config.two_point_grid(grid_scale)?;
    let bc = FullBoundary::single_beam(params.amplitude);
    let sol = fullsolve::solve_full(&params, &grid, &bc, config.include_vc)?;
    let residual = fullsolve::validate_ee_approx(&sol);
    let change = fullsolve::refinement_change(&params, &grid, &bc, config.include_vc)?;
    let mut warnings = Vec::new();
    let mut t = OutputTable::new(
        "full_validate",
        &["include_vc", "c_ratio", "ee_residual", "refinement_change"],
    );
    t.provenance = standard_provenance(
        &hash_of(config),
        &format!("nz={} h={:.6e} scale={grid_scale}", grid.n, grid.h),
    );
    if change > 0.1 {
        let w = format!("grid too coarse: one refinement changes the solution by {change:.3}");
        t.provenance.push(w.clone());
        warnings.push(w);
    }
    t.push_row(vec![
        if config.include_vc { 1.0 } else { 0.0 },
        params.c_ratio,
        residual,
        change,
    ]);
    Ok(ExecOutcome {
        tables: vec![t],
        row_failures: 0,
        warnings,
    })
}

/// Three-level grid study of the configured solver's headline functional.
pub fn run_converge(config: &RunConfig, grid_scale: f64) -> Result<ExecOutcome, RunError> {
    let params = config.scheme_params()?;
    let component = parse_component(&config.output.components[0]).expect("validated");
    let mut values = Vec::new();
    let mut steps = Vec::new();
    for level in 0..3u32 {
        let scale = grid_scale * f64::from(1u32 << level);
        match config.solver {
            Solver::Equal => {
                let spec = config.grid_spec(scale);
                let grid = spec.build(&params)?;
                let sol = equalsolve::solve_closed(&params, &grid, config.mode.into())?;
                let g = equalsolve::g2_at_zero(&sol);
                values.push(g[component.0][component.1]);
                steps.push(grid.hr);
            }
            Solver::Ladder2 => {
                let grid = config.two_point_grid(scale)?;
                let sol = ladder2::solve_double_ladder(&params, &grid, LadderBoundary::BothBeams)?;
                let map = ladder2::correlation_map(&sol, component);
                values.push(map[grid.idx(grid.n - 1, grid.n - 1)]);
                steps.push(grid.h);
            }
            Solver::Full => {
                let grid = config.two_point_grid(scale)?;
                let bc = FullBoundary::single_beam(params.amplitude);
                let sol = fullsolve::solve_full(&params, &grid, &bc, config.include_vc)?;
                let a2 = params.amplitude * params.amplitude;
                let v = sol.ee[grid.idx(grid.n - 1, grid.n - 1)]
                    .get(component.0, component.1)
                    .norm_sqr()
                    / (a2 * a2);
                values.push(v);
                steps.push(grid.h);
            }
        }
    }
    let ratio = (steps[0] / steps[2]).sqrt();
    let report = estimate_order(values[0], values[1], values[2], ratio);
    let mut t = OutputTable::new(
        "converge",
        &[
            "f_coarse",
            "f_medium",
            "f_fine",
            "ratio",
            "order",
            "extrapolated",
            "converged",
        ],
    );
    t.provenance = standard_provenance(
        &hash_of(config),
        &format!(
            "steps=[{:.6e},{:.6e},{:.6e}] scale={grid_scale}",
            steps[0], steps[1], steps[2]
        ),
    );
    t.push_row(vec![
        report.f_coarse,
        report.f_medium,
        report.f_fine,
        report.ratio,
        report.order.unwrap_or(f64::NAN),
        report.extrapolated,
        if report.converged { 1.0 } else { 0.0 },
    ]);
    Ok(ExecOutcome {
        tables: vec![t],
        row_failures: 0,
        warnings: Vec::new(),
    })
}
