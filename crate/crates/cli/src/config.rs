//! Run configuration: a strict TOML document with defaults, validated against
//! the selected solver's preconditions before any computation starts.

use serde::{Deserialize, Serialize};

use rydeit::equalsolve::{GridSpec, SolveMode};
use rydeit::model::{rabi_diagonal, rabi_from_velocity_ratio, SchemeParams};
use rydeit::numerics::TwoPointGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Full,
    Equal,
    Ladder2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Piecewise,
    Smooth,
}

impl From<Mode> for SolveMode {
    fn from(m: Mode) -> SolveMode {
        match m {
            Mode::Piecewise => SolveMode::Piecewise,
            Mode::Smooth => SolveMode::Smooth,
        }
    }
}

fn default_amplitude() -> f64 {
    1.0
}
fn default_c_ratio() -> f64 {
    1e4
}
fn default_omega() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_nz() -> usize {
    301
}
fn default_cells() -> usize {
    12
}
fn default_r_step_factor() -> f64 {
    0.5
}
fn default_delta_min() -> f64 {
    -4.0
}
fn default_delta_max() -> f64 {
    4.0
}
fn default_delta_step() -> f64 {
    0.25
}
fn default_components() -> Vec<String> {
    vec!["11".into(), "12".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Nodes per axis for the (z, z') solvers.
    #[serde(default = "default_nz")]
    pub nz: usize,
    /// Cells spanned by the widened blockade radius on the relative axis.
    #[serde(default = "default_cells")]
    pub cells_per_rb: usize,
    /// R step as a fraction of the r step.
    #[serde(default = "default_r_step_factor")]
    pub r_step_factor: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nz: default_nz(),
            cells_per_rb: default_cells(),
            r_step_factor: default_r_step_factor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
    #[serde(default = "default_delta_step")]
    pub delta_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            delta_min: default_delta_min(),
            delta_max: default_delta_max(),
            delta_step: default_delta_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Pair components emitted by `map`, e.g. ["11", "12"].
    #[serde(default = "default_components")]
    pub components: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            components: default_components(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: Solver,
    pub alpha: f64,
    pub rb: f64,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_c_ratio")]
    pub c_ratio: f64,
    /// Off-to-diagonal ratio of the group-velocity matrix (0 gives diagonal
    /// couplings).
    #[serde(default)]
    pub v12_over_v11: f64,
    /// Largest control Rabi frequency; sets the blockade condition.
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub include_vc: bool,
    #[serde(default)]
    pub lossless: bool,
    #[serde(default = "default_true")]
    pub interaction: bool,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses and fully validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| err("<document>", e.to_string()))?;
    validate(&config)?;
    Ok(config)
}

pub fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    if !(config.alpha > 0.0) || !config.alpha.is_finite() {
        return Err(err("alpha", "must be a positive finite optical depth"));
    }
    if !(config.rb > 0.0) || !config.rb.is_finite() {
        return Err(err("rb", "must be a positive finite blockade radius"));
    }
    if !(config.amplitude > 0.0) || !config.amplitude.is_finite() {
        return Err(err("amplitude", "must be positive"));
    }
    if !(config.c_ratio > 0.0) || !config.c_ratio.is_finite() {
        return Err(err("c_ratio", "must be positive"));
    }
    if !(config.omega > 0.0) || !config.omega.is_finite() {
        return Err(err("omega", "must be positive"));
    }
    if !config.delta1.is_finite() || !config.delta2.is_finite() {
        return Err(err("delta1", "detunings must be finite"));
    }
    if config.v12_over_v11.abs() > 1.0 || !config.v12_over_v11.is_finite() {
        return Err(err("v12_over_v11", "must lie in [-1, 1]"));
    }
    match config.solver {
        Solver::Equal => {
            if config.delta1 != config.delta2 {
                return Err(err(
                    "delta2",
                    "the equal-detuning solver requires delta1 == delta2",
                ));
            }
            if config.include_vc {
                return Err(err("include_vc", "only the full solver has v/c terms"));
            }
        }
        Solver::Ladder2 => {
            if config.v12_over_v11 != 0.0 {
                return Err(err(
                    "v12_over_v11",
                    "the double-ladder solver requires diagonal couplings (set 0)",
                ));
            }
            if config.mode == Mode::Smooth {
                return Err(err("mode", "smooth mode applies to the equal solver only"));
            }
            if config.include_vc {
                return Err(err("include_vc", "only the full solver has v/c terms"));
            }
            if config.lossless {
                return Err(err(
                    "lossless",
                    "the lossless diagnostic applies to the equal solver only",
                ));
            }
        }
        Solver::Full => {
            if config.mode == Mode::Smooth {
                return Err(err("mode", "smooth mode applies to the equal solver only"));
            }
            if config.lossless {
                return Err(err(
                    "lossless",
                    "the lossless diagnostic applies to the equal solver only",
                ));
            }
        }
    }
    if config.grid.nz < 2 {
        return Err(err("grid.nz", "need at least 2 nodes per axis"));
    }
    if config.grid.cells_per_rb < 8 {
        return Err(err(
            "grid.cells_per_rb",
            "blockade radius must span at least 8 cells",
        ));
    }
    if !(config.grid.r_step_factor > 0.0) || !config.grid.r_step_factor.is_finite() {
        return Err(err("grid.r_step_factor", "must be positive"));
    }
    if !config.sweep.delta_min.is_finite()
        || !config.sweep.delta_max.is_finite()
        || config.sweep.delta_min > config.sweep.delta_max
    {
        return Err(err(
            "sweep.delta_min",
            "sweep range must be finite with min <= max",
        ));
    }
    if !(config.sweep.delta_step > 0.0) || !config.sweep.delta_step.is_finite() {
        return Err(err("sweep.delta_step", "must be positive"));
    }
    if config.output.components.is_empty() {
        return Err(err("output.components", "need at least one pair component"));
    }
    for c in &config.output.components {
        parse_component(c).ok_or_else(|| {
            err(
                "output.components",
                format!("unknown pair component `{c}` (expected 11, 12, 21 or 22)"),
            )
        })?;
    }
    Ok(())
}

pub fn parse_component(label: &str) -> Option<(usize, usize)> {
    match label {
        "11" => Some((0, 0)),
        "12" => Some((0, 1)),
        "21" => Some((1, 0)),
        "22" => Some((1, 1)),
        _ => None,
    }
}

/// Canonical serialized form with all defaults resolved.
pub fn to_toml(config: &RunConfig) -> String {
    toml::to_string(config).expect("config serializes")
}

impl RunConfig {
    pub fn scheme_params(&self) -> Result<SchemeParams, ConfigError> {
        let rabi = match self.solver {
            Solver::Ladder2 => rabi_diagonal(self.omega),
            _ => rabi_from_velocity_ratio(self.omega, self.v12_over_v11)
                .map_err(|e| err("v12_over_v11", e.to_string()))?,
        };
        let mut params = SchemeParams::new(self.delta1, self.delta2, rabi, self.alpha, self.rb)
            .and_then(|p| p.with_amplitude(self.amplitude))
            .and_then(|p| p.with_c_ratio(self.c_ratio))
            .map_err(|e| err("<params>", e.to_string()))?;
        if !self.interaction {
            params = params.without_interaction();
        }
        Ok(params)
    }

    /// Grid spec for the equal-detuning solver, scaled by `grid_scale`.
    pub fn grid_spec(&self, grid_scale: f64) -> GridSpec {
        GridSpec {
            cells_per_rbar: ((self.grid.cells_per_rb as f64) * grid_scale)
                .round()
                .max(8.0) as usize,
            r_step_factor: self.grid.r_step_factor,
        }
    }

    /// (z, z') grid for the full and ladder solvers, scaled by `grid_scale`.
    pub fn two_point_grid(&self, grid_scale: f64) -> Result<TwoPointGrid, ConfigError> {
        let n = (((self.grid.nz - 1) as f64) * grid_scale).round() as usize + 1;
        TwoPointGrid::new(n, self.alpha).map_err(|e| err("grid.nz", e.to_string()))
    }

    /// Inclusive detuning list of the sweep section.
    pub fn sweep_deltas(&self) -> Vec<f64> {
        let SweepConfig {
            delta_min,
            delta_max,
            delta_step,
        } = self.sweep;
        let count = ((delta_max - delta_min) / delta_step + 1.5).floor() as usize;
        (0..count.max(1))
            .map(|k| delta_min + k as f64 * delta_step)
            .filter(|d| *d <= delta_max + 1e-12 * delta_step)
            .collect()
    }
}
