//! Observed-order estimation and Richardson extrapolation from three grid
//! levels.

/// Result of a three-level convergence study at grid ratios 1 : 1/r : 1/r^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub f_coarse: f64,
    pub f_medium: f64,
    pub f_fine: f64,
    pub ratio: f64,
    /// Observed order; `None` when the levels are indistinguishable.
    pub order: Option<f64>,
    /// Richardson-extrapolated value (the fine value when converged).
    pub extrapolated: f64,
    /// True when successive differences are below resolution (< 1e-14).
    pub converged: bool,
}

/// Estimates the observed order `p = log(|f_c - f_m| / |f_m - f_f|) / log(r)`
/// and extrapolates `f = f_f + (f_f - f_m) / (r^p - 1)`.
pub fn estimate_order(f_coarse: f64, f_medium: f64, f_fine: f64, ratio: f64) -> ConvergenceReport {
    let d1 = (f_coarse - f_medium).abs();
    let d2 = (f_medium - f_fine).abs();
    let scale = f_coarse.abs().max(f_medium.abs()).max(f_fine.abs());
    if d1 < 1e-14 * scale.max(1.0) || d2 < 1e-14 * scale.max(1.0) {
        return ConvergenceReport {
            f_coarse,
            f_medium,
            f_fine,
            ratio,
            order: None,
            extrapolated: f_fine,
            converged: true,
        };
    }
    let p = (d1 / d2).ln() / ratio.ln();
    let extrapolated = f_fine + (f_fine - f_medium) / (ratio.powf(p) - 1.0);
    ConvergenceReport {
        f_coarse,
        f_medium,
        f_fine,
        ratio,
        order: Some(p),
        extrapolated,
        converged: false,
    }
}
