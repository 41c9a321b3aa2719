//! Physical parameters and derived quantities in dimensionless units.
//!
//! Conventions used everywhere in this crate: Gamma = 1 (both intermediate
//! levels share the same decay rate), lengths in absorption lengths, so the
//! medium spans [0, alpha] and velocities carry units of absorption length
//! times Gamma.  With these choices c/g^2 = 1 and the group-velocity matrix
//! reduces to Omega * Omega^dagger.

use crate::linalg::{Mat2, C64};
use crate::{Error, Result};

/// All physical inputs of a run, in dimensionless units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// One-photon detunings of the two probes, units of Gamma.
    pub delta1: f64,
    pub delta2: f64,
    /// Control Rabi matrix Omega_{j,l}, units of Gamma.
    pub rabi: Mat2,
    /// Optical depth; the medium length in absorption lengths.
    pub alpha: f64,
    /// Rydberg blockade radius, absorption lengths.
    pub rb: f64,
    /// Input probe amplitude.
    pub amplitude: f64,
    /// Speed of light in units of absorption length times Gamma; only the
    /// optional v/c correction terms depend on it.
    pub c_ratio: f64,
    /// When false the Rydberg-Rydberg interaction is switched off entirely
    /// (V = 0 at every separation), which turns the medium into an ideal EIT
    /// propagator.  Diagnostic fixed-point runs use this.
    pub interaction: bool,
}

impl SchemeParams {
    pub fn new(delta1: f64, delta2: f64, rabi: Mat2, alpha: f64, rb: f64) -> Result<Self> {
        let params = SchemeParams {
            delta1,
            delta2,
            rabi,
            alpha,
            rb,
            amplitude: 1.0,
            c_ratio: 1e4,
            interaction: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        self.amplitude = amplitude;
        self.validate()?;
        Ok(self)
    }

    pub fn with_c_ratio(mut self, c_ratio: f64) -> Result<Self> {
        self.c_ratio = c_ratio;
        self.validate()?;
        Ok(self)
    }

    pub fn without_interaction(mut self) -> Self {
        self.interaction = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta1.is_finite() || !self.delta2.is_finite() {
            return Err(Error::invalid("delta", "detunings must be finite"));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "optical depth must be positive"));
        }
        if !(self.rb > 0.0) || !self.rb.is_finite() {
            return Err(Error::invalid("rb", "blockade radius must be positive"));
        }
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::invalid(
                "amplitude",
                "input amplitude must be positive",
            ));
        }
        if !(self.c_ratio > 0.0) || !self.c_ratio.is_finite() {
            return Err(Error::invalid("c_ratio", "c ratio must be positive"));
        }
        for row in self.rabi.e.iter() {
            for v in row.iter() {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::invalid("rabi", "Rabi entries must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Largest Rabi magnitude; sets the blockade condition V(rb) = Omega^2.
    pub fn omega_max(&self) -> f64 {
        self.rabi
            .e
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// True when the control couplings are diagonal with equal strength
    /// (the double-ladder configuration).
    pub fn is_double_ladder(&self) -> bool {
        let o12 = self.rabi.get(0, 1).norm();
        let o21 = self.rabi.get(1, 0).norm();
        let d = (self.rabi.get(0, 0) - self.rabi.get(1, 1)).norm();
        o12 == 0.0 && o21 == 0.0 && d == 0.0
    }
}

/// Interaction strength at one separation.  The contact point r = 0 carries an
/// infinite interaction; all consumers must use the corresponding V -> inf
/// limit form instead of feeding the value into arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Finite(f64),
    Infinite,
}

impl Potential {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Potential::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Potential::Finite(v) => Some(*v),
            Potential::Infinite => None,
        }
    }
}

/// Quantities derived from [`SchemeParams`], immutable after construction.
#[derive(Debug, Clone, Copy)]
pub struct DerivedContext {
    /// Complex detunings 2*Delta_j - i.
    pub dtilde1: C64,
    pub dtilde2: C64,
    /// Group-velocity matrix Omega * Omega^dagger.
    pub v: Mat2,
    /// Average group velocity (v11 + v22) / 2.
    pub vbar: f64,
    /// van der Waals coefficient fixed by the blockade condition; zero when
    /// the interaction is switched off.
    pub c6: f64,
    /// Blockade radius widened by the one-photon detuning (uses delta1).
    pub rb_bar: f64,
}

impl DerivedContext {
    pub fn new(params: &SchemeParams) -> Result<Self> {
        params.validate()?;
        let v = group_velocity_matrix(&params.rabi);
        let vbar = 0.5 * (v.get(0, 0) + v.get(1, 1)).re;
        if vbar <= 0.0 {
            return Err(Error::invalid(
                "rabi",
                "group velocity matrix has zero trace",
            ));
        }
        let omega = params.omega_max();
        let c6 = if params.interaction {
            c6_from_rb(params.rb, omega)?
        } else {
            0.0
        };
        Ok(DerivedContext {
            dtilde1: complex_detuning(params.delta1, 1.0),
            dtilde2: complex_detuning(params.delta2, 1.0),
            v,
            vbar,
            c6,
            rb_bar: modified_blockade_radius(params.rb, params.delta1),
        })
    }

    pub fn dtilde(&self, j: usize) -> C64 {
        if j == 0 {
            self.dtilde1
        } else {
            self.dtilde2
        }
    }

    /// Interaction strength at separation `r` (sign of `r` is irrelevant).
    pub fn potential(&self, r: f64) -> Potential {
        vdw_potential(r, self.c6)
    }
}

/// Complex detuning `2*delta - i*gamma` encoding the intermediate-state decay.
pub fn complex_detuning(delta: f64, gamma: f64) -> C64 {
    C64::new(2.0 * delta, -gamma)
}

/// Group-velocity matrix `Omega * Omega^dagger` (Hermitian, PSD).
pub fn group_velocity_matrix(rabi: &Mat2) -> Mat2 {
    rabi.mul(&rabi.adjoint())
}

/// Blockade radius from the van der Waals coefficient: `(c6 / omega^2)^(1/6)`.
pub fn blockade_radius(c6: f64, omega_max: f64) -> Result<f64> {
    if !(c6 > 0.0) {
        return Err(Error::invalid("c6", "must be positive"));
    }
    if !(omega_max > 0.0) {
        return Err(Error::invalid("omega_max", "must be positive"));
    }
    Ok((c6 / (omega_max * omega_max)).powf(1.0 / 6.0))
}

/// Inverse of [`blockade_radius`]: `rb^6 * omega^2`.
pub fn c6_from_rb(rb: f64, omega_max: f64) -> Result<f64> {
    if !(rb > 0.0) {
        return Err(Error::invalid("rb", "must be positive"));
    }
    if !(omega_max > 0.0) {
        return Err(Error::invalid("omega_max", "must be positive"));
    }
    Ok(rb.powi(6) * omega_max * omega_max)
}

/// Blockade radius widened by a nonzero one-photon detuning:
/// `rb * ((2*delta)^2 + 1)^(1/12)`.
pub fn modified_blockade_radius(rb: f64, delta: f64) -> f64 {
    rb * ((2.0 * delta).powi(2) + 1.0).powf(1.0 / 12.0)
}

/// van der Waals interaction `c6 / r^6` with the contact-point sentinel.
///
/// For `c6 = 0` (interaction switched off) the potential vanishes everywhere,
/// including at contact.
pub fn vdw_potential(r: f64, c6: f64) -> Potential {
    if c6 == 0.0 {
        return Potential::Finite(0.0);
    }
    if r == 0.0 {
        return Potential::Infinite;
    }
    Potential::Finite(c6 / r.powi(6))
}

/// Builds the real symmetric Rabi matrix with `Omega_11 = Omega_22 = omega`
/// and off-diagonal entries chosen so the group-velocity matrix has the
/// requested off-to-diagonal ratio `v12/v11`.  The off-diagonal Rabi strength
/// never exceeds `omega`, so `omega` stays the blockade-defining maximum.
pub fn rabi_from_velocity_ratio(omega: f64, ratio: f64) -> Result<Mat2> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid("omega", "must be positive"));
    }
    if !(ratio.abs() <= 1.0) {
        return Err(Error::invalid(
            "v12_over_v11",
            "must lie in [-1, 1] (a PSD velocity matrix cannot exceed it)",
        ));
    }
    let x = if ratio == 0.0 {
        0.0
    } else {
        (1.0 - (1.0 - ratio * ratio).sqrt()) / ratio
    };
    let d = C64::new(omega, 0.0);
    let o = C64::new(omega * x, 0.0);
    Ok(Mat2::new(d, o, o, d))
}

/// Convenience constructor for a diagonal (double-ladder) Rabi matrix.
pub fn rabi_diagonal(omega: f64) -> Mat2 {
    Mat2::diag(C64::new(omega, 0.0), C64::new(omega, 0.0))
}
