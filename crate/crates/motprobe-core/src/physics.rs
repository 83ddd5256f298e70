//! Two-level scattering rate and the photon budget that links trapped-atom
//! fluorescence to the count rate at the fiber-coupled detector.
//!
//! Canonical units: rates in 1/s, lengths in µm, intensities in mW/cm²,
//! frequencies in MHz. Conversions from other units happen at the
//! configuration boundary, never here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Planck constant (J·s), CODATA 2018 exact.
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Cooling-laser parameters.
///
/// The saturation parameter convention is single-beam: `s = beam_intensity /
/// isat_eff`, with `isat_eff` calibrated so the default configuration
/// reproduces the measured scattering rate. Both knobs stay configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig<F> {
    /// Detuning from the cooling transition (MHz, red = negative).
    pub detuning_mhz: F,
    /// Single-beam intensity (mW/cm²).
    pub beam_intensity_mw_cm2: F,
    /// Number of cooling beams.
    pub n_beams: u32,
    /// Natural linewidth Γ/2π (MHz).
    pub linewidth_mhz: F,
    /// Effective saturation intensity (mW/cm²).
    pub isat_eff_mw_cm2: F,
    /// Fluorescence wavelength (µm).
    pub wavelength_um: F,
}

impl<F: Real> LaserConfig<F> {
    /// Defaults: 12 MHz red detuning, 2.4 mW/cm² per beam, six beams,
    /// Rb D2 linewidth, isat calibrated to the measured scattering rate.
    pub fn paper_default() -> Self {
        LaserConfig {
            detuning_mhz: F::from_f64(-12.0),
            beam_intensity_mw_cm2: F::from_f64(2.4),
            n_beams: 6,
            linewidth_mhz: F::from_f64(6.066),
            isat_eff_mw_cm2: F::from_f64(4.08),
            wavelength_um: F::from_f64(0.780),
        }
    }

    /// Angular natural linewidth Γ (rad/s).
    pub fn gamma_rad_per_s(&self) -> F {
        F::from_f64(2.0) * F::PI() * self.linewidth_mhz * F::from_f64(1.0e6)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.beam_intensity_mw_cm2.is_finite()
            && self.beam_intensity_mw_cm2 >= F::zero()
            && self.detuning_mhz.is_finite()
            && self.n_beams >= 1
            && self.linewidth_mhz.is_finite()
            && self.linewidth_mhz > F::zero()
            && self.isat_eff_mw_cm2.is_finite()
            && self.isat_eff_mw_cm2 > F::zero()
            && self.wavelength_um.is_finite()
            && self.wavelength_um > F::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "laser: require beam_intensity >= 0, n_beams >= 1, linewidth > 0, \
                 isat_eff > 0, wavelength > 0, all finite"
                    .into(),
            ))
        }
    }
}

/// Tapered-nanofiber geometry and efficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec<F> {
    /// Waist diameter (µm).
    pub waist_diameter_um: F,
    /// Radial depth of the sensing shell beyond the fiber surface (µm).
    pub interaction_range_um: F,
    /// Power transmission from the waist to the detector end, in (0, 1].
    pub transmission: F,
    /// Fraction of spontaneous emission coupled toward the detector, in (0, 1).
    pub coupling_eta_f: F,
}

impl<F: Real> FiberSpec<F> {
    /// Defaults: 600 nm waist, 300 nm sensing shell, T = 0.8, η_f = 0.2.
    pub fn paper_default() -> Self {
        FiberSpec {
            waist_diameter_um: F::from_f64(0.6),
            interaction_range_um: F::from_f64(0.3),
            transmission: F::from_f64(0.8),
            coupling_eta_f: F::from_f64(0.2),
        }
    }

    /// Waist radius (µm): inner radius of the sensing shell.
    pub fn waist_radius_um(&self) -> F {
        self.waist_diameter_um / F::from_f64(2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.waist_diameter_um.is_finite()
            && self.waist_diameter_um > F::zero()
            && self.interaction_range_um.is_finite()
            && self.interaction_range_um > F::zero()
            && self.transmission > F::zero()
            && self.transmission <= F::one()
            && self.coupling_eta_f > F::zero()
            && self.coupling_eta_f < F::one();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "fiber: require waist_diameter > 0, interaction_range > 0, \
                 0 < transmission <= 1, 0 < coupling_eta_f < 1"
                    .into(),
            ))
        }
    }
}

/// Factors of the detected-count-rate product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonBudget<F> {
    /// Effective number of atoms in the sensing shell (dimensionless).
    pub n_eff: F,
    /// Scattering rate per atom (1/s).
    pub gamma_sc_per_s: F,
    /// Fiber coupling fraction.
    pub eta_f: F,
    /// Detector quantum efficiency.
    pub eta_d: F,
    /// Waist-to-detector transmission.
    pub transmission: F,
}

impl<F: Real> PhotonBudget<F> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            self.n_eff,
            self.gamma_sc_per_s,
            self.eta_f,
            self.eta_d,
            self.transmission,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= F::zero());
        let bounded = self.eta_f <= F::one() && self.eta_d <= F::one() && self.transmission <= F::one();
        if nonneg && bounded {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "photon budget: factors must be finite, >= 0, efficiencies <= 1".into(),
            ))
        }
    }
}

/// Photons scattered per atom per second under the cooling light.
///
/// γ = (Γ/2) · s / (1 + s + (2δ/Γ)²), with s the single-beam saturation
/// parameter. Monotone in intensity and bounded above by Γ/2.
pub fn scattering_rate<F: Real>(laser: &LaserConfig<F>) -> Result<F> {
    laser.validate()?;
    let s = laser.beam_intensity_mw_cm2 / laser.isat_eff_mw_cm2;
    let two_delta_over_gamma = F::from_f64(2.0) * laser.detuning_mhz / laser.linewidth_mhz;
    let denom = F::one() + s + two_delta_over_gamma * two_delta_over_gamma;
    Ok(laser.gamma_rad_per_s() / F::from_f64(2.0) * s / denom)
}

/// Count rate at the detector (1/s): N_eff · η_f · γ_sc · η_D · T.
pub fn photon_rate<F: Real>(budget: &PhotonBudget<F>) -> Result<F> {
    budget.validate()?;
    Ok(budget.n_eff * budget.eta_f * budget.gamma_sc_per_s * budget.eta_d * budget.transmission)
}

/// Detected counts per second per effective atom: η_f · γ_sc · η_D · T.
pub fn rate_per_effective_atom<F: Real>(
    laser: &LaserConfig<F>,
    fiber: &FiberSpec<F>,
    eta_d: F,
) -> Result<F> {
    fiber.validate()?;
    Ok(scattering_rate(laser)? * fiber.coupling_eta_f * eta_d * fiber.transmission)
}

/// Photon energy h·c/λ (J) for a wavelength in µm.
pub fn photon_energy<F: Real>(wavelength_um: F) -> Result<F> {
    if !(wavelength_um.is_finite() && wavelength_um > F::zero()) {
        return Err(Error::InvalidInput("wavelength must be positive".into()));
    }
    let hc = F::from_f64(PLANCK_H * SPEED_OF_LIGHT);
    Ok(hc / (wavelength_um * F::from_f64(1.0e-6)))
}
