//! Detector channels: stochastic photon counting on the fiber's SPCM and
//! the deterministic photodiode voltage chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::photon_energy;
use crate::rng::SplitMix64;
use crate::scalar::Real;

/// Single-photon counting module and its background terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcmSpec<F> {
    /// Detector quantum efficiency η_D, in (0, 1].
    pub quantum_efficiency_eta_d: F,
    /// Dark counts plus ambient laboratory light (1/s).
    pub dark_ambient_rate_per_s: F,
    /// Extra counts with the repump laser on (1/s).
    pub repump_scatter_rate_per_s: F,
    /// Extra counts with the cooling laser on (1/s).
    pub cooling_scatter_rate_per_s: F,
    /// Counter gate time (s).
    pub gate_time_s: F,
}

impl<F: Real> SpcmSpec<F> {
    /// Background levels read off the switching-sequence measurement:
    /// 1.5×10⁵ dark/ambient, +2×10⁴ repump, +4×10⁴ cooling; 0.1 s gate.
    pub fn paper_default() -> Self {
        SpcmSpec {
            quantum_efficiency_eta_d: F::from_f64(0.6),
            dark_ambient_rate_per_s: F::from_f64(1.5e5),
            repump_scatter_rate_per_s: F::from_f64(2.0e4),
            cooling_scatter_rate_per_s: F::from_f64(4.0e4),
            gate_time_s: F::from_f64(0.1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates_ok = [
            self.dark_ambient_rate_per_s,
            self.repump_scatter_rate_per_s,
            self.cooling_scatter_rate_per_s,
        ]
        .iter()
        .all(|r| r.is_finite() && *r >= F::zero());
        let ok = rates_ok
            && self.quantum_efficiency_eta_d > F::zero()
            && self.quantum_efficiency_eta_d <= F::one()
            && self.gate_time_s.is_finite()
            && self.gate_time_s > F::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "spcm: require 0 < eta_D <= 1, rates >= 0, gate > 0".into(),
            ))
        }
    }
}

/// Photodiode imaging chain for whole-cloud fluorescence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotodiodeSpec<F> {
    /// Solid angle × optics collection efficiency, in [0, 1).
    pub collection_fraction: F,
    /// Responsivity (A/W).
    pub responsivity_a_per_w: F,
    /// Transimpedance load (Ω).
    pub load_resistance_ohm: F,
    /// Constant background level (V), subtracted before analysis.
    pub background_volts: F,
}

impl<F: Real> PhotodiodeSpec<F> {
    pub fn paper_default() -> Self {
        PhotodiodeSpec {
            collection_fraction: F::from_f64(0.01),
            responsivity_a_per_w: F::from_f64(0.5),
            load_resistance_ohm: F::from_f64(1.0e6),
            background_volts: F::from_f64(0.05),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.collection_fraction >= F::zero()
            && self.collection_fraction < F::one()
            && self.responsivity_a_per_w.is_finite()
            && self.responsivity_a_per_w >= F::zero()
            && self.load_resistance_ohm.is_finite()
            && self.load_resistance_ohm >= F::zero()
            && self.background_volts.is_finite()
            && self.background_volts >= F::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "photodiode: require 0 <= collection < 1, responsivity >= 0, \
                 load >= 0, background >= 0"
                    .into(),
            ))
        }
    }
}

/// One gated SPCM reading: Poisson counts with mean `expected_rate · gate`.
///
/// The sampling algorithm is fixed for reproducibility:
/// * mean < 30: inversion by sequential search — draw one unit uniform u,
///   then walk k = 0, 1, … accumulating the pmf until the cdf exceeds u;
/// * mean ≥ 30: normal approximation — draw uniforms u₁, u₂, form
///   z = √(−2 ln(1 − u₁)) · cos(2π u₂), and return
///   max(0, round(mean + z·√mean)).
///
/// All arithmetic is in f64 regardless of the scalar type, so a fixture
/// produced at one precision replays at any other.
pub fn spcm_sample<F: Real>(
    expected_rate: F,
    spec: &SpcmSpec<F>,
    rng: &mut SplitMix64,
) -> Result<u64> {
    spec.validate()?;
    if !(expected_rate.is_finite() && expected_rate >= F::zero()) {
        return Err(Error::InvalidRate(format!(
            "expected rate must be finite and >= 0, got {expected_rate}"
        )));
    }
    let mean = expected_rate.to_f64() * spec.gate_time_s.to_f64();
    Ok(poisson_draw(mean, rng))
}

/// Poisson draw with the documented two-branch algorithm.
pub(crate) fn poisson_draw(mean: f64, rng: &mut SplitMix64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let u = rng.next_unit_f64();
        let mut k = 0u64;
        let mut pmf = (-mean).exp();
        let mut cdf = pmf;
        while u > cdf {
            k += 1;
            pmf *= mean / k as f64;
            cdf += pmf;
            if pmf == 0.0 {
                break; // cdf saturated by rounding
            }
        }
        k
    } else {
        let u1 = rng.next_unit_f64();
        let u2 = rng.next_unit_f64();
        let z = (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        let value = (mean + z * mean.sqrt()).round();
        if value < 0.0 {
            0
        } else {
            value as u64
        }
    }
}

/// Photodiode output voltage for `n_atoms` scattering at `gamma_sc`:
/// V = N · γ_sc · E_photon · collection · responsivity · load.
pub fn photodiode_voltage<F: Real>(
    n_atoms: F,
    gamma_sc_per_s: F,
    spec: &PhotodiodeSpec<F>,
    wavelength_um: F,
) -> Result<F> {
    spec.validate()?;
    if !(n_atoms.is_finite() && n_atoms >= F::zero()) {
        return Err(Error::InvalidInput("atom number must be >= 0".into()));
    }
    let power = n_atoms * gamma_sc_per_s * photon_energy(wavelength_um)? * spec.collection_fraction;
    Ok(power * spec.responsivity_a_per_w * spec.load_resistance_ohm)
}
