//! Full experiment description in canonical internal units (µm, s,
//! atoms/µm³, 1/s). Construction from unit-annotated files lives with the
//! command-line front end; this module owns defaults and validation.

use serde::{Deserialize, Serialize};

use crate::cloud::{CloudModel, RegimeParams};
use crate::detector::{PhotodiodeSpec, SpcmSpec};
use crate::dynamics::{TnfSignalModel, TrapDynamics};
use crate::error::{Error, Result};
use crate::physics::{rate_per_effective_atom, FiberSpec, LaserConfig};
use crate::scalar::Real;

/// Trap loading/decay parameters.
///
/// The lifetime depends on background pressure, so it carries one value for
/// dispenser-on stretches and one for dispenser-off stretches. When no
/// capture rate is given it is calibrated so the steady-state fiber signal
/// of the loaded trap contributes exactly `steady_mot_rate_per_s` counts/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig<F> {
    /// 1/e lifetime with the dispenser running (s).
    pub loading_tau_s: F,
    /// 1/e lifetime with the dispenser off (s).
    pub decay_tau_s: F,
    /// Atoms held when a decay run starts.
    pub decay_initial_atoms: F,
    /// Capture rate from background vapor (atoms/s); `None` = calibrate.
    pub capture_rate_per_s: Option<F>,
    /// Calibration target: fiber count-rate step of the loaded trap (1/s).
    pub steady_mot_rate_per_s: F,
}

impl<F: Real> DynamicsConfig<F> {
    /// Loading 0.43 s, decay 9.4 s, decay start at 10× the regime
    /// crossover, capture rate calibrated to the observed 4×10⁵ step.
    pub fn paper_default() -> Self {
        DynamicsConfig {
            loading_tau_s: F::from_f64(0.43),
            decay_tau_s: F::from_f64(9.4),
            decay_initial_atoms: F::from_f64(5.0e5),
            capture_rate_per_s: None,
            steady_mot_rate_per_s: F::from_f64(4.0e5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let taus_ok = self.loading_tau_s.is_finite()
            && self.loading_tau_s > F::zero()
            && self.decay_tau_s.is_finite()
            && self.decay_tau_s > F::zero();
        let rest_ok = self.decay_initial_atoms.is_finite()
            && self.decay_initial_atoms >= F::zero()
            && self.steady_mot_rate_per_s.is_finite()
            && self.steady_mot_rate_per_s >= F::zero()
            && self
                .capture_rate_per_s
                .map_or(true, |r| r.is_finite() && r >= F::zero());
        if taus_ok && rest_ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "dynamics: require lifetimes > 0, atom counts and rates >= 0".into(),
            ))
        }
    }
}

/// Durations and grids of the canned experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig<F> {
    /// Sample cadence for all time-domain runs (s).
    pub sample_interval_s: F,
    /// Length of each switching-sequence segment (s).
    pub steps_segment_s: F,
    pub loading_duration_s: F,
    pub decay_duration_s: F,
    /// Scan positions span ± this offset (µm).
    pub scan_half_span_um: F,
    pub scan_points: usize,
}

impl<F: Real> SamplingConfig<F> {
    pub fn paper_default() -> Self {
        SamplingConfig {
            sample_interval_s: F::from_f64(0.1),
            steps_segment_s: F::from_f64(10.0),
            loading_duration_s: F::from_f64(5.0),
            decay_duration_s: F::from_f64(20.0),
            scan_half_span_um: F::from_f64(3250.0),
            scan_points: 101,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sample_interval_s > F::zero()
            && self.steps_segment_s > F::zero()
            && self.loading_duration_s > F::zero()
            && self.decay_duration_s > F::zero()
            && self.scan_half_span_um > F::zero()
            && self.scan_points >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "sampling: require positive intervals/durations/span, >= 2 scan points".into(),
            ))
        }
    }

    /// Symmetric scan grid (µm), `scan_points` positions across the span.
    pub fn scan_positions_um(&self) -> Vec<F> {
        let n = self.scan_points;
        let step = F::from_f64(2.0) * self.scan_half_span_um / F::from_f64((n - 1) as f64);
        (0..n)
            .map(|i| -self.scan_half_span_um + step * F::from_f64(i as f64))
            .collect()
    }
}

/// Everything a run needs: optics, detectors, cloud, regime, dynamics,
/// sampling, and the RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig<F> {
    pub laser: LaserConfig<F>,
    pub fiber: FiberSpec<F>,
    pub spcm: SpcmSpec<F>,
    pub photodiode: PhotodiodeSpec<F>,
    pub cloud_template: CloudModel<F>,
    pub regime: RegimeParams<F>,
    pub dynamics: DynamicsConfig<F>,
    pub sampling: SamplingConfig<F>,
    pub seed: u64,
}

impl<F: Real> ExperimentConfig<F> {
    /// Every default named by the measured system.
    pub fn paper_default() -> Self {
        ExperimentConfig {
            laser: LaserConfig::paper_default(),
            fiber: FiberSpec::paper_default(),
            spcm: SpcmSpec::paper_default(),
            photodiode: PhotodiodeSpec::paper_default(),
            cloud_template: CloudModel::paper_default(),
            regime: RegimeParams::paper_default(),
            dynamics: DynamicsConfig::paper_default(),
            sampling: SamplingConfig::paper_default(),
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.laser.validate()?;
        self.fiber.validate()?;
        self.spcm.validate()?;
        self.photodiode.validate()?;
        self.cloud_template.validate()?;
        self.regime.validate()?;
        self.dynamics.validate()?;
        self.sampling.validate()
    }

    /// Capture rate R: configured value, or the calibrated one where the
    /// loaded steady state R·τ contributes `steady_mot_rate_per_s` on the
    /// fiber channel.
    pub(crate) fn resolve_capture_rate(
        &self,
        tnf: &TnfSignalModel<F>,
        per_atom_rate: F,
    ) -> Result<F> {
        if let Some(r) = self.dynamics.capture_rate_per_s {
            return Ok(r);
        }
        if per_atom_rate <= F::zero() {
            return Err(Error::InvalidInput(
                "cannot calibrate capture rate with zero per-atom rate".into(),
            ));
        }
        let effective_target = self.dynamics.steady_mot_rate_per_s / per_atom_rate;
        let steady_atoms = tnf.atoms_for_visible(effective_target)?;
        Ok(steady_atoms / self.dynamics.loading_tau_s)
    }

    /// Capture rate with a freshly built signal model (one quadrature).
    pub fn capture_rate_per_s(&self) -> Result<F> {
        let tnf = TnfSignalModel::new(&self.regime, &self.cloud_template, &self.fiber)?;
        let per_atom =
            rate_per_effective_atom(&self.laser, &self.fiber, self.spcm.quantum_efficiency_eta_d)?;
        self.resolve_capture_rate(&tnf, per_atom)
    }

    /// Rate-equation parameters for a loading run (dispenser on, empty trap).
    pub fn loading_dynamics(&self) -> Result<TrapDynamics<F>> {
        Ok(TrapDynamics {
            capture_rate_per_s: self.capture_rate_per_s()?,
            lifetime_tau_s: self.dynamics.loading_tau_s,
            initial_atoms: F::zero(),
        })
    }

    /// Rate-equation parameters for a decay run (dispenser off).
    pub fn decay_dynamics(&self) -> TrapDynamics<F> {
        TrapDynamics {
            capture_rate_per_s: F::zero(),
            lifetime_tau_s: self.dynamics.decay_tau_s,
            initial_atoms: self.dynamics.decay_initial_atoms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn paper_defaults_validate() {
        let cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
        cfg.validate().unwrap();
        assert_eq!(cfg.laser.detuning_mhz, -12.0);
        assert_eq!(cfg.fiber.waist_diameter_um, 0.6);
        assert_eq!(cfg.spcm.dark_ambient_rate_per_s, 1.5e5);
        assert_eq!(cfg.regime.crossover_atoms, 5.0e4);
        assert_eq!(cfg.dynamics.loading_tau_s, 0.43);
        assert_eq!(cfg.dynamics.decay_tau_s, 9.4);
        assert_eq!(cfg.dynamics.decay_initial_atoms, 5.0e5);
    }

    #[test]
    fn calibrated_capture_rate_hits_the_step_target() {
        let cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
        let r = cfg.capture_rate_per_s().unwrap();
        let steady_atoms = r * cfg.dynamics.loading_tau_s;

        let tnf =
            TnfSignalModel::new(&cfg.regime, &cfg.cloud_template, &cfg.fiber).unwrap();
        let per_atom = rate_per_effective_atom(
            &cfg.laser,
            &cfg.fiber,
            cfg.spcm.quantum_efficiency_eta_d,
        )
        .unwrap();
        assert_relative_eq!(
            per_atom * tnf.visible(steady_atoms),
            4.0e5,
            max_relative = 1e-10
        );
    }

    #[test]
    fn explicit_capture_rate_wins() {
        let mut cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
        cfg.dynamics.capture_rate_per_s = Some(1.0e6);
        assert_eq!(cfg.capture_rate_per_s().unwrap(), 1.0e6);
    }

    #[test]
    fn validation_surfaces_nested_failures() {
        let mut cfg: ExperimentConfig<f64> = ExperimentConfig::paper_default();
        cfg.fiber.transmission = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scan_grid_is_symmetric() {
        let sampling: SamplingConfig<f64> = SamplingConfig::paper_default();
        let xs = sampling.scan_positions_um();
        assert_eq!(xs.len(), 101);
        assert_relative_eq!(xs[0], -3250.0, max_relative = 1e-12);
        assert_relative_eq!(xs[100], 3250.0, max_relative = 1e-12);
        assert_relative_eq!(xs[50], 0.0, epsilon = 1e-9);
    }
}
