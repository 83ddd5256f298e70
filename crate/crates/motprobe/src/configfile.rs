//! Configuration files: JSON with explicit units in the key names
//! (mm, mW/cm², MHz), merged over the built-in defaults.
//!
//! Unknown keys are errors; keys left out fall back to the defaults with a
//! notice listing what was filled in. Lengths and densities convert to the
//! internal µm / atoms-per-µm³ units at this boundary.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use motprobe_core::cloud::{CloudModel, CloudShape, RegimeParams};
use motprobe_core::config::{DynamicsConfig, SamplingConfig};
use motprobe_core::detector::{PhotodiodeSpec, SpcmSpec};
use motprobe_core::physics::{FiberSpec, LaserConfig};
use motprobe_core::ExperimentConfig64;

use crate::errors::{RunError, RunResult};

const MM_TO_UM: f64 = 1000.0;
const PER_MM3_TO_PER_UM3: f64 = 1.0e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileConfig {
    pub seed: u64,
    pub laser: FileLaser,
    pub fiber: FileFiber,
    pub spcm: FileSpcm,
    pub photodiode: FilePhotodiode,
    pub cloud: FileCloud,
    pub regime: FileRegime,
    pub dynamics: FileDynamics,
    pub sampling: FileSampling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileLaser {
    #[serde(rename = "detuning_MHz")]
    pub detuning_mhz: f64,
    #[serde(rename = "beam_intensity_mW_cm2")]
    pub beam_intensity_mw_cm2: f64,
    pub n_beams: u32,
    #[serde(rename = "linewidth_MHz")]
    pub linewidth_mhz: f64,
    #[serde(rename = "isat_eff_mW_cm2")]
    pub isat_eff_mw_cm2: f64,
    pub wavelength_um: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileFiber {
    pub waist_diameter_um: f64,
    pub interaction_range_um: f64,
    #[serde(rename = "transmission_T")]
    pub transmission: f64,
    pub coupling_eta_f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileSpcm {
    #[serde(rename = "quantum_efficiency_eta_D")]
    pub quantum_efficiency_eta_d: f64,
    pub dark_ambient_rate_per_s: f64,
    pub repump_scatter_rate_per_s: f64,
    pub cooling_scatter_rate_per_s: f64,
    pub gate_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilePhotodiode {
    pub collection_fraction: f64,
    #[serde(rename = "responsivity_A_per_W")]
    pub responsivity_a_per_w: f64,
    pub load_resistance_ohm: f64,
    pub background_volts: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileCloud {
    pub shape: CloudShape,
    pub center_mm: [f64; 3],
    pub radii_mm: [f64; 3],
    pub peak_density_per_mm3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRegime {
    pub crossover_atoms: f64,
    /// `null` ties the constant-density regime to the cloud template so the
    /// geometry is continuous at the crossover.
    pub constant_density_per_mm3: Option<f64>,
    pub central_density_exponent_alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDynamics {
    pub loading_tau_s: f64,
    pub decay_tau_s: f64,
    pub decay_initial_atoms: f64,
    /// `null` calibrates the capture rate to `steady_mot_rate_per_s`.
    pub capture_rate_per_s: Option<f64>,
    pub steady_mot_rate_per_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileSampling {
    pub sample_interval_s: f64,
    pub steps_segment_s: f64,
    pub loading_duration_s: f64,
    pub decay_duration_s: f64,
    pub scan_half_span_mm: f64,
    pub scan_points: usize,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            seed: 42,
            laser: FileLaser {
                detuning_mhz: -12.0,
                beam_intensity_mw_cm2: 2.4,
                n_beams: 6,
                linewidth_mhz: 6.066,
                isat_eff_mw_cm2: 4.08,
                wavelength_um: 0.780,
            },
            fiber: FileFiber {
                waist_diameter_um: 0.6,
                interaction_range_um: 0.3,
                transmission: 0.8,
                coupling_eta_f: 0.2,
            },
            spcm: FileSpcm {
                quantum_efficiency_eta_d: 0.6,
                dark_ambient_rate_per_s: 1.5e5,
                repump_scatter_rate_per_s: 2.0e4,
                cooling_scatter_rate_per_s: 4.0e4,
                gate_time_s: 0.1,
            },
            photodiode: FilePhotodiode {
                collection_fraction: 0.01,
                responsivity_a_per_w: 0.5,
                load_resistance_ohm: 1.0e6,
                background_volts: 0.05,
            },
            cloud: FileCloud {
                shape: CloudShape::Gaussian,
                center_mm: [0.0; 3],
                radii_mm: [0.65, 0.65, 1.0],
                peak_density_per_mm3: 4.0e6,
            },
            regime: FileRegime {
                crossover_atoms: 5.0e4,
                constant_density_per_mm3: None,
                central_density_exponent_alpha: 0.723,
            },
            dynamics: FileDynamics {
                loading_tau_s: 0.43,
                decay_tau_s: 9.4,
                decay_initial_atoms: 5.0e5,
                capture_rate_per_s: None,
                steady_mot_rate_per_s: 4.0e5,
            },
            sampling: FileSampling {
                sample_interval_s: 0.1,
                steps_segment_s: 10.0,
                loading_duration_s: 5.0,
                decay_duration_s: 20.0,
                scan_half_span_mm: 3.25,
                scan_points: 101,
            },
        }
    }
}

impl FileConfig {
    /// Convert to the internal-unit experiment description.
    pub fn to_experiment(&self) -> RunResult<ExperimentConfig64> {
        let cloud_template = CloudModel {
            shape: self.cloud.shape,
            center_um: self.cloud.center_mm.map(|v| v * MM_TO_UM),
            radii_um: self.cloud.radii_mm.map(|v| v * MM_TO_UM),
            peak_density_per_um3: self.cloud.peak_density_per_mm3 * PER_MM3_TO_PER_UM3,
        };
        let regime = match self.regime.constant_density_per_mm3 {
            Some(nc) => RegimeParams {
                crossover_atoms: self.regime.crossover_atoms,
                constant_density_per_um3: nc * PER_MM3_TO_PER_UM3,
                central_density_exponent_alpha: self.regime.central_density_exponent_alpha,
            },
            None => RegimeParams::continuous(
                self.regime.crossover_atoms,
                self.regime.central_density_exponent_alpha,
                &cloud_template,
            ),
        };
        let cfg = ExperimentConfig64 {
            laser: LaserConfig {
                detuning_mhz: self.laser.detuning_mhz,
                beam_intensity_mw_cm2: self.laser.beam_intensity_mw_cm2,
                n_beams: self.laser.n_beams,
                linewidth_mhz: self.laser.linewidth_mhz,
                isat_eff_mw_cm2: self.laser.isat_eff_mw_cm2,
                wavelength_um: self.laser.wavelength_um,
            },
            fiber: FiberSpec {
                waist_diameter_um: self.fiber.waist_diameter_um,
                interaction_range_um: self.fiber.interaction_range_um,
                transmission: self.fiber.transmission,
                coupling_eta_f: self.fiber.coupling_eta_f,
            },
            spcm: SpcmSpec {
                quantum_efficiency_eta_d: self.spcm.quantum_efficiency_eta_d,
                dark_ambient_rate_per_s: self.spcm.dark_ambient_rate_per_s,
                repump_scatter_rate_per_s: self.spcm.repump_scatter_rate_per_s,
                cooling_scatter_rate_per_s: self.spcm.cooling_scatter_rate_per_s,
                gate_time_s: self.spcm.gate_time_s,
            },
            photodiode: PhotodiodeSpec {
                collection_fraction: self.photodiode.collection_fraction,
                responsivity_a_per_w: self.photodiode.responsivity_a_per_w,
                load_resistance_ohm: self.photodiode.load_resistance_ohm,
                background_volts: self.photodiode.background_volts,
            },
            cloud_template,
            regime,
            dynamics: DynamicsConfig {
                loading_tau_s: self.dynamics.loading_tau_s,
                decay_tau_s: self.dynamics.decay_tau_s,
                decay_initial_atoms: self.dynamics.decay_initial_atoms,
                capture_rate_per_s: self.dynamics.capture_rate_per_s,
                steady_mot_rate_per_s: self.dynamics.steady_mot_rate_per_s,
            },
            sampling: SamplingConfig {
                sample_interval_s: self.sampling.sample_interval_s,
                steps_segment_s: self.sampling.steps_segment_s,
                loading_duration_s: self.sampling.loading_duration_s,
                decay_duration_s: self.sampling.decay_duration_s,
                scan_half_span_um: self.sampling.scan_half_span_mm * MM_TO_UM,
                scan_points: self.sampling.scan_points,
            },
            seed: self.seed,
        };
        cfg.validate()
            .map_err(|e| RunError::Validation(e.to_string()))?;
        Ok(cfg)
    }
}

/// Parse a config file: user keys merged over defaults, unknown keys
/// rejected, missing keys reported through `notice`.
pub fn parse_config(text: &str, mut notice: impl FnMut(&str)) -> RunResult<FileConfig> {
    let user: Value = serde_json::from_str(text).map_err(|e| {
        RunError::Config(format!(
            "config parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    if !user.is_object() {
        return Err(RunError::Config(
            "config root must be a JSON object".into(),
        ));
    }
    let defaults =
        serde_json::to_value(FileConfig::default()).expect("defaults serialize");

    let mut unknown = Vec::new();
    collect_unknown(&user, &defaults, String::new(), &mut unknown);
    if !unknown.is_empty() {
        return Err(RunError::Config(format!(
            "unknown config key(s): {}",
            unknown.join(", ")
        )));
    }

    let mut missing = Vec::new();
    collect_missing(&user, &defaults, String::new(), &mut missing);
    if !missing.is_empty() {
        notice(&format!(
            "notice: {} key(s) not set, using paper defaults: {}",
            missing.len(),
            missing.join(", ")
        ));
    }

    let merged = merge(defaults, user);
    serde_json::from_value(merged)
        .map_err(|e| RunError::Config(format!("config type error: {e}")))
}

/// Load and parse a config file; `None` means pure defaults.
pub fn load_config(path: Option<&std::path::Path>) -> RunResult<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| RunError::Io(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text, |msg| eprintln!("{msg}"))
        }
    }
}

fn collect_unknown(user: &Value, defaults: &Value, path: String, out: &mut Vec<String>) {
    if let (Value::Object(u), Value::Object(d)) = (user, defaults) {
        for (key, val) in u {
            let child = if path.is_empty() {
                key.clone()
            } else {
                format!("{path}.{key}")
            };
            match d.get(key) {
                None => out.push(child),
                Some(dv) => collect_unknown(val, dv, child, out),
            }
        }
    }
}

fn collect_missing(user: &Value, defaults: &Value, path: String, out: &mut Vec<String>) {
    if let (Value::Object(u), Value::Object(d)) = (user, defaults) {
        for (key, dv) in d {
            let child = if path.is_empty() {
                key.clone()
            } else {
                format!("{path}.{key}")
            };
            match u.get(key) {
                None => out.push(child),
                Some(uv) => collect_missing(uv, dv, child, out),
            }
        }
    }
}

/// User values win; objects merge recursively.
fn merge(defaults: Value, user: Value) -> Value {
    match (defaults, user) {
        (Value::Object(mut d), Value::Object(u)) => {
            for (key, uv) in u {
                let merged = match d.remove(&key) {
                    Some(dv) => merge(dv, uv),
                    None => uv,
                };
                d.insert(key, merged);
            }
            Value::Object(d)
        }
        (_, user) => user,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_full_defaults() {
        let cfg = parse_config("{}", |_| {}).unwrap();
        let exp = cfg.to_experiment().unwrap();
        assert_eq!(exp, ExperimentConfig64::paper_default());
    }

    #[test]
    fn single_override_keeps_other_defaults() {
        let cfg = parse_config(r#"{"laser":{"detuning_MHz":-6.0}}"#, |_| {}).unwrap();
        assert_eq!(cfg.laser.detuning_mhz, -6.0);
        assert_eq!(cfg.laser.beam_intensity_mw_cm2, 2.4);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn unknown_key_is_an_error_with_path() {
        let err = parse_config(r#"{"laser":{"detunning_MHz":-6.0}}"#, |_| {}).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("laser.detunning_MHz"), "{err}");
    }

    #[test]
    fn invariant_violation_names_the_field() {
        let cfg = parse_config(r#"{"fiber":{"transmission_T":1.5}}"#, |_| {}).unwrap();
        let err = cfg.to_experiment().unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.message().contains("transmission"), "{err}");
    }

    #[test]
    fn missing_keys_produce_one_notice() {
        let mut notices = Vec::new();
        let _ = parse_config(r#"{"seed": 7}"#, |m| notices.push(m.to_string())).unwrap();
        assert_eq!(notices.len(), 1);
        assert!(notices[0].contains("laser.detuning_MHz"));
        assert!(!notices[0].contains("\"seed\""));
    }

    #[test]
    fn parse_error_reports_line_and_column() {
        let err = parse_config("{ nope", |_| {}).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("line 1"), "{err}");
    }

    #[test]
    fn unit_conversion_at_the_boundary() {
        let cfg = parse_config(
            r#"{"cloud":{"radii_mm":[0.5, 0.5, 2.0], "peak_density_per_mm3": 1.0e6}}"#,
            |_| {},
        )
        .unwrap();
        let exp = cfg.to_experiment().unwrap();
        assert_eq!(exp.cloud_template.radii_um, [500.0, 500.0, 2000.0]);
        assert_eq!(exp.cloud_template.peak_density_per_um3, 1.0e-3);
    }
}
