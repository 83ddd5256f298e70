//! Run manifests: one JSON document per run tying outputs to the exact
//! configuration, seed, and artifact version that produced them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use motprobe_core::ExperimentConfig64;

/// Manifest written next to the emitted CSV files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub noise: bool,
    /// SHA-256 of the canonical resolved-config JSON.
    pub config_hash: String,
    /// Wall-clock timestamp; not part of any hashed or compared content.
    pub generated_utc: String,
    pub outputs: Vec<String>,
    /// Resolved configuration in internal units.
    pub config: ExperimentConfig64,
}

/// SHA-256 over the canonical serialization of the resolved config.
pub fn config_hash(cfg: &ExperimentConfig64) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

impl RunManifest {
    pub fn new(
        command: &str,
        cfg: &ExperimentConfig64,
        seed: u64,
        noise: bool,
        outputs: Vec<String>,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            noise,
            config_hash: config_hash(cfg),
            generated_utc: chrono::Utc::now().to_rfc3339(),
            outputs,
            config: cfg.clone(),
        }
    }
}
