use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use urnmix::ModelSpec;

#[derive(Debug, Serialize)]
pub struct OutputChecksum {
    pub path: String,
    pub sha256: String,
}

impl OutputChecksum {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        OutputChecksum {
            path: path.to_string(),
            sha256: hex(&Sha256::digest(bytes)),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Record of one invocation. Field order is the serialization order.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub model: Option<ModelSpec>,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub wall_time_secs: f64,
    pub outputs: Vec<OutputChecksum>,
}
