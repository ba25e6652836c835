//! Versioned model files.
//!
//! A model file is JSON with a format tag and version ahead of the network
//! parameters. Floats serialize with shortest round-trip precision, so a
//! saved model reloads bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Network;

pub const MODEL_FORMAT: &str = "pgdro.network";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    network: Network,
}

/// Serializes a network to a JSON string (stable field order).
pub fn model_to_json(net: &Network) -> Result<String> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        network: net.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Parses a model JSON string, validating the header.
pub fn model_from_json(text: &str) -> Result<Network> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::ModelFormat(format!(
            "format tag `{}` (expected `{MODEL_FORMAT}`)",
            file.format
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "version {} (expected {MODEL_VERSION})",
            file.version
        )));
    }
    Ok(file.network)
}

pub fn save_model(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(net)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Network> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trip_is_exact() {
        let net = Network::xavier_init(&[2, 16, 16, 16, 2], 99).unwrap();
        let back = model_from_json(&model_to_json(&net).unwrap()).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let net = Network::zeros(&[1, 1]).unwrap();
        let text = model_to_json(&net)
            .unwrap()
            .replace(MODEL_FORMAT, "something.else");
        assert!(matches!(
            model_from_json(&text),
            Err(Error::ModelFormat(_))
        ));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let net = Network::zeros(&[1, 1]).unwrap();
        let text = model_to_json(&net)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            model_from_json(&text),
            Err(Error::ModelFormat(_))
        ));
    }
}
