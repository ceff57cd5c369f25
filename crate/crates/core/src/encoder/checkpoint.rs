//! Checkpoint directories: `manifest.json`, `params.bin` (little-endian f64
//! in tensor order) and `vocab.txt`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Encoder, EncoderConfig, TensorInfo};
use crate::error::{Error, Result};
use crate::text::Vocabulary;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub label: String,
    pub config: EncoderConfig,
    pub config_hash: String,
    pub seed: u64,
    pub step: u64,
    pub param_count: usize,
    pub tensors: Vec<TensorInfo>,
}

/// A trained encoder with the vocabulary it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub label: String,
    pub step: u64,
    pub encoder: Encoder,
    pub vocab: Vocabulary,
}

pub fn config_hash(config: &EncoderConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl Checkpoint {
    pub fn manifest(&self) -> Manifest {
        let config = self.encoder.config().clone();
        Manifest {
            format_version: FORMAT_VERSION,
            label: self.label.clone(),
            config_hash: config_hash(&config),
            seed: config.seed,
            step: self.step,
            param_count: self.encoder.param_count(),
            tensors: self.encoder.params().infos.clone(),
            config,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let fail = |e: std::io::Error| Error::checkpoint(dir, e.to_string());
        fs::create_dir_all(dir).map_err(fail)?;
        let manifest = serde_json::to_string_pretty(&self.manifest())?;
        fs::write(dir.join("manifest.json"), manifest + "\n").map_err(fail)?;
        let data = &self.encoder.params().data;
        let mut bytes = Vec::with_capacity(data.len() * 8);
        for x in data {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        fs::write(dir.join("params.bin"), bytes).map_err(fail)?;
        fs::write(dir.join("vocab.txt"), self.vocab.to_file_string()).map_err(fail)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| fs::read(dir.join(name)).map_err(|e| Error::checkpoint(dir, format!("{name}: {e}")));
        let bad = |msg: String| Error::checkpoint(dir, msg);
        let manifest: Manifest = serde_json::from_slice(&read("manifest.json")?)
            .map_err(|e| bad(format!("manifest.json: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {}", manifest.format_version)));
        }
        if manifest.config_hash != config_hash(&manifest.config) {
            return Err(bad("config_hash does not match config".into()));
        }
        let bytes = read("params.bin")?;
        if bytes.len() != manifest.param_count * 8 {
            return Err(bad(format!(
                "params.bin holds {} bytes, expected {}",
                bytes.len(),
                manifest.param_count * 8
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let vocab_text = String::from_utf8(read("vocab.txt")?).map_err(|e| bad(format!("vocab.txt: {e}")))?;
        let vocab = Vocabulary::from_file_string(&vocab_text).map_err(|e| bad(format!("vocab.txt: {e}")))?;
        if vocab.len() != manifest.config.vocab_size {
            return Err(bad(format!(
                "vocab.txt has {} ids, config expects {}",
                vocab.len(),
                manifest.config.vocab_size
            )));
        }
        let encoder = Encoder::from_parts(manifest.config, &manifest.tensors, data).map_err(|e| bad(e.to_string()))?;
        Ok(Checkpoint {
            label: manifest.label,
            step: manifest.step,
            encoder,
            vocab,
        })
    }
}
