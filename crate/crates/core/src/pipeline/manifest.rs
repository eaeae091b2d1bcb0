use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RunArtifacts, RunConfig};
use crate::corpus::Segmentation;
use crate::{numfmt, Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(FileDigest {
            path: path.to_path_buf(),
            bytes: data.len() as u64,
            sha256: sha256_hex(&data),
        })
    }
}

/// What a run consumed and produced. Together with the input files it
/// determines every output byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub config: RunConfig,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, FileDigest>,
    pub stats: BTreeMap<String, f64>,
    /// sha256 of every output file, keyed by path relative to the run
    /// directory.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_seconds: Option<BTreeMap<String, f64>>,
}

impl RunManifest {
    pub fn build(art: &RunArtifacts, preset: Option<&str>, dir: &Path, files: &[String]) -> Result<Self> {
        let c = &art.config;
        let mut seeds = BTreeMap::from([
            ("run".to_string(), c.seed),
            ("model".to_string(), c.model_seed()),
            ("projection".to_string(), c.projection_seed()),
        ]);
        if let Segmentation::FixedWindow { seed, .. } = c.segment.mode {
            seeds.insert("segment".into(), seed);
        }
        let inputs = BTreeMap::from([
            ("metadata".to_string(), FileDigest::of(&c.input.metadata)?),
            ("transcription".to_string(), FileDigest::of(&c.input.transcription)?),
        ]);
        let outputs = files
            .iter()
            .map(|f| {
                let p = dir.join(f);
                let data = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
                Ok((f.clone(), sha256_hex(&data)))
            })
            .collect::<Result<_>>()?;
        let timings_seconds = c.output.record_timings.then(|| {
            art.timings
                .iter()
                .map(|(s, t)| (s.to_string(), numfmt::round12(*t)))
                .collect()
        });
        Ok(RunManifest {
            software: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            preset: preset.map(str::to_string),
            config: c.clone(),
            seeds,
            inputs,
            stats: art.stats.iter().map(|(k, v)| (k.clone(), numfmt::round12(*v))).collect(),
            outputs,
            timings_seconds,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Input files whose current bytes differ from the recorded digests.
    pub fn changed_inputs(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for (name, d) in &self.inputs {
            if FileDigest::of(&d.path)?.sha256 != d.sha256 {
                out.push(name.clone());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vectors() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
