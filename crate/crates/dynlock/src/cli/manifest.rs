use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    /// Hex SHA-256 of the file contents; absent when the file could not be read.
    pub sha256: Option<String>,
}

impl FileHash {
    pub fn of(path: &Path) -> Self {
        let sha256 = std::fs::read(path).ok().map(|b| hex::encode(Sha256::digest(&b)));
        FileHash { path: path.to_path_buf(), sha256 }
    }
}

/// Record of one CLI run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    /// Coupling scale applied when building the system from coordinates.
    pub kappa: Option<f64>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub status: String,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: Value,
        inputs: &[PathBuf],
        kappa: Option<f64>,
        wall_time_s: f64,
        outputs: &[PathBuf],
        error: Option<String>,
    ) -> Self {
        RunManifest {
            command: command.into(),
            config,
            inputs: inputs.iter().map(|p| FileHash::of(p)).collect(),
            outputs: outputs.iter().map(|p| FileHash::of(p)).collect(),
            kappa,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s,
            status: if error.is_some() { "error".into() } else { "ok".into() },
            error,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    /// Inputs whose current contents no longer match the recorded hash.
    pub fn tampered_inputs(&self) -> Vec<PathBuf> {
        self.inputs.iter().filter(|h| FileHash::of(&h.path).sha256 != h.sha256).map(|h| h.path.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.seq");
        std::fs::write(&f, "tau 1u\n").unwrap();
        let m = RunManifest::new("magnus", Value::Null, &[f.clone()], None, 0.0, &[], None);
        assert!(m.tampered_inputs().is_empty());
        std::fs::write(&f, "tau 2u\n").unwrap();
        assert_eq!(m.tampered_inputs(), vec![f]);
    }
}
