use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::phase1::Phase1Outcome;
use crate::sequence::serialize_sequence;
use crate::{Error, Result};

/// JSON manifest entry written next to each exported winner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinnerManifest {
    pub file: String,
    pub fidelity: f64,
    pub reward: f64,
    pub steps: usize,
    pub seed: Option<u64>,
    pub strategy: String,
}

/// Write `winner_<k>.seq` for each winner plus `winners.json`; returns every path written.
pub fn export_winners(outcome: &Phase1Outcome, tau: f64, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    let mut entries = Vec::new();
    for (k, w) in outcome.winners.iter().enumerate() {
        let name = format!("winner_{k}.seq");
        let path = dir.join(&name);
        let seq = super::phase1::actions_to_sequence(&w.actions, tau)?;
        fs::write(&path, serialize_sequence(&seq)).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
        entries.push(WinnerManifest {
            file: name,
            fidelity: w.fidelity,
            reward: w.reward,
            steps: w.actions.len(),
            seed: outcome.seed,
            strategy: outcome.strategy.clone(),
        });
    }
    let path = dir.join("winners.json");
    let text = serde_json::to_string_pretty(&entries)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    paths.push(path);
    Ok(paths)
}
