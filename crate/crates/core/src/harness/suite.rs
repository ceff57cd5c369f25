use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::GameSpec;
use crate::error::{Error, Result};

pub const SUITE_FILE: &str = "suite.json";
pub const SUITE_FORMAT_VERSION: u32 = 1;

/// `suite.json`: the game files of a suite, in play order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub format_version: u32,
    pub suite_id: String,
    pub games: Vec<String>,
}

/// Writes one canonical JSON file per game plus the manifest.
pub fn write_suite(dir: &Path, suite_id: &str, games: &[GameSpec]) -> Result<SuiteManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(games.len());
    for spec in games {
        let name = format!("{}.json", spec.id());
        if files.contains(&name) {
            return Err(Error::Contract(format!("game {} appears twice in the suite", spec.id())));
        }
        let path = dir.join(&name);
        std::fs::write(&path, spec.to_canonical_json()?).map_err(|e| Error::io(&path, e))?;
        files.push(name);
    }
    let manifest = SuiteManifest {
        format_version: SUITE_FORMAT_VERSION,
        suite_id: suite_id.to_string(),
        games: files,
    };
    let path = dir.join(SUITE_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_suite(dir: &Path) -> Result<(SuiteManifest, Vec<GameSpec>)> {
    let path = dir.join(SUITE_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: SuiteManifest = serde_json::from_str(&text)?;
    if manifest.format_version != SUITE_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "suite format_version {} is not supported",
            manifest.format_version
        )));
    }
    if manifest.games.is_empty() {
        return Err(Error::Contract(format!("suite {} lists no games", dir.display())));
    }
    let games = manifest
        .games
        .iter()
        .map(|name| {
            let path = dir.join(name);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            GameSpec::from_json(&text)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, games))
}
