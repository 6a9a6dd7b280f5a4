//! Run directories and their manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use homeostat_core::ExperimentConfig;

use crate::config_file;
use crate::error::{LabError, Result};

pub const MANIFEST: &str = "manifest.txt";

pub fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// `<command>_<alpha>_<seed>_<timestamp>`.
pub fn run_name(command: &str, alpha: f64, seed: u64, timestamp: u64) -> String {
    format!("{command}_{alpha}_{seed}_{timestamp}")
}

/// The manifest text: metadata as comments, then the full config, so the
/// file itself parses back to the config.
pub fn manifest_text(command: &str, config: &ExperimentConfig, started: u64, dir: &Path) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# homeostat run manifest");
    let _ = writeln!(out, "# command: {command}");
    let _ = writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# started_unix: {started}");
    let _ = writeln!(
        out,
        "# rng: ChaCha8 seeded with `seed`; streams env=1 exploration=2 init=3 replay=4 evaluation=5"
    );
    let _ = writeln!(out, "# directory: {}", dir.display());
    let _ = writeln!(out, "# outputs: metrics.csv timing.csv *.ckpt");
    out.push_str(&config_file::render(config));
    out
}

/// A freshly created run directory with its manifest written.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
    pub started: u64,
}

impl RunDir {
    /// Creates `parent/<command>_<alpha>_<seed>_<timestamp>`; a numeric
    /// suffix keeps names unique within the same second.
    pub fn create(parent: &Path, command: &str, config: &ExperimentConfig, started: u64) -> Result<Self> {
        std::fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
        let base = run_name(command, config.alpha, config.seed, started);
        let mut path = parent.join(&base);
        let mut n = 1;
        loop {
            match std::fs::create_dir(&path) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    n += 1;
                    path = parent.join(format!("{base}-{n}"));
                }
                Err(e) => return Err(LabError::io(&path, e)),
            }
        }
        let manifest = path.join(MANIFEST);
        std::fs::write(&manifest, manifest_text(command, config, started, &path))
            .map_err(|e| LabError::io(&manifest, e))?;
        Ok(Self { path, started })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_back_to_config() {
        let cfg = ExperimentConfig {
            alpha: 7.0,
            seed: 3,
            ..Default::default()
        };
        let text = manifest_text("train", &cfg, 1234, Path::new("/tmp/x"));
        assert_eq!(config_file::parse_str(&text).unwrap(), cfg);
    }

    #[test]
    fn names_follow_the_pattern() {
        assert_eq!(run_name("train", 7.0, 2, 99), "train_7_2_99");
        assert_eq!(run_name("sweep", 0.5, 1, 5), "sweep_0.5_1_5");
    }
}
