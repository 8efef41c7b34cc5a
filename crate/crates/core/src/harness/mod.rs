//! Experiment orchestration: config loading, runs, CSV artifacts and manifests.

mod config;
mod experiments;

pub use config::*;
pub use experiments::{burgers_setup, compile_generator, fisher_setup, run_experiment, Outcome};

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "KVN_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Solve,
    Compile,
    Report,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Solve => "solve",
            Verb::Compile => "compile",
            Verb::Report => "report",
        }
    }

    pub fn accepts(self, kind: ExperimentKind) -> bool {
        use ExperimentKind::*;
        match self {
            Verb::Solve => matches!(kind, Burgers1d | Fisher2d | Cavity),
            Verb::Compile => matches!(kind, KrausCompile),
            Verb::Report => matches!(kind, RankReport | Stencil | NoiseSweep),
        }
    }
}

/// Process exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } | Error::NonConvergence { .. } => EXIT_DIVERGENCE,
        Error::Io(_) => EXIT_IO,
        Error::Verification(_) | Error::Completeness(_) | Error::NonUnitary(_) | Error::Indefinite(_) => {
            EXIT_VERIFICATION
        }
        _ => EXIT_CONFIG,
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Output directory: explicit override, then [`OUT_DIR_ENV`], then the config, then `out/<experiment>`.
pub fn resolve_out_dir(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    match &config.out_dir {
        Some(p) => PathBuf::from(p),
        None => Path::new("out").join(config.experiment.name()),
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: String,
    verb: &'a str,
    experiment: &'a str,
    seed: u64,
    config_sha256: String,
    timestamp_unix: u64,
    status: &'a str,
    artifacts: &'a [String],
    /// Verbatim configuration; rerun with `kvn <verb> --config <file> --seed <seed>`.
    config: &'a str,
}

fn write_manifest(dir: &Path, verb: Verb, cfg: &ExperimentConfig, seed: u64, text: &str, status: &str, artifacts: &[String]) -> Result<()> {
    let timestamp_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let m = Manifest {
        tool: format!("kvn {}", env!("CARGO_PKG_VERSION")),
        verb: verb.name(),
        experiment: cfg.experiment.name(),
        seed,
        config_sha256: config_hash(text),
        timestamp_unix,
        status,
        artifacts,
        config: text,
    };
    let body = toml::to_string(&m).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), body)?;
    Ok(())
}

/// Parse, validate and run `config_text` under `verb`, writing artifacts and a manifest into `out_dir`.
///
/// A manifest is written for failed runs too, once the output directory exists.
pub fn execute(verb: Verb, config_text: &str, seed: Option<u64>, out_dir: Option<&Path>) -> Result<Outcome> {
    let cfg = ExperimentConfig::parse(config_text)?;
    if !verb.accepts(cfg.experiment) {
        return Err(Error::Config(format!(
            "experiment `{}` is not run by `{}`",
            cfg.experiment.name(),
            verb.name()
        )));
    }
    let seed = seed.unwrap_or(cfg.seed);
    let dir = resolve_out_dir(out_dir, &cfg);
    fs::create_dir_all(&dir)?;
    let mut artifacts = Vec::new();
    let result = run_experiment(&cfg, seed, &dir, &mut artifacts);
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("failed (exit {}): {e}", exit_code(e)),
    };
    write_manifest(&dir, verb, &cfg, seed, config_text, &status, &artifacts)?;
    result
}
