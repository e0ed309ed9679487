use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Rendered result of one subcommand.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    /// False when a verification failed; the process exits with 1.
    pub passed: bool,
    pub seeds: Vec<u64>,
}

impl Outcome {
    pub fn ok(body: String) -> Outcome {
        Outcome { body, passed: true, seeds: Vec::new() }
    }

    pub fn checked(body: String, passed: bool) -> Outcome {
        Outcome { body, passed, seeds: Vec::new() }
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Outcome {
        self.seeds = seeds;
        self
    }
}

pub fn json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Serialize)]
struct RunManifest<'a, P: Serialize> {
    subcommand: &'a str,
    parameters: &'a P,
    tool_version: &'static str,
    /// Seconds since the Unix epoch.
    timestamp: u64,
    seeds: &'a [u64],
    outputs: Vec<String>,
    passed: bool,
}

/// Writes the body to `out` (plus its manifest) or to stdout.
pub fn emit<P: Serialize>(
    subcommand: &str,
    parameters: &P,
    out: Option<&Path>,
    outcome: &Outcome,
) -> anyhow::Result<()> {
    let Some(path) = out else {
        print!("{}", outcome.body);
        return Ok(());
    };
    std::fs::write(path, &outcome.body).with_context(|| format!("writing {}", path.display()))?;
    let manifest = RunManifest {
        subcommand,
        parameters,
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        seeds: &outcome.seeds,
        outputs: vec![path.display().to_string()],
        passed: outcome.passed,
    };
    let mut manifest_path = path.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    std::fs::write(&manifest_path, json(&manifest)?)
        .with_context(|| format!("writing {}", Path::new(&manifest_path).display()))?;
    Ok(())
}
