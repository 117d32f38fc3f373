//! Run manifests, JSON/CSV emission and exit codes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use grapde::energy::FunctionPair;
use grapde::verify::Residual;
use serde::Serialize;
use serde_json::{json, Map, Value};

/// Process outcome, mapped onto exit codes 0, 2 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Hypothesis violated, degenerate or unconverged result, failed check.
    Flagged,
}

impl From<Outcome> for ExitCode {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::Flagged => ExitCode::from(2),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub started_unix: f64,
    pub wall_seconds: f64,
}

/// Everything needed to rerun a command, embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub inputs: BTreeMap<&'static str, Value>,
    pub config: Value,
    pub seed: Option<u64>,
    /// Wall-clock data; the only field allowed to differ between identical runs.
    pub timing: Option<Timing>,
}

pub struct Recorder {
    manifest: Manifest,
    started: Instant,
    started_unix: f64,
    reproducible: bool,
}

impl Recorder {
    pub fn new(subcommand: &'static str, reproducible: bool) -> Self {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            manifest: Manifest {
                tool: "grapde",
                version: env!("CARGO_PKG_VERSION"),
                subcommand,
                inputs: BTreeMap::new(),
                config: Value::Null,
                seed: None,
                timing: None,
            },
            started: Instant::now(),
            started_unix,
            reproducible,
        }
    }

    pub fn input(&mut self, key: &'static str, value: impl Serialize) {
        self.manifest
            .inputs
            .insert(key, serde_json::to_value(value).expect("serializable input"));
    }

    pub fn config(&mut self, config: impl Serialize) {
        self.manifest.config = serde_json::to_value(config).expect("serializable config");
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn finish(mut self) -> Manifest {
        if !self.reproducible {
            self.manifest.timing = Some(Timing {
                started_unix: self.started_unix,
                wall_seconds: self.started.elapsed().as_secs_f64(),
            });
        }
        self.manifest
    }
}

/// `{"manifest": …, "report": …}`.
pub fn envelope(manifest: Manifest, report: impl Serialize) -> Value {
    json!({ "manifest": manifest, "report": report })
}

/// Adds the manifest as a top-level key of an existing object.
pub fn with_manifest(mut doc: Map<String, Value>, manifest: Manifest) -> Value {
    doc.insert(
        "manifest".into(),
        serde_json::to_value(manifest).expect("serializable manifest"),
    );
    Value::Object(doc)
}

pub fn emit(doc: &Value, out: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(doc).expect("JSON values always serialize");
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// vertex,u,v,residual_u,residual_v with round-trip precision.
pub fn write_csv(path: &Path, pair: &FunctionPair, residual: &Residual) -> std::io::Result<()> {
    let mut text = String::from("vertex,u,v,residual_u,residual_v\n");
    for x in 0..pair.u.len() {
        text.push_str(&format!(
            "{x},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            pair.u[x], pair.v[x], residual.u[x], residual.v[x]
        ));
    }
    std::fs::write(path, text)
}
