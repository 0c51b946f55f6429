use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

/// Writes a header and rows of floats in round-trip precision.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush()
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Run record written next to the first output as `<out>.manifest.json`.
/// Its `config` object can be passed back through `--config`.
pub struct Manifest {
    command: &'static str,
    config: Value,
    jobs: Option<usize>,
    started: f64,
    finished: Option<f64>,
    success: bool,
    outputs: Vec<PathBuf>,
    notes: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &'static str, config: Value, jobs: Option<usize>) -> Self {
        Manifest {
            command,
            config,
            jobs,
            started: unix_seconds(),
            finished: None,
            success: false,
            outputs: Vec::new(),
            notes: Map::new(),
        }
    }

    pub fn output(&mut self, path: Option<&Path>) {
        if let Some(p) = path {
            self.outputs.push(p.to_path_buf());
        }
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.notes.insert(key.into(), value);
    }

    pub fn finish(&mut self, success: bool) {
        self.finished = Some(unix_seconds());
        self.success = success;
    }

    pub fn to_json(&self) -> Value {
        let mut config = self.config.clone();
        if let Value::Object(m) = &mut config {
            // Output paths are per run; leave them to the command line.
            m.remove("out");
        }
        json!({
            "command": self.command,
            "config": config,
            "jobs": self.jobs,
            "seed": Value::Null,
            "versions": { "frlab": env!("CARGO_PKG_VERSION") },
            "started_unix": self.started,
            "finished_unix": self.finished,
            "success": self.success,
            "outputs": self.outputs,
            "notes": self.notes,
        })
    }

    /// No-op when the run produced no files.
    pub fn write(&self) -> io::Result<()> {
        let Some(first) = self.outputs.first() else { return Ok(()) };
        let mut name = first.clone().into_os_string();
        name.push(".manifest.json");
        let text = serde_json::to_string_pretty(&self.to_json()).map_err(io::Error::other)?;
        fs::write(PathBuf::from(name), text + "\n")
    }
}
