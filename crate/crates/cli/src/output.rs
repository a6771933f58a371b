use std::fmt;
use std::path::{Path, PathBuf};

use mtdmra::Error;
use serde::Serialize;

use crate::args::Command;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, values or config files: exit 2.
    Usage(String),
    /// Failures while running: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // one line, `error[kind]: message`
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        write!(f, "error[{kind}]: {}", msg.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidLambda(_)
            | Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::UnsupportedOrder(_)
            | Error::PaddingViolation { .. }
            | Error::Shape(_)
            | Error::EnumerationTooLarge { .. }
            | Error::NoInteriorPatches
            | Error::SubsampleEmpty { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Collects output files of one run and writes the manifest last.
pub struct Run {
    dir: PathBuf,
    outputs: Vec<String>,
    summary: Option<serde_json::Value>,
    resolved: Option<serde_json::Value>,
}

impl Run {
    pub fn new(dir: &Path) -> CliResult<Run> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            summary: None,
            resolved: None,
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<S: AsRef<str>>(&mut self, name: &str, header: &[&str], rows: &[Vec<S>]) -> CliResult<()> {
        let path = self.path(name);
        mtdmra::io::write_csv(&path, header, rows).map_err(|e| io_err(&path, e))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }

    /// Stored under `summary` in the manifest and printed on stdout.
    pub fn summary<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        self.summary = Some(serde_json::to_value(value).map_err(|e| CliError::Runtime(e.to_string()))?);
        Ok(())
    }

    /// Fully resolved config for commands that read one from a file.
    pub fn resolved<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        self.resolved = Some(serde_json::to_value(value).map_err(|e| CliError::Runtime(e.to_string()))?);
        Ok(())
    }

    pub fn finish(mut self, command: &Command, wall_time: f64) -> CliResult<()> {
        let manifest = Manifest {
            config: command.clone(),
            seed: seed_of(command),
            versions: Versions {
                mtdmra: mtdmra::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            wall_time_s: wall_time,
            outputs: std::mem::take(&mut self.outputs),
            summary: self.summary.take(),
            resolved_config: self.resolved.take(),
        };
        if let Some(s) = &manifest.summary {
            println!("{s}");
        }
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }
}

#[derive(Serialize)]
struct Versions {
    mtdmra: &'static str,
    cli: &'static str,
}

#[derive(Serialize)]
struct Manifest {
    config: Command,
    seed: Option<u64>,
    versions: Versions,
    wall_time_s: f64,
    outputs: Vec<String>,
    summary: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolved_config: Option<serde_json::Value>,
}

fn seed_of(c: &Command) -> Option<u64> {
    match c {
        Command::Simulate(a) => Some(a.seed),
        Command::Stationary(a) => Some(a.seed),
        Command::Mixing(a) => Some(a.seed),
        Command::HardcoreSample(a) => Some(a.seed),
        Command::Moments(a) => Some(a.seed),
        Command::Recover(a) => Some(a.seed),
        Command::Experiment(a) => a.seed,
        Command::Replay(_) => None,
    }
}

pub fn f(v: f64) -> String {
    mtdmra::io::fmt_f64(v)
}
