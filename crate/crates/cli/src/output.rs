use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exhaustive,
    Bnb,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, source: io::Error },
    Domain(apfree::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl From<apfree::Error> for CliError {
    fn from(e: apfree::Error) -> Self {
        CliError::Domain(e)
    }
}

/// Whether the command's own check succeeded; failures still produce a
/// full report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => ExitCode::SUCCESS,
            Status::Failed => ExitCode::from(1),
        }
    }
}

/// Report sink: standard output or the `--out` file.
pub struct Sink {
    inner: Box<dyn Write>,
    path: Option<PathBuf>,
}

impl Sink {
    pub fn open(out: Option<&Path>) -> Result<Self, CliError> {
        let inner: Box<dyn Write> = match out {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink { inner, path: out.map(Path::to_path_buf) })
    }

    fn fail(&self, e: io::Error) -> CliError {
        CliError::io(self.path.as_deref().unwrap_or(Path::new("<stdout>")), e)
    }

    pub fn text(&mut self, s: &str) -> Result<(), CliError> {
        self.inner.write_all(s.as_bytes()).map_err(|e| self.fail(e))
    }

    pub fn line(&mut self, s: impl fmt::Display) -> Result<(), CliError> {
        writeln!(self.inner, "{s}").map_err(|e| self.fail(e))
    }

    /// One JSON object per line.
    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let s = serde_json::to_string(value).expect("reports serialize");
        self.line(s)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| self.fail(e))
    }
}
