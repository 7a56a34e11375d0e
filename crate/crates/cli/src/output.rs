use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tdlob_core::Error;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Io(PathBuf, io::Error),
    Check(String),
}

impl CliError {
    /// 2 for bad parameters or input, 3 for too little data, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::InsufficientData(_)) => 3,
            CliError::Core(Error::NoConvergence(_)) | CliError::Io(..) | CliError::Check(_) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Check(m) => f.write_str(m),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

/// Writes through `body` into `path`, or to stdout when `path` is `None`.
pub fn emit<F>(path: Option<&Path>, body: F) -> CliResult
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let target = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    let wrap = |e| CliError::Io(target.clone(), e);
    match path {
        Some(p) => {
            let mut out = BufWriter::new(File::create(p).map_err(wrap)?);
            body(&mut out).and_then(|_| out.flush()).map_err(wrap)
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            body(&mut out).and_then(|_| out.flush()).map_err(wrap)
        }
    }
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    emit(path, |out| writeln!(out, "{text}"))
}

/// Blank for a missing value, shortest round-trip decimal otherwise.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
