//! Implementation of the `vokit` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input, 3 numeric
//! failure. Output files are written to a temporary sibling and renamed, so a
//! file exists only if it was written completely.

pub mod args;
mod commands;
pub mod plot;
mod report;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use sha2::{Digest, Sha256};
use vokit_core::curation::SampleRecord;
use vokit_core::io::{parse_kitti_poses, parse_predictions, POSE_FIELDS, PREDICTION_FIELDS};
use vokit_core::pose::{compose_trajectory, RelativePose, Trajectory};
use vokit_core::Error;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    /// Classifies a library error, prefixing `context` (usually a path).
    pub fn from_core(context: &str, e: &Error) -> Self {
        let message = if context.is_empty() { e.to_string() } else { format!("{context}: {e}") };
        Self { code: exit_code(e), message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::Manifest(_) | Error::Io(_) => EXIT_INPUT,
        Error::NotARotation { .. } | Error::Quadrature { .. } | Error::NonFinite(_) => EXIT_NUMERIC,
        Error::Record { source, .. } => exit_code(source),
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Filter(a) => commands::filter(&a),
        Command::Mix(a) => commands::mix(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Plot(a) => commands::plot(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("vokit: {f}");
            f.code
        }
    }
}

pub(crate) struct InputFile {
    pub path: PathBuf,
    pub text: String,
    pub sha256: String,
}

impl InputFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let text = String::from_utf8(bytes).map_err(|_| Failure::input(format!("{}: not UTF-8 text", path.display())))?;
        Ok(Self { path: path.to_path_buf(), text, sha256 })
    }

    pub fn label(&self) -> String {
        self.path.display().to_string()
    }

    /// `"<role> <path> sha256:<digest>"`, as recorded in manifests.
    pub fn descriptor(&self, role: &str) -> String {
        format!("{role} {} sha256:{}", self.label(), self.sha256)
    }
}

/// A trajectory file in either accepted layout.
pub(crate) enum Motion {
    Poses(Trajectory),
    Predictions(Vec<SampleRecord>),
}

impl Motion {
    /// Detects the layout from the field count of the first non-blank line.
    pub fn parse(file: &InputFile) -> CliResult<Self> {
        let ctx = file.label();
        let first = file.text.lines().enumerate().find(|(_, l)| !l.trim().is_empty());
        let Some((line, text)) = first else {
            return Err(Failure::input(format!("{ctx}: file is empty")));
        };
        let fields = text.split_whitespace().count();
        if fields == POSE_FIELDS {
            parse_kitti_poses(file.text.as_bytes()).map(Motion::Poses).map_err(|e| Failure::from_core(&ctx, &e))
        } else if fields == PREDICTION_FIELDS + 1 {
            let records = parse_predictions(file.text.as_bytes()).map_err(|e| Failure::from_core(&ctx, &e))?;
            Ok(Motion::Predictions(records))
        } else {
            Err(Failure::input(format!(
                "{ctx}: line {}: expected {POSE_FIELDS} fields (pose file) or {} (prediction file), found {fields}",
                line + 1,
                PREDICTION_FIELDS + 1
            )))
        }
    }

    pub fn relatives(&self) -> Vec<RelativePose> {
        match self {
            Motion::Poses(t) => t.relatives(),
            Motion::Predictions(r) => r.iter().map(|r| r.pose).collect(),
        }
    }

    pub fn trajectory(&self) -> Trajectory {
        match self {
            Motion::Poses(t) => t.clone(),
            Motion::Predictions(r) => compose_trajectory(&r.iter().map(|r| r.pose).collect::<Vec<_>>()),
        }
    }
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let fail = |e: std::io::Error| Failure::input(format!("{}: {e}", path.display()));
    let mut name = path.file_name().ok_or_else(|| Failure::usage(format!("{}: not a file path", path.display())))?.to_os_string();
    name.push(".partial");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}
