//! Batch driver for the billiard pipeline. Every command is a function of a
//! [`RunConfig`] that returns the text it would print; the binary only
//! parses arguments and routes output.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use cs_billiards::error::Error;
use cs_billiards::fourcurve::{d_profile, DProfile, DEFAULT_PROFILE_TOLERANCE};
use cs_billiards::geometry::{SupportFunction, Table, TableFile, DEFAULT_TOLERANCE};
use cs_billiards::quadrature::Quadrature;
use cs_billiards::rigidity::Tolerances;

pub mod commands;

pub const EXIT_IO: u8 = 1;
pub const EXIT_INVALID_TABLE: u8 = 2;
pub const EXIT_NO_PROFILE: u8 = 3;
pub const EXIT_REFLECT: u8 = 4;
pub const EXIT_DUAL_QUADRATURE: u8 = 5;
pub const EXIT_VIOLATED: u8 = 6;

/// Where the table comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TableSource {
    File { path: PathBuf },
    Circle { r: f64 },
    Ellipse { a: f64, b: f64 },
    /// `d(ψ) = π/4 + eps·sin(2·mode·ψ)` with `h = r sin d`.
    FromD { r: f64, eps: f64, mode: u32 },
}

impl Default for TableSource {
    fn default() -> Self {
        TableSource::Ellipse { a: 1.25, b: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub table: TableSource,
    pub quadrature: Quadrature,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub profile_tolerance: f64,
    /// Worker threads; `None` lets rayon decide. Never affects output.
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// Phase-portrait CSV written by `verify`.
    pub portrait: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            table: TableSource::default(),
            quadrature: Quadrature::default(),
            horizon: 64,
            samples: 10_000,
            seed: 42,
            tolerances: Tolerances::default(),
            profile_tolerance: DEFAULT_PROFILE_TOLERANCE,
            threads: None,
            out: None,
            portrait: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::new(EXIT_IO, format!("bad config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_table(&self) -> Result<Table, CliError> {
        let q = self.quadrature;
        if q.panels == 0 || q.order == 0 {
            return Err(CliError::new(EXIT_IO, "quadrature needs at least one panel and node"));
        }
        let table = match &self.table {
            TableSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))?;
                let file = TableFile::from_json(&text).map_err(CliError::table)?;
                file.build(q)
            }
            TableSource::Circle { r } => {
                Table::with_quadrature(SupportFunction::circle(*r), DEFAULT_TOLERANCE, q)
            }
            TableSource::Ellipse { a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(CliError::new(EXIT_INVALID_TABLE, "ellipse semi-axes must be positive"));
                }
                Table::with_quadrature(SupportFunction::ellipse(*a, *b, 32), DEFAULT_TOLERANCE, q)
            }
            TableSource::FromD { r, eps, mode } => DProfile::perturbed_quarter(*r, *eps, *mode)
                .and_then(|p| Table::with_quadrature(p.support_function(), DEFAULT_TOLERANCE, q)),
        };
        table.map_err(CliError::table)
    }

    pub fn build_profile(&self, table: &Table) -> Result<DProfile, CliError> {
        d_profile(table, self.profile_tolerance).map_err(CliError::from)
    }
}

/// A failure with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    /// Any failure while reading or building a table.
    fn table(e: Error) -> Self {
        CliError::new(EXIT_INVALID_TABLE, e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoFourPeriodicCurve { .. } => EXIT_NO_PROFILE,
            Error::DegenerateChord(_)
            | Error::RootNotBracketed { .. }
            | Error::NoConvergence { .. }
            | Error::OrbitStep { .. }
            | Error::CoincidentPoints => EXIT_REFLECT,
            Error::InconsistentInputs { .. } => EXIT_DUAL_QUADRATURE,
            Error::NotCentrallySymmetric { .. }
            | Error::NotConvex { .. }
            | Error::NonPositive { .. }
            | Error::ProfileSymmetryViolated { .. } => EXIT_INVALID_TABLE,
            Error::InvalidInput(_) | Error::Format(_) => EXIT_IO,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_IO, e.to_string())
    }
}

/// Run `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
