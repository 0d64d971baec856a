//! The subcommands. Each returns its machine-readable output as text plus
//! diagnostics meant for the error stream.

use std::io::Write;

use serde::Serialize;

use cs_billiards::fourcurve::{validate_four_periodic, DProfile, FourPeriodicReport, ProfileFile};
use cs_billiards::geometry::{Metrics, Table};
use cs_billiards::measure::{estimate_m_measure_sweep, EstimateReport, MeasureSweep, Sampler};
use cs_billiards::phasemap::{iterate, write_orbit_csv, PhasePoint};
use cs_billiards::rigidity::{verify_main_theorem, RigidityReport};
use cs_billiards::variational::{write_classification_csv, ClassifiedPoint};

use crate::{with_threads, CliError, RunConfig, EXIT_DUAL_QUADRATURE, EXIT_VIOLATED};

/// Samples used by `profile` to check the four-periodic closure.
const CLOSURE_SAMPLES: usize = 100;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub diagnostics: Vec<String>,
    pub code: u8,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome {
            output,
            ..Outcome::default()
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct TableInfo {
    metrics: Metrics,
    hopf_bound: f64,
    #[serde(rename = "R")]
    radius: Option<f64>,
    #[serde(rename = "R2")]
    radius_sq: Option<f64>,
    profile_error: Option<String>,
}

pub fn table_info(config: &RunConfig) -> Result<Outcome, CliError> {
    let table = config.build_table()?;
    let (radius, profile_error) = match config.build_profile(&table) {
        Ok(p) => (Some(p.radius()), None),
        Err(e) => (None, Some(e.message)),
    };
    let info = TableInfo {
        metrics: *table.metrics(),
        hopf_bound: table.hopf_bound(),
        radius,
        radius_sq: radius.map(|r| r * r),
        profile_error,
    };
    let mut out = Outcome::ok(json(&info));
    if let Some(e) = &info.profile_error {
        out.diagnostics.push(format!("no d-profile: {e}"));
    }
    Ok(out)
}

pub fn orbit(config: &RunConfig, p: f64, phi: f64, n: usize) -> Result<Outcome, CliError> {
    let table = config.build_table()?;
    let segment = iterate(&table, PhasePoint::new(p, phi), n)?;
    let mut buf = Vec::new();
    write_orbit_csv(&segment, &mut buf)?;
    Ok(Outcome::ok(String::from_utf8(buf).expect("csv is utf-8")))
}

#[derive(Serialize)]
struct ProfileOutput {
    #[serde(flatten)]
    file: ProfileFile,
    four_periodic: FourPeriodicReport,
}

pub fn profile(config: &RunConfig) -> Result<Outcome, CliError> {
    let table = config.build_table()?;
    let profile = config.build_profile(&table)?;
    let report = with_threads(config.threads, || validate_four_periodic(&table, &profile, CLOSURE_SAMPLES))?;
    let (closes, closure) = (report.closes(config.tolerances.deterministic), report.max_closure_error);
    let mut out = Outcome::ok(json(&ProfileOutput {
        file: ProfileFile::from_profile(&profile),
        four_periodic: report,
    }));
    if !closes {
        out.diagnostics.push(format!(
            "four-periodic closure not reached: max |T^4 z - z| = {closure:e}"
        ));
    }
    Ok(out)
}

/// `8, 16, 32, …` below the configured horizon, then the horizon itself.
pub fn horizon_sweep(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(8usize), |n| Some(n * 2))
        .take_while(|&n| n < horizon)
        .collect();
    out.push(horizon.max(2));
    out
}

fn sampler(config: &RunConfig) -> Sampler {
    Sampler::Stratified {
        samples: config.samples,
        seed: config.seed,
    }
}

fn sweep(config: &RunConfig, horizons: &[usize]) -> Result<(Table, DProfile, MeasureSweep), CliError> {
    let table = config.build_table()?;
    let profile = config.build_profile(&table)?;
    let s = with_threads(config.threads, || {
        estimate_m_measure_sweep(&table, &profile, horizons, &sampler(config))
    })?;
    Ok((table, profile, s))
}

/// Rows of the classification at horizon index `k` of every sample.
fn rows_at(sweep: &MeasureSweep, k: usize) -> Vec<ClassifiedPoint> {
    sweep.points.iter().map(|p| p[k]).collect()
}

fn csv(rows: &[ClassifiedPoint]) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_classification_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

pub fn classify(config: &RunConfig) -> Result<Outcome, CliError> {
    let (_, _, s) = sweep(config, &[config.horizon.max(2)])?;
    Ok(Outcome::ok(csv(&rows_at(&s, 0))?))
}

pub fn measure(config: &RunConfig) -> Result<Outcome, CliError> {
    let (_, _, s) = sweep(config, &[config.horizon.max(2)])?;
    let report = EstimateReport::new(&s.mu_b, &s.estimates[0]);
    Ok(Outcome::ok(json(&report)))
}

pub fn verify_report(config: &RunConfig) -> Result<(RigidityReport, Vec<ClassifiedPoint>), CliError> {
    let horizons = horizon_sweep(config.horizon);
    let (table, profile, s) = sweep(config, &horizons)?;
    let report = verify_main_theorem(&table, &profile, s.mu_b, &s.estimates, &config.tolerances)?;
    Ok((report, rows_at(&s, horizons.len() - 1)))
}

pub fn verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let (report, rows) = verify_report(config)?;
    if let Some(path) = &config.portrait {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(csv(&rows)?.as_bytes())?;
        f.flush()?;
    }
    let mut out = Outcome::ok(json(&report));
    let f = report.flags;
    out.diagnostics.push(format!(
        "flags: a={:?} b={:?} c={:?} d={:?} e={:?}",
        f.a, f.b, f.c, f.d, f.e
    ));
    if report.dual_quadrature_residual > config.tolerances.dual_quadrature {
        out.code = EXIT_DUAL_QUADRATURE;
        out.diagnostics.push(format!(
            "1-D and 2-D quadratures of I disagree by {:e}",
            report.dual_quadrature_residual
        ));
    } else if f.any_violated() {
        out.code = EXIT_VIOLATED;
        out.diagnostics.push("an inequality is violated".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_ends_at_horizon() {
        assert_eq!(horizon_sweep(64), vec![8, 16, 32, 64]);
        assert_eq!(horizon_sweep(20), vec![8, 16, 20]);
        assert_eq!(horizon_sweep(4), vec![4]);
        assert_eq!(horizon_sweep(1), vec![2]);
    }
}
