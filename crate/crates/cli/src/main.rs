use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cs_billiards_cli::commands::{self, Outcome};
use cs_billiards_cli::{CliError, RunConfig, TableSource, EXIT_IO};

#[derive(Parser)]
#[command(name = "csbill", version, about = "Centrally symmetric billiard tables: orbits, maximizing sets and rigidity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Subcommand)]
enum Command {
    /// Table metrics and whether a 4-periodic invariant curve exists.
    TableInfo,
    /// Iterate the billiard map from the line (p, phi) and dump a CSV.
    Orbit {
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// The d-profile of the invariant curve and its closure report.
    Profile,
    /// Classify stratified samples of B at the horizon.
    Classify,
    /// Estimate the measures of B and of its maximizing part.
    Measure,
    /// Full pipeline: rigidity report and phase portrait.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Circle,
    Ellipse,
    FromD,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Table file `{ "cos": [...], "sin": [...] }`.
    #[arg(long, global = true, conflicts_with = "builtin")]
    file: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    builtin: Option<Builtin>,
    /// Circle radius, or R for from-d.
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    mode: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quad_panels: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Slack for deterministic inequalities.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Phase-portrait CSV written by `verify`.
    #[arg(long, global = true)]
    portrait: Option<PathBuf>,
}

impl Global {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(path) = &self.file {
            c.table = TableSource::File { path: path.clone() };
        }
        if let Some(b) = self.builtin {
            c.table = match b {
                Builtin::Circle => TableSource::Circle { r: 1.0 },
                Builtin::Ellipse => TableSource::Ellipse { a: 1.25, b: 1.0 },
                Builtin::FromD => TableSource::FromD { r: 1.0, eps: 0.05, mode: 1 },
            };
        }
        match &mut c.table {
            TableSource::Circle { r } => *r = self.r.unwrap_or(*r),
            TableSource::Ellipse { a, b } => {
                *a = self.a.unwrap_or(*a);
                *b = self.b.unwrap_or(*b);
            }
            TableSource::FromD { r, eps, mode } => {
                *r = self.r.unwrap_or(*r);
                *eps = self.eps.unwrap_or(*eps);
                *mode = self.mode.unwrap_or(*mode);
            }
            TableSource::File { .. } => {}
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.quad_panels {
            c.quadrature.panels = v;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(v) = self.tol {
            c.tolerances.deterministic = v;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.portrait.is_some() {
            c.portrait = self.portrait.clone();
        }
        Ok(c)
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = cli.global.config()?;
    let outcome = match &cli.command {
        Command::TableInfo => commands::table_info(&config)?,
        Command::Orbit { p, phi, n } => commands::orbit(&config, *p, *phi, *n)?,
        Command::Profile => commands::profile(&config)?,
        Command::Classify => commands::classify(&config)?,
        Command::Measure => commands::measure(&config)?,
        Command::Verify => commands::verify(&config)?,
    };
    match &config.out {
        Some(path) => std::fs::write(path, &outcome.output)?,
        None => std::io::stdout().write_all(outcome.output.as_bytes())?,
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.diagnostics {
                eprintln!("{line}");
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
