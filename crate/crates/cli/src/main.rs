use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use csforms_cli::{render, run, CliError, Command, OutputFormat, RunConfig};

/// Numerical verification of transgression and Chern-Simons form identities.
#[derive(Debug, Parser)]
#[command(name = "csforms", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON report.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV report, one row per record.
    #[arg(long)]
    csv: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value_t = RunConfig::DEFAULT_SEED)]
    seed: u64,
    /// Tolerance replacing every non-exact check's default.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = RunConfig::DEFAULT_FD_STEP)]
    fd_step: f64,
    /// Quadrature order replacing every default order.
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long, default_value_t = RunConfig::DEFAULT_POINTS)]
    points: usize,
    /// RK4 steps for longitude parallel transport.
    #[arg(long, default_value_t = RunConfig::DEFAULT_TRANSPORT_STEPS)]
    transport_steps: usize,

    /// Bundle: hopf_u1, ut_s2, frame_s4, instanton_s4, flat:<G>:<n>, generic:<G>:<n>[:seed], optionally /<split>.
    #[arg(long)]
    bundle: Option<String>,
    /// Reductive split, overriding one given in --bundle.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    poly: Option<String>,
    /// Polynomial degree, or the largest degree for coeffs.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    chain: Option<String>,
    #[arg(long)]
    section: Option<String>,

    /// Append wall time to the report (breaks byte reproducibility).
    #[arg(long)]
    timing: bool,
}

impl Cli {
    fn config(&self) -> RunConfig {
        let format = if self.json {
            OutputFormat::Json
        } else if self.csv {
            OutputFormat::Csv
        } else {
            OutputFormat::Text
        };
        RunConfig {
            command: self.command,
            bundle: self.bundle.clone(),
            split: self.split.clone(),
            poly: self.poly.clone(),
            k: self.k,
            chain: self.chain.clone(),
            section: self.section.clone(),
            tol: self.tol,
            fd_step: self.fd_step,
            quad_order: self.quad_order,
            points: self.points,
            seed: self.seed,
            transport_steps: self.transport_steps,
            format,
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let start = Instant::now();
    let mut report = run(&cli.config())?;
    if cli.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    let text = render(&report)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("csforms: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
