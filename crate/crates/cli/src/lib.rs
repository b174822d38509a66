//! Verification front end: configuration, report assembly and the suites
//! behind each subcommand.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{Command, OutputFormat, RunConfig};
pub use report::{Record, Report, Summary};

/// Errors that stop a run before a report exists.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unknown names or invalid parameter combinations.
    #[error("usage: {0}")]
    Usage(String),
    /// A numerically computed integer could not be rounded safely.
    #[error("numerical ambiguity: {0}")]
    Ambiguous(String),
    /// An exact computation disagreed with itself.
    #[error("check failure: {0}")]
    Failure(String),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Ambiguous(_) => 3,
            CliError::Failure(_) | CliError::Output(_) => 1,
        }
    }
}

impl From<csforms_core::Error> for CliError {
    fn from(e: csforms_core::Error) -> Self {
        use csforms_core::Error;
        match e {
            Error::Precision { .. } => CliError::Ambiguous(e.to_string()),
            Error::Inconsistent { .. } => CliError::Failure(e.to_string()),
            Error::Domain(_) | Error::Unknown { .. } => CliError::Usage(e.to_string()),
        }
    }
}

/// Run one subcommand and assemble its report. The exit code is
/// [`Report::exit_code`] on success and [`CliError::exit_code`] otherwise.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    let mut records = suites::records(config)?;
    if let Some(tol) = config.tol {
        for r in &mut records {
            r.override_tolerance(tol);
        }
    }
    Ok(Report::new(config.clone(), records))
}

/// Render a report in the configured format.
pub fn render(report: &Report) -> Result<String, CliError> {
    match report.config.format {
        OutputFormat::Text => Ok(report.to_text()),
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    }
}
