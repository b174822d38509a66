use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

/// Verification subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact coefficient table, recursions, linear relations and fiber constant.
    Coeffs,
    /// Calculus property suite: d∘d, Leibniz, Stokes, graded brackets, invariance.
    Identities,
    /// dΦP = P(Ω) - P(Ψ) at seeded random points.
    HeteroticCheck,
    /// Euler integrals over closed chains.
    GaussBonnet,
    /// Characteristic numbers against the bundle catalogue.
    ChernNumber,
    /// Fiber integrals of ΦP.
    FiberNorm,
    /// P₁(Ψ₁) + P₁(Ψ₂) = P₁(Ω) on the two quaternionic-structure bundles.
    PontryaginSplit,
    /// ∫_α e(Ω) = Σ a_j + ∫_{∂α} s*Φe on chains with boundary.
    Obstruction,
    /// Winding degrees of sections around their singular points.
    Degree,
    /// Every acceptance suite in order.
    SuiteAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
}

/// Fully resolved run parameters. Embedded verbatim in every report; the
/// seed determines every random sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub bundle: Option<String>,
    pub split: Option<String>,
    pub poly: Option<String>,
    pub k: Option<usize>,
    pub chain: Option<String>,
    pub section: Option<String>,
    /// Replaces the tolerance of every non-exact record.
    pub tol: Option<f64>,
    pub fd_step: f64,
    /// Replaces every quadrature order when set.
    pub quad_order: Option<usize>,
    pub points: usize,
    pub seed: u64,
    pub transport_steps: usize,
    pub format: OutputFormat,
}

impl RunConfig {
    pub const DEFAULT_FD_STEP: f64 = 1e-4;
    pub const DEFAULT_POINTS: usize = 100;
    pub const DEFAULT_SEED: u64 = 7;
    pub const DEFAULT_TRANSPORT_STEPS: usize = 16;

    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            bundle: None,
            split: None,
            poly: None,
            k: None,
            chain: None,
            section: None,
            tol: None,
            fd_step: Self::DEFAULT_FD_STEP,
            quad_order: None,
            points: Self::DEFAULT_POINTS,
            seed: Self::DEFAULT_SEED,
            transport_steps: Self::DEFAULT_TRANSPORT_STEPS,
            format: OutputFormat::Text,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return usage("--fd-step must be a positive number");
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0 && t.is_finite()) {
                return usage("--tol must be a non-negative number");
            }
        }
        if self.points == 0 {
            return usage("--points must be positive");
        }
        if self.quad_order == Some(0) {
            return usage("--quad-order must be positive");
        }
        if self.transport_steps == 0 {
            return usage("--transport-steps must be positive");
        }
        if self.k == Some(0) {
            return usage("--k must be positive");
        }
        Ok(())
    }
}
