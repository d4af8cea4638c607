//! Experiment driver: configuration, eigensystem cache, artifact writers and
//! the acceptance suite.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;
pub mod suite;

use std::path::PathBuf;

use cache::{EigenCache, CACHE_ENV};
use config::{FieldError, RunConfig};
use output::Artifacts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Eigensystem and density-of-states histogram.
    Spectrum,
    /// Lyapunov exponent over interior eigenvalues of the truncation.
    Lyapunov,
    /// Phase-averaged correlator over the configured distance range.
    Correlator,
    /// Correlator sweep with decay-rate fit.
    Gamma,
    /// Decay verdict tables on seeded phases.
    VerifyLocalization,
    /// Resonance arcs and their measures.
    ResonanceSets,
    /// Lower-bound experiment on constructed phases.
    ThetaExperiment,
    /// Palindromic reflection report at exactly resonant phases.
    Palindrome,
    /// The full acceptance suite.
    CheckAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Lyapunov => "lyapunov",
            Command::Correlator => "correlator",
            Command::Gamma => "gamma",
            Command::VerifyLocalization => "verify-localization",
            Command::ResonanceSets => "resonance-sets",
            Command::ThetaExperiment => "theta-experiment",
            Command::Palindrome => "palindrome",
            Command::CheckAll => "check-all",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<FieldError>),
    #[error("numerical failure: {0}")]
    Numerical(#[from] amolab_core::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("acceptance suite failed: criteria {0:?}")]
    Acceptance(Vec<u32>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
            CliError::Acceptance(_) => 3,
        }
    }
}

/// Cache root: the explicit directory, then the environment, else none.
pub fn cache_root(explicit: Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
}

/// Validates `config` for `command`, runs it on a pool of the configured
/// size and returns the files written.
pub fn run(command: Command, config: &RunConfig, cache_dir: Option<PathBuf>) -> Result<Vec<String>, CliError> {
    let errors = config.validate(command);
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let cache = cache_root(cache_dir).map(EigenCache::open).transpose()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(std::io::Error::other)?;
    let out = Artifacts::create(&config.out, &config.hash())?;
    let ctx = commands::Context {
        config,
        cache: cache.as_ref(),
        out,
    };
    pool.install(|| match command {
        Command::Spectrum => commands::spectrum(ctx),
        Command::Lyapunov => commands::lyapunov(ctx),
        Command::Correlator => commands::correlator(ctx),
        Command::Gamma => commands::gamma(ctx),
        Command::VerifyLocalization => commands::verify_localization(ctx),
        Command::ResonanceSets => commands::resonance_sets(ctx),
        Command::ThetaExperiment => commands::theta_experiment(ctx),
        Command::Palindrome => commands::palindrome(ctx),
        Command::CheckAll => commands::check_all(ctx),
    })
}
