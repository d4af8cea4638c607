//! JSON run configuration.
//!
//! Exponents (`gamma`, `eta`, `epsilon`) are given as multiples of the
//! Lyapunov exponent `L = ln lambda`.

use std::fmt;
use std::path::{Path, PathBuf};

use amolab_core::correlator::{default_margin, StratifiedSpec, Strategy};
use amolab_core::{AlphaSource, Frequency, ModelParams, Window};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Command;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub lambda: f64,
    /// `golden`, `silver`, `surd(p,d,q)`, `p/q` or a decimal.
    pub alpha: String,
    pub theta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lambda: 3.0,
            alpha: "golden".into(),
            theta: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    /// Half-width of `[-radius, radius]` for spectra and decay verdicts.
    pub radius: u32,
    /// Extra sites around `[0, l_max]` for correlators; `ceil(30 / L)` when unset.
    pub margin: Option<u32>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            radius: 200,
            margin: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllRange {
    pub min: i64,
    pub max: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    UniformGrid {
        points: usize,
    },
    MonteCarlo {
        samples: usize,
    },
    Stratified {
        #[serde(default = "StratifiedSpec::default_ladder")]
        ladder: Vec<f64>,
        shell_samples: usize,
        bulk_points: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovConfig {
    pub steps: u64,
    /// Number of eigenvalues of the truncation to sample.
    pub energies: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            steps: 100_000,
            energies: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Full,
    Smoke,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub window: WindowConfig,
    pub ell: EllRange,
    pub strategy: StrategyConfig,
    pub gamma: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub delta0: f64,
    /// Distances for the lower-bound and palindrome experiments.
    pub n: Vec<i64>,
    /// Seeded phases for the decay verdicts.
    pub phases: usize,
    /// Phases drawn from the constructed set in the lower-bound experiment.
    pub samples: usize,
    pub lyapunov: LyapunovConfig,
    pub dos_bins: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub scale: Scale,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            window: WindowConfig::default(),
            ell: EllRange { min: 4, max: 24 },
            strategy: StrategyConfig::Stratified {
                ladder: StratifiedSpec::default_ladder(),
                shell_samples: 256,
                bulk_points: 20_000,
            },
            gamma: 1.2,
            eta: 0.3,
            epsilon: 0.15,
            delta0: 0.2,
            n: vec![8, 12, 16],
            phases: 200,
            samples: 50,
            lyapunov: LyapunovConfig::default(),
            dos_bins: 64,
            seed: 1,
            workers: None,
            out: PathBuf::from("amolab-out"),
            scale: Scale::Full,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Checker(Vec<FieldError>);

impl Checker {
    fn check(&mut self, ok: bool, field: &str, message: impl Into<String>) {
        if !ok {
            self.0.push(FieldError {
                field: field.into(),
                message: message.into(),
            });
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, FieldError> {
        let text = std::fs::read_to_string(path).map_err(|e| FieldError {
            field: "config".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        serde_json::from_str(text).map_err(|e| FieldError {
            field: "config".into(),
            message: e.to_string(),
        })
    }

    pub fn alpha(&self) -> Result<Frequency, String> {
        let src: AlphaSource = self.model.alpha.parse().map_err(|e: amolab_core::Error| e.to_string())?;
        Frequency::from_source(&src).map_err(|e| e.to_string())
    }

    pub fn params(&self) -> amolab_core::Result<ModelParams> {
        let alpha = self.alpha().map_err(|reason| amolab_core::Error::InvalidArgument { name: "alpha", reason })?;
        ModelParams::new(self.model.lambda, alpha, self.model.theta)
    }

    pub fn lyapunov(&self) -> f64 {
        self.model.lambda.abs().ln().max(0.0)
    }

    pub fn window(&self) -> Window {
        Window::symmetric(self.window.radius)
    }

    pub fn margin(&self) -> u32 {
        self.window.margin.unwrap_or_else(|| default_margin(self.lyapunov()))
    }

    pub fn strategy(&self) -> Strategy {
        match &self.strategy {
            StrategyConfig::UniformGrid { points } => Strategy::UniformGrid { points: *points },
            StrategyConfig::MonteCarlo { samples } => Strategy::MonteCarlo {
                samples: *samples,
                seed: self.seed,
            },
            StrategyConfig::Stratified {
                ladder,
                shell_samples,
                bulk_points,
            } => Strategy::Stratified(StratifiedSpec {
                ladder: ladder.clone(),
                shell_samples: *shell_samples,
                bulk_points: *bulk_points,
                seed: self.seed,
            }),
        }
    }

    /// The config without fields that cannot change numerical output.
    pub fn canonical(&self) -> Self {
        let mut c = self.clone();
        c.workers = None;
        c.out = PathBuf::new();
        c
    }

    /// SHA-256 of the canonical JSON form, see [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.canonical()).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Field-level diagnostics for everything `command` will consume.
    pub fn validate(&self, command: Command) -> Vec<FieldError> {
        let mut c = Checker(Vec::new());
        let lam = self.model.lambda;
        c.check(lam.is_finite() && lam > 0.0, "model.lambda", "must be finite and positive");
        if let Err(e) = self.alpha() {
            c.check(false, "model.alpha", e);
        }
        c.check(self.model.theta.is_finite(), "model.theta", "must be finite");
        c.check(
            self.window.radius >= 1 && self.window.radius <= 5000,
            "window.radius",
            "must lie in [1, 5000]",
        );
        if let Some(m) = self.window.margin {
            c.check(m >= 1 && m <= 1000, "window.margin", "must lie in [1, 1000]");
        }
        c.check(self.workers.map_or(true, |w| w >= 1), "workers", "must be at least 1");

        let supercritical = lam.is_finite() && lam > 1.0;
        let needs_l = !matches!(command, Command::Spectrum | Command::CheckAll);
        if needs_l {
            c.check(supercritical, "model.lambda", "this command needs lambda > 1");
        }
        match command {
            Command::Spectrum => {
                c.check(self.dos_bins >= 1, "dos_bins", "must be at least 1");
            }
            Command::Lyapunov => {
                c.check(self.lyapunov.steps >= 1000, "lyapunov.steps", "must be at least 1000");
                c.check(self.lyapunov.energies >= 1, "lyapunov.energies", "must be at least 1");
            }
            Command::Correlator | Command::Gamma => {
                c.check(self.ell.min <= self.ell.max, "ell", format!("empty range [{}, {}]", self.ell.min, self.ell.max));
                c.check(self.ell.min >= 1, "ell.min", "must be at least 1");
                c.check(self.ell.max <= 200, "ell.max", "must be at most 200");
                if command == Command::Gamma {
                    c.check(
                        self.ell.max - self.ell.min + 1 >= 5,
                        "ell",
                        "the fit needs at least 5 distances",
                    );
                }
                self.validate_strategy(&mut c);
            }
            Command::VerifyLocalization => {
                c.check(self.phases >= 1, "phases", "must be at least 1");
                c.check(self.epsilon > 0.0 && self.epsilon < 1.0, "epsilon", "must lie in (0, 1)");
                c.check(
                    self.eta > 0.0 && self.eta < 1.0 - self.epsilon,
                    "eta",
                    "must lie in (0, 1 - epsilon)",
                );
            }
            Command::ResonanceSets => {
                c.check(self.eta > 0.0 && self.eta.is_finite(), "eta", "must be positive");
                c.check(self.gamma > 1.0 && self.gamma <= 2.0, "gamma", "must lie in (1, 2]");
                self.validate_n(&mut c);
                c.check(self.ell.min <= self.ell.max, "ell", format!("empty range [{}, {}]", self.ell.min, self.ell.max));
            }
            Command::ThetaExperiment => {
                c.check(self.gamma > 1.0 && self.gamma <= 2.0, "gamma", "must lie in (1, 2]");
                c.check(self.samples >= 1, "samples", "must be at least 1");
                self.validate_n(&mut c);
            }
            Command::Palindrome => {
                c.check(self.gamma >= 1.0 && self.gamma <= 2.0, "gamma", "must lie in [1, 2]");
                c.check(self.epsilon >= 0.0 && self.epsilon < 1.0, "epsilon", "must lie in [0, 1)");
                self.validate_n(&mut c);
            }
            Command::CheckAll => {}
        }
        c.0
    }

    fn validate_n(&self, c: &mut Checker) {
        c.check(!self.n.is_empty(), "n", "must list at least one distance");
        c.check(self.n.iter().all(|&n| n != 0 && n.abs() <= 1000), "n", "entries must be nonzero with |n| <= 1000");
    }

    fn validate_strategy(&self, c: &mut Checker) {
        match &self.strategy {
            StrategyConfig::UniformGrid { points } => {
                c.check(*points >= 2, "strategy.points", "must be at least 2");
            }
            StrategyConfig::MonteCarlo { samples } => {
                c.check(*samples >= 2, "strategy.samples", "must be at least 2");
            }
            StrategyConfig::Stratified {
                ladder,
                shell_samples,
                bulk_points,
            } => {
                c.check(
                    !ladder.is_empty() && ladder[0] > 0.0 && ladder.windows(2).all(|w| w[0] < w[1]),
                    "strategy.ladder",
                    "must be positive and strictly increasing",
                );
                c.check(*shell_samples >= 2, "strategy.shell_samples", "must be at least 2");
                c.check(*bulk_points >= 1, "strategy.bulk_points", "must be at least 1");
            }
        }
    }
}
