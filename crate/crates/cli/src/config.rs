//! Run configuration document (TOML).
//!
//! Every section and key is optional; omitted values take the library
//! defaults. Unknown keys are rejected.
//!
//! ```toml
//! [arch]
//! num_wordlines = 8        # must match the data when given
//! cells_per_page = 32      # must match the data when given
//! k1 = 4.0                 # upside coupling weight
//! k2 = 1.0                 # underside coupling weight
//! alpha = 1.0
//!
//! [network]
//! hidden_size = 16
//! num_linear_layers = 1    # 1 or 2
//!
//! [train]
//! epochs = 300
//! learning_rate = 1e-3
//! seed = 1
//! beta1 = 0.9
//! beta2 = 0.999
//! epsilon = 1e-8
//! gradient_clip_norm = 5.0 # 0 disables clipping
//!
//! [anneal]
//! iterations = 10000
//! cooling_factor = 0.999
//! t0_fraction = 0.05       # initial temperature = fraction * greedy score
//! # initial_temperature = 40.0  # absolute value, overrides t0_fraction
//!
//! [random]
//! iterations = 10000
//!
//! [retention]
//! coupling = 0.08
//! time = 1.0
//! saturation_gain = 0.5
//! noise_sigma = 0.05
//! seed = 0
//!
//! [paths]
//! data_dir = "data"
//! model = "model.pdaw"
//! ```

use std::path::{Path, PathBuf};

use pda_core::channel::RetentionConfig;
use pda_core::neural::{NetworkConfig, TrainConfig};
use pda_core::solvers::AnnealSchedule;
use pda_core::ArchConfig;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub arch: ArchSection,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub anneal: AnnealSection,
    #[serde(default)]
    pub random: RandomSection,
    #[serde(default)]
    pub retention: RetentionSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ArchSection {
    pub num_wordlines: Option<usize>,
    pub cells_per_page: Option<usize>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub hidden_size: Option<usize>,
    pub num_linear_layers: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub gradient_clip_norm: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnnealSection {
    pub iterations: Option<u64>,
    pub cooling_factor: Option<f64>,
    pub t0_fraction: Option<f64>,
    pub initial_temperature: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomSection {
    pub iterations: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RetentionSection {
    pub coupling: Option<f64>,
    pub time: Option<f64>,
    pub saturation_gain: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub data_dir: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

pub const DEFAULT_HIDDEN_SIZE: usize = 16;

/// How simulated annealing picks its initial temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Temperature {
    Absolute(f64),
    /// Fraction of the greedy start score.
    Relative(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSettings {
    pub iterations: u64,
    pub cooling_factor: f64,
    pub temperature: Temperature,
}

impl AnnealSettings {
    pub fn schedule(&self, greedy_score: f64, seed: u64) -> AnnealSchedule {
        let initial_temperature = match self.temperature {
            Temperature::Absolute(t) => t,
            Temperature::Relative(frac) => (frac * greedy_score).max(f64::MIN_POSITIVE),
        };
        AnnealSchedule {
            initial_temperature,
            cooling_factor: self.cooling_factor,
            iterations: self.iterations,
            seed,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::at(path.display(), e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Loads `path` when given, otherwise the all-defaults configuration.
    pub fn load_or_default(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(RunConfig::default()), Self::load)
    }

    /// Checks every value that does not depend on the data.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |e: pda_core::Error| CliError::usage(format!("config: {e}"));
        let mut arch = self.arch(3, 1);
        if let Some(n) = self.arch.num_wordlines {
            arch.num_wordlines = n;
        }
        if let Some(c) = self.arch.cells_per_page {
            arch.cells_per_page = c;
        }
        arch.validate().map_err(bad)?;
        self.network(1, 3).validate().map_err(bad)?;
        self.train_config().validate().map_err(bad)?;
        self.anneal().schedule(1.0, 0).validate().map_err(bad)?;
        if let Some(t0) = self.anneal.t0_fraction {
            if !(t0.is_finite() && t0 > 0.0) {
                return Err(CliError::usage(format!("config: t0_fraction must be positive, got {t0}")));
            }
        }
        if self.random_iterations() == 0 {
            return Err(CliError::usage("config: random.iterations must be at least 1"));
        }
        self.retention().validate().map_err(bad)?;
        Ok(())
    }

    /// Architecture for data of the given shape, with the configured
    /// coupling coefficients.
    pub fn arch(&self, num_wordlines: usize, cells_per_page: usize) -> ArchConfig {
        let d = ArchConfig::default();
        ArchConfig {
            num_wordlines,
            cells_per_page,
            k1: self.arch.k1.unwrap_or(d.k1),
            k2: self.arch.k2.unwrap_or(d.k2),
            alpha: self.arch.alpha.unwrap_or(d.alpha),
        }
    }

    /// Like [`RunConfig::arch`], failing if configured dimensions disagree
    /// with the data.
    pub fn arch_for_data(&self, num_wordlines: usize, cells_per_page: usize) -> CliResult<ArchConfig> {
        for (name, want, got) in [
            ("num_wordlines", self.arch.num_wordlines, num_wordlines),
            ("cells_per_page", self.arch.cells_per_page, cells_per_page),
        ] {
            if let Some(want) = want {
                if want != got {
                    return Err(CliError::Data(format!("config sets {name} = {want}, data has {got}")));
                }
            }
        }
        Ok(self.arch(num_wordlines, cells_per_page))
    }

    pub fn network(&self, cells_per_page: usize, num_wordlines: usize) -> NetworkConfig {
        NetworkConfig::new(
            cells_per_page,
            self.network.hidden_size.unwrap_or(DEFAULT_HIDDEN_SIZE),
            self.network.num_linear_layers.unwrap_or(1),
            num_wordlines,
        )
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs.unwrap_or(d.epochs),
            learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
            seed: t.seed.unwrap_or(d.seed),
            beta1: t.beta1.unwrap_or(d.beta1),
            beta2: t.beta2.unwrap_or(d.beta2),
            epsilon: t.epsilon.unwrap_or(d.epsilon),
            gradient_clip_norm: match t.gradient_clip_norm {
                Some(c) if c == 0.0 => None,
                Some(c) => Some(c),
                None => d.gradient_clip_norm,
            },
        }
    }

    pub fn anneal(&self) -> AnnealSettings {
        let a = &self.anneal;
        AnnealSettings {
            iterations: a.iterations.unwrap_or(AnnealSchedule::DEFAULT_ITERATIONS),
            cooling_factor: a.cooling_factor.unwrap_or(AnnealSchedule::DEFAULT_COOLING),
            temperature: match a.initial_temperature {
                Some(t) => Temperature::Absolute(t),
                None => Temperature::Relative(a.t0_fraction.unwrap_or(AnnealSchedule::DEFAULT_T0_FRACTION)),
            },
        }
    }

    pub fn random_iterations(&self) -> u64 {
        self.random.iterations.unwrap_or(10_000)
    }

    pub fn retention(&self) -> RetentionConfig {
        let d = RetentionConfig::default();
        let r = &self.retention;
        RetentionConfig {
            coupling: r.coupling.unwrap_or(d.coupling),
            time: r.time.unwrap_or(d.time),
            saturation_gain: r.saturation_gain.unwrap_or(d.saturation_gain),
            noise_sigma: r.noise_sigma.unwrap_or(d.noise_sigma),
            seed: r.seed.unwrap_or(d.seed),
        }
    }
}
