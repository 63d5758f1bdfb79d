//! Experiment configuration files.
//!
//! A config is a flat TOML file; only `symbol` may be a table. Example:
//!
//! ```toml
//! experiment = "certificate"
//! symbol = "knese-pair"
//! beta = 8.0
//! q = 2.0
//! scales = [0.25, 0.125, 0.0625]
//! samples = 1000000
//! seed = "0xB1D15C"
//! ```

use std::path::{Path, PathBuf};

use bidisc_core::measure::{parse_seed, DEFAULT_SEED};
use bidisc_core::{zoo, BoundaryPoint, RationalInnerFunction, SymbolPair};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ReflectCheck,
    VolumeLemma,
    BoxScaling,
    NtLimit,
    ZeroSet,
    Lojasiewicz,
    Certificate,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ReflectCheck => "reflect-check",
            Experiment::VolumeLemma => "volume-lemma",
            Experiment::BoxScaling => "box-scaling",
            Experiment::NtLimit => "nt-limit",
            Experiment::ZeroSet => "zero-set",
            Experiment::Lojasiewicz => "lojasiewicz",
            Experiment::Certificate => "certificate",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// A zoo name, a zoo entry with parameters, or two explicit functions in the
/// polynomial JSON layout (as a TOML table or an inline JSON string).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSpec {
    Name(String),
    Zoo {
        zoo: String,
        a_angle: Option<f64>,
        b_angle: Option<f64>,
    },
    Explicit {
        first: RationalInnerFunction,
        second: RationalInnerFunction,
    },
}

impl SymbolSpec {
    pub fn build(&self) -> Result<SymbolPair, CliError> {
        let named = |name: &str, a: Option<f64>, b: Option<f64>| -> Result<SymbolPair, CliError> {
            match name.replace('_', "-").as_str() {
                "knese" | "knese-pair" => Ok(zoo::knese_pair()),
                "identity" | "identity-pair" => Ok(zoo::identity_pair()),
                "phi-ab" | "phi-ab-pair" => match (a, b) {
                    (Some(a), Some(b)) => zoo::phi_ab_pair(a, b).map_err(CliError::Invalid),
                    _ => Err(CliError::Config("phi-ab needs a_angle and b_angle".into())),
                },
                other => Err(CliError::Config(format!("unknown zoo symbol `{other}`"))),
            }
        };
        match self {
            SymbolSpec::Name(n) if n.trim_start().starts_with('{') => {
                serde_json::from_str(n).map_err(|e| CliError::Config(format!("inline symbol: {e}")))
            }
            SymbolSpec::Name(n) => named(n, None, None),
            SymbolSpec::Zoo { zoo, a_angle, b_angle } => named(zoo, *a_angle, *b_angle),
            SymbolSpec::Explicit { first, second } => {
                SymbolPair::new(first.clone(), second.clone()).map_err(CliError::Invalid)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedValue {
    Int(u64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub symbol: Option<SymbolSpec>,
    pub beta: Option<f64>,
    pub a: Option<f64>,
    pub q: Option<f64>,
    pub scales: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub seed: Option<SeedValue>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    /// `delta2 = aspect * delta1` for rectangular boxes.
    pub aspect: Option<f64>,
    /// Box centers (angle pairs) for sweeps and box scaling; evaluation
    /// points for `nt-limit`.
    pub centers: Option<Vec<[f64; 2]>>,
    /// One singularity (angle pair) per coordinate.
    pub designated: Option<[[f64; 2]; 2]>,
    pub radius: Option<f64>,
    pub bins: Option<usize>,
    pub margin: Option<f64>,
    pub grid: Option<usize>,
    pub zetas: Option<usize>,
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        match &self.seed {
            None => Ok(DEFAULT_SEED),
            Some(SeedValue::Int(s)) => Ok(*s),
            Some(SeedValue::Text(t)) => parse_seed(t).map_err(CliError::Invalid),
        }
    }

    pub fn symbol(&self, default: &str) -> Result<SymbolPair, CliError> {
        match &self.symbol {
            Some(s) => s.build(),
            None => SymbolSpec::Name(default.into()).build(),
        }
    }

    pub fn require<T: Copy>(value: Option<T>, key: &str, experiment: Experiment) -> Result<T, CliError> {
        value.ok_or_else(|| CliError::Config(format!("`{key}` is required for {}", experiment.name())))
    }

    pub fn centers(&self) -> Option<Vec<BoundaryPoint>> {
        self.centers
            .as_ref()
            .map(|cs| cs.iter().map(|c| BoundaryPoint::new(c[0], c[1])).collect())
    }

    pub fn designated(&self) -> [Option<BoundaryPoint>; 2] {
        match self.designated {
            Some([a, b]) => [Some(BoundaryPoint::new(a[0], a[1])), Some(BoundaryPoint::new(b[0], b[1]))],
            None => [None, None],
        }
    }
}
