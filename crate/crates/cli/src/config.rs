//! Scenario files: a TOML description of the mean function, the probability
//! space, named variables and partitions, an optional Markov chain, and the
//! options of the command to run.

use std::collections::BTreeMap;
use std::path::Path;

use fmean_core::{
    Filtration, FiniteProbSpace, MarkovChainModel, MeanFunction, Partition, RandomVariable,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Mean,
    Wmean,
    CondMean,
    VarDecomp,
    Prefer,
    Ce,
    CeSchedule,
    MartingaleCheck,
    ExitTime,
    Estimate,
    Lln,
    Clt,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Mean => "mean",
            Command::Wmean => "wmean",
            Command::CondMean => "cond-mean",
            Command::VarDecomp => "var-decomp",
            Command::Prefer => "prefer",
            Command::Ce => "ce",
            Command::CeSchedule => "ce-schedule",
            Command::MartingaleCheck => "martingale-check",
            Command::ExitTime => "exit-time",
            Command::Estimate => "estimate",
            Command::Lln => "lln",
            Command::Clt => "clt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl FunctionSpec {
    pub fn resolve(&self) -> Result<MeanFunction> {
        Ok(MeanFunction::from_name(&self.name, &self.params)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub transition: Vec<Vec<f64>>,
    pub state_values: Vec<f64>,
    #[serde(default)]
    pub initial_state: usize,
}

/// A point given either as a bare number or as a coordinate list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointSpec {
    pub fn coords(&self) -> Vec<f64> {
        match self {
            PointSpec::Scalar(x) => vec![*x],
            PointSpec::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Points for `mean`.
    pub points: Option<Vec<PointSpec>>,
    /// Values and weights for `wmean`.
    pub values: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    /// Variable names; default `X` and `Y`.
    pub x: Option<String>,
    pub y: Option<String>,
    /// Conditioning partition name.
    pub partition: Option<String>,
    /// Coarser partition for the preference consistency check.
    pub coarse: Option<String>,
    /// Current and terminal wealth variables for `ce`.
    pub w_n: Option<String>,
    pub w_t: Option<String>,
    /// Markov horizon.
    #[serde(rename = "N")]
    pub horizon: Option<usize>,
    /// Exit level.
    #[serde(rename = "L")]
    pub level: Option<f64>,
    /// Exit-time window `k ≤ h`; defaults to `N`.
    #[serde(rename = "h")]
    pub window: Option<usize>,
    pub seed: Option<u64>,
    pub n_paths: Option<u64>,
    /// Sample size for `estimate` and `lln`.
    pub n: Option<usize>,
    pub checkpoints: Option<Vec<usize>>,
    /// Block index for a conditional `lln`.
    pub block: Option<usize>,
    /// Tuple length for the exact unbiasedness check in `estimate`.
    pub unbiased_n: Option<usize>,
    pub n_replicates: Option<usize>,
    pub n_per_replicate: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: Option<Command>,
    pub mean_function: FunctionSpec,
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub variables: BTreeMap<String, Vec<f64>>,
    /// Blocks of 0-based outcome indices.
    #[serde(default)]
    pub partitions: BTreeMap<String, Vec<Vec<usize>>>,
    /// Partition names, coarse to fine.
    #[serde(default)]
    pub filtration: Vec<String>,
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub options: Options,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn function(&self) -> Result<MeanFunction> {
        self.mean_function.resolve()
    }

    pub fn space(&self) -> Result<FiniteProbSpace> {
        let spec = self.space.as_ref().ok_or(CliError::Missing("space"))?;
        Ok(FiniteProbSpace::new(spec.probs.clone())?)
    }

    pub fn variable(&self, name: &str) -> Result<RandomVariable> {
        let values = self
            .variables
            .get(name)
            .ok_or_else(|| CliError::Unresolved {
                kind: "variable",
                name: name.to_string(),
            })?;
        Ok(RandomVariable::new(values.clone())?)
    }

    pub fn x_name(&self) -> &str {
        self.options.x.as_deref().unwrap_or("X")
    }

    pub fn y_name(&self) -> &str {
        self.options.y.as_deref().unwrap_or("Y")
    }

    pub fn partition(&self, name: &str, n_outcomes: usize) -> Result<Partition> {
        let blocks = self
            .partitions
            .get(name)
            .ok_or_else(|| CliError::Unresolved {
                kind: "partition",
                name: name.to_string(),
            })?;
        Ok(Partition::new(n_outcomes, blocks.clone())?)
    }

    pub fn filtration(&self, n_outcomes: usize) -> Result<Filtration> {
        let parts = self
            .filtration
            .iter()
            .map(|name| self.partition(name, n_outcomes))
            .collect::<Result<Vec<_>>>()?;
        if parts.is_empty() {
            return Err(CliError::Missing("filtration"));
        }
        Ok(Filtration::new(parts)?)
    }

    pub fn chain(&self) -> Result<MarkovChainModel> {
        let c = self.chain.as_ref().ok_or(CliError::Missing("chain"))?;
        Ok(MarkovChainModel::new(
            c.transition.clone(),
            c.state_values.clone(),
            c.initial_state,
        )?)
    }
}

impl std::str::FromStr for ScenarioConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Fetches a required option, naming it in the error when absent.
pub fn require<T: Clone>(value: &Option<T>, name: &'static str) -> Result<T> {
    value.clone().ok_or(CliError::Missing(name))
}
