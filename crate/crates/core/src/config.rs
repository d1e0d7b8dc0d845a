//! Run configuration files.
//!
//! A run is described by a TOML document with four sections:
//!
//! ```toml
//! [model]
//! name = "zigzag"            # zigzag | bps | boomerang | fec
//! refresh_rate = 0.0
//!
//! [target]
//! name = "gaussian"          # gaussian (alias gaussian_std) | two_scale_mixture | local_mixture_20 | banana | flat
//! dim = 2
//!
//! [sampler]
//! n_events = 1000
//! t_max = 1.0
//! n_segments = 10            # 0 = Brent constant bound
//! alpha_plus = 1.01
//! alpha_minus = 1.04
//! adapt = true
//! strategy = "vectorized_signed"
//! seed = 1
//!
//! [output]
//! dir = "out"
//! ```

use serde::{Deserialize, Serialize};

use crate::diff::Potential;
use crate::error::{Error, Result};
use crate::models::{ModelSpec, PdmpModel};
use crate::process::Skeleton;
use crate::sampler::{self, RunStats, SamplerConfig};
use crate::stats::{path_mean, path_second_moment};
use crate::targets::TargetSpec;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub target: TargetSpec,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Everything a run reports: config echo, counters and path moments.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub strategy: &'static str,
    #[serde(flatten)]
    pub stats: RunStats,
    pub total_grad_evals: u64,
    pub thinning_ar: f64,
    pub mean: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Builds model and target and checks that they fit the sampler settings.
    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<(Box<dyn PdmpModel>, Box<dyn Potential>)> {
        self.sampler.validate()?;
        let model = self.model.build()?;
        let target = self.target.build()?;
        let strategy = self.sampler.effective_strategy(model.as_ref());
        strategy
            .check(model.rate_form())
            .map_err(|e| Error::config("sampler.strategy", e.to_string()))?;
        if let Some(x) = &self.sampler.initial_position {
            if x.len() != target.dim() {
                return Err(Error::config(
                    "sampler.initial_position",
                    format!("expected {} coordinates", target.dim()),
                ));
            }
        }
        if let Some(v) = &self.sampler.initial_velocity {
            if v.len() != target.dim() {
                return Err(Error::config(
                    "sampler.initial_velocity",
                    format!("expected {} coordinates", target.dim()),
                ));
            }
            model
                .check_velocity(v)
                .map_err(|e| Error::config("sampler.initial_velocity", e.to_string()))?;
        }
        Ok((model, target))
    }

    /// Runs the sampler and summarises the skeleton.
    pub fn execute(&self) -> Result<(Skeleton, RunSummary)> {
        let (model, target) = self.build()?;
        let (skeleton, stats) = sampler::run(model.as_ref(), target.as_ref(), &self.sampler)?;
        let flow = model.flow();
        let summary = RunSummary {
            config: self.clone(),
            strategy: self.sampler.effective_strategy(model.as_ref()).name(),
            total_grad_evals: stats.total_grad_evals(),
            thinning_ar: stats.thinning_ar(),
            mean: path_mean(&skeleton, flow)?,
            second_moment: path_second_moment(&skeleton, flow)?,
            stats,
        };
        Ok((skeleton, summary))
    }
}
