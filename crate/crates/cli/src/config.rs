//! Run configuration. Every field has a default, so `{}` is a valid file;
//! command-line flags are applied on top of whatever the file sets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vtergm::estimator::CapPolicy;
use vtergm::flownet::{
    DYAD_LOG_DISTANCE, DYAD_POLITICAL, DYAD_RACIAL, DYAD_RURAL, DYAD_SAME_STATE, DYAD_UNEMP_DIFF,
};
use vtergm::ingest::SyntheticConfig;
use vtergm::sampler::Proposal;
use vtergm::{ModelSpec, TermSpec};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    pub model: Option<ModelSpec>,
    pub estimator: EstimatorSettings,
    pub chain: ChainSettings,
    pub knockout: KnockoutSettings,
    pub synth: SynthSettings,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Input files. Relative paths are taken relative to the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub flows: Option<PathBuf>,
    pub lagged_flows: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub distances: Option<PathBuf>,
    /// `fit.json` written by `fit`; used by gof, simulate and knockout.
    pub fit: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Dyads in the stratified sample; absent means every dyad.
    pub sample_size: Option<usize>,
    pub ridge_lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub cap: CapPolicy,
    pub effective_n: Option<f64>,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        let d = vtergm::FitOptions::default();
        EstimatorSettings {
            sample_size: None,
            ridge_lambda: d.ridge_lambda,
            tol: d.tol,
            max_iter: d.max_iter,
            cap: d.cap,
            effective_n: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSettings {
    /// Proposals per chain before the first draw; default ten per dyad.
    pub burn_in: Option<u64>,
    /// Proposals between draws; default one per dyad.
    pub thin: Option<u64>,
    pub n_networks: usize,
    pub proposal: Proposal,
    pub chains: usize,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            burn_in: None,
            thin: None,
            n_networks: 100,
            proposal: Proposal::default(),
            chains: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnockoutSettings {
    pub zero_labels: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub generator: SyntheticConfig,
    /// Coefficients for `model`; both default to [`default_synth_model`].
    pub theta: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::Error::new(e).context(format!("reading config {}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::Error::new(e).context(format!("parsing config {}", path.display())))?;
        Ok(cfg)
    }

    /// Rewrite relative input paths against `base`.
    pub fn resolve_inputs(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.inputs.flows);
        fix(&mut self.inputs.lagged_flows);
        fix(&mut self.inputs.nodes);
        fix(&mut self.inputs.distances);
        fix(&mut self.inputs.fit);
    }

    pub fn validate(&mut self) -> Result<(), CliError> {
        if let Some(m) = &mut self.model {
            m.normalize().map_err(|e| CliError::Validation(format!("model: {e}")))?;
        }
        let e = &self.estimator;
        if !(e.ridge_lambda >= 0.0 && e.ridge_lambda.is_finite()) {
            return Err(CliError::Validation("estimator.ridge_lambda must be finite and non-negative".into()));
        }
        if !(e.tol > 0.0) {
            return Err(CliError::Validation("estimator.tol must be positive".into()));
        }
        if e.max_iter == 0 {
            return Err(CliError::Validation("estimator.max_iter must be at least 1".into()));
        }
        if e.sample_size == Some(0) {
            return Err(CliError::Validation("estimator.sample_size must be at least 1".into()));
        }
        let c = &self.chain;
        if c.n_networks == 0 || c.chains == 0 || c.burn_in == Some(0) || c.thin == Some(0) {
            return Err(CliError::Validation(
                "chain.n_networks, chain.chains, chain.burn_in and chain.thin must be at least 1".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(CliError::Validation("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Default roster for synthetic data: segmentation, network and gravity terms.
pub fn default_synth_model() -> (ModelSpec, Vec<f64>) {
    let terms = vec![
        (TermSpec::sum(), -6.0),
        (TermSpec::nonzero(), -0.5),
        (TermSpec::dyad(DYAD_POLITICAL), -2.0),
        (TermSpec::dyad(DYAD_RURAL), -0.8),
        (TermSpec::dyad(DYAD_RACIAL), -1.0),
        (TermSpec::mutual_min(), 0.05),
        (TermSpec::lagged_log_flow(), 0.3),
        (TermSpec::node_in("log_population"), 0.5),
        (TermSpec::node_out("log_population"), 0.5),
        (TermSpec::node_in("psr"), 0.02),
        (TermSpec::node_out("p_unemployment"), -3.0),
        (TermSpec::dyad(DYAD_UNEMP_DIFF), -0.02),
        (TermSpec::dyad(DYAD_LOG_DISTANCE), -0.6),
        (TermSpec::dyad(DYAD_SAME_STATE), 0.5),
    ];
    let theta = terms.iter().map(|t| t.1).collect();
    let model = ModelSpec::new(terms.into_iter().map(|t| t.0).collect()).expect("valid default model");
    (model, theta)
}
