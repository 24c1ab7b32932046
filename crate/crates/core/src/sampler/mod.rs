//! Markov-chain simulation from a valued network model, volume adequacy
//! checks and coefficient knockout experiments.
//!
//! The chain updates one dyad per proposal. A dyad is picked uniformly among
//! all dyads or among the currently nonzero ones (50/50); its value moves by a
//! ±1 step reflected at zero, or under [`Proposal::GeometricMixture`] by a
//! geometric jump with probability 0.2. Acceptance uses the exact proposal
//! ratio, including the change in the nonzero-dyad count.

mod adequacy;
mod chain;

pub use adequacy::{adequacy_from_samples, pearson, quantile, AdequacyReport, VolumeEnvelope, VolumeRow};
pub use chain::{Chain, ChainDiagnostics, SimulationTarget};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flownet::{DyadCovariateSet, FlowNetwork, NodeTable};
use crate::statistics::{BoundModel, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    UnitStep,
    #[default]
    GeometricMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Proposals discarded before the first recorded network (per chain).
    pub burn_in: u64,
    /// Proposals between recorded networks.
    pub thin: u64,
    pub n_networks: usize,
    #[serde(default)]
    pub proposal: Proposal,
    pub seed: u64,
    /// Independent chains sharing the `n_networks` draws.
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default)]
    pub execution: Execution,
}

fn one() -> usize {
    1
}

impl ChainConfig {
    /// Defaults scaled to the number of dyads: burn-in of ten proposals per
    /// dyad and one sweep between recorded networks.
    pub fn for_dyads(n_dyads: usize, n_networks: usize, seed: u64) -> Self {
        let d = n_dyads.max(1) as u64;
        ChainConfig {
            burn_in: 10 * d,
            thin: d,
            n_networks,
            proposal: Proposal::default(),
            seed,
            chains: 1,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 || self.thin == 0 || self.n_networks == 0 {
            return Err(Error::invalid(
                "burn_in, thin and n_networks must all be at least 1",
            ));
        }
        Ok(())
    }
}

/// Simulated networks plus chain bookkeeping.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub networks: Vec<FlowNetwork>,
    pub diagnostics: ChainDiagnostics,
}

fn target(
    model: &ModelSpec,
    theta: &[f64],
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    n_nodes: usize,
    exec: Execution,
) -> Result<SimulationTarget> {
    let bound = BoundModel::bind(model, nodes, dyads)?;
    SimulationTarget::new(&bound, theta, n_nodes, exec)
}

/// Draw `config.n_networks` networks after burn-in, thinned.
pub fn mcmc_simulate(
    model: &ModelSpec,
    theta: &[f64],
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    init: &FlowNetwork,
    config: &ChainConfig,
) -> Result<Simulation> {
    config.validate()?;
    let target = target(model, theta, nodes, dyads, init.n_nodes(), config.execution)?;
    let (networks, diagnostics) = chain::run_chains(&target, init, config, FlowNetwork::clone);
    Ok(Simulation {
        networks,
        diagnostics,
    })
}

/// Mean and batch-means standard error of a series.
pub fn batch_means(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 4 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let batches = (n as f64).sqrt().floor() as usize;
    let size = n / batches;
    let bm: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bmean = bm.iter().sum::<f64>() / batches as f64;
    let var = bm.iter().map(|x| (x - bmean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Lag-`k` sample autocorrelation.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    if lag >= n {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return f64::NAN;
    }
    let cov: f64 = (0..n - lag).map(|t| (xs[t] - mean) * (xs[t + lag] - mean)).sum();
    cov / var
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowExpectation {
    pub mean: f64,
    pub mc_se: f64,
    pub n_networks: usize,
    /// Lag-1 autocorrelation of the recorded totals.
    pub lag1_autocorrelation: f64,
    pub acceptance_rate: f64,
}

/// Expected total flow (the Sum statistic) under `theta`, by simulation.
pub fn expected_total_flow(
    model: &ModelSpec,
    theta: &[f64],
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    init: &FlowNetwork,
    config: &ChainConfig,
) -> Result<FlowExpectation> {
    config.validate()?;
    let target = target(model, theta, nodes, dyads, init.n_nodes(), config.execution)?;
    let (totals, diag) =
        chain::run_chains(&target, init, config, |net| net.total_flow() as f64);
    let (mean, mc_se) = batch_means(&totals);
    Ok(FlowExpectation {
        mean,
        mc_se,
        n_networks: totals.len(),
        lag1_autocorrelation: autocorrelation(&totals, 1),
        acceptance_rate: diag.acceptance_rate(),
    })
}

/// Smallest thinning interval (in proposals) whose Sum-statistic
/// autocorrelation drops below 0.1, found from a pilot chain recorded every
/// `probe` proposals. Returns `None` if no lag up to `max_lags` qualifies.
#[allow(clippy::too_many_arguments)]
pub fn tune_thin(
    model: &ModelSpec,
    theta: &[f64],
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    init: &FlowNetwork,
    burn_in: u64,
    probe: u64,
    max_lags: usize,
    seed: u64,
) -> Result<Option<u64>> {
    let config = ChainConfig {
        burn_in: burn_in.max(1),
        thin: probe.max(1),
        n_networks: 20 * max_lags.max(1),
        proposal: Proposal::default(),
        seed,
        chains: 1,
        execution: Execution::Sequential,
    };
    let target = target(model, theta, nodes, dyads, init.n_nodes(), Execution::default())?;
    let (totals, _) = chain::run_chains(&target, init, &config, |net| net.total_flow() as f64);
    Ok((1..=max_lags)
        .find(|&lag| autocorrelation(&totals, lag) < 0.1)
        .map(|lag| lag as u64 * config.thin))
}

/// Per-scenario seed: the root seed for the empty knockout, otherwise a
/// SplitMix-style mix of the root seed with the sorted labels.
fn knockout_seed(seed: u64, labels: &[String]) -> u64 {
    let mut s = seed;
    for l in labels {
        for b in l.bytes().chain(std::iter::once(0xff)) {
            s = s.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(u64::from(b));
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            s = z ^ (z >> 31);
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoutReport {
    pub zeroed: Vec<String>,
    pub baseline: FlowExpectation,
    pub counterfactual: FlowExpectation,
    pub baseline_seed: u64,
    pub counterfactual_seed: u64,
    pub difference: f64,
    /// Monte-Carlo SE of the difference (independent scenarios).
    pub difference_se: f64,
    pub percent_difference: f64,
}

/// Simulate under the fitted coefficients and under a copy with the named
/// terms set to zero, and compare expected total flows.
///
/// Covariates, including the lagged flow, are held at their supplied values.
#[allow(clippy::too_many_arguments)]
pub fn knockout_experiment(
    model: &ModelSpec,
    theta: &[f64],
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    init: &FlowNetwork,
    zero_labels: &[String],
    config: &ChainConfig,
) -> Result<KnockoutReport> {
    let mut labels: Vec<String> = zero_labels.to_vec();
    labels.sort();
    labels.dedup();
    let mut theta_cf = theta.to_vec();
    for l in &labels {
        let k = model
            .index_of(l)
            .ok_or_else(|| Error::UnknownLabel(l.clone()))?;
        theta_cf[k] = 0.0;
    }
    let baseline = expected_total_flow(model, theta, nodes, dyads, init, config)?;
    let cf_seed = knockout_seed(config.seed, &labels);
    let cf_config = ChainConfig {
        seed: cf_seed,
        ..config.clone()
    };
    let counterfactual = expected_total_flow(model, &theta_cf, nodes, dyads, init, &cf_config)?;
    let difference = counterfactual.mean - baseline.mean;
    let percent_difference = if difference == 0.0 {
        0.0
    } else {
        100.0 * difference / baseline.mean
    };
    Ok(KnockoutReport {
        zeroed: labels,
        difference_se: (baseline.mc_se.powi(2) + counterfactual.mc_se.powi(2)).sqrt(),
        baseline,
        counterfactual,
        baseline_seed: config.seed,
        counterfactual_seed: cf_seed,
        difference,
        percent_difference,
    })
}

/// Simulate `config.n_networks` networks starting from the observed one and
/// compare node in/out volumes against the simulated distribution.
pub fn adequacy_check(
    model: &ModelSpec,
    theta: &[f64],
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    observed: &FlowNetwork,
    config: &ChainConfig,
) -> Result<AdequacyReport> {
    let sim = mcmc_simulate(model, theta, nodes, dyads, observed, config)?;
    Ok(adequacy_from_samples(observed, &sim.networks))
}

#[cfg(test)]
mod tests;
