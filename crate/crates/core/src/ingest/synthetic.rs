use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use super::{build_dyad_covariates, DistanceTable};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flownet::{dyad_count, DyadCovariateSet, DyadMatrix, FlowNetwork, NodeIds, NodeRecord, NodeTable, Region, DYAD_LAGGED_LOG_FLOW};
use crate::sampler::{mcmc_simulate, ChainConfig};
use crate::statistics::{BoundModel, ModelSpec};

/// Distributions used to draw synthetic node attributes.
///
/// * population: `round(LogNormal(pop_log_mean, pop_log_sd))`, at least 100
/// * density: `LogNormal(density_log_mean, density_log_sd)`
/// * psr, percentages: uniform on the given ranges
/// * racial shares: `Dirichlet(racial_alpha)`
/// * region, state: uniform over the four regions and `n_states` states
/// * immigrant inflow: `Poisson(immigrant_rate * population)`
/// * locations: uniform in an `extent_km[0] x extent_km[1]` rectangle;
///   distance is Euclidean plus 1 km
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_nodes: usize,
    /// Defaults to `max(1, n_nodes / 10)` when zero.
    pub n_states: usize,
    pub pop_log_mean: f64,
    pub pop_log_sd: f64,
    pub density_log_mean: f64,
    pub density_log_sd: f64,
    pub psr_range: (f64, f64),
    pub racial_alpha: [f64; 5],
    pub renter_range: (f64, f64),
    pub highered_range: (f64, f64),
    pub unemployment_range: (f64, f64),
    pub rural_range: (f64, f64),
    pub democrat_range: (f64, f64),
    pub immigrant_rate: f64,
    pub extent_km: (f64, f64),
    /// Burn-in sweeps per simulated network when the model is not affine.
    pub burn_in_sweeps: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_nodes: 50,
            n_states: 0,
            pop_log_mean: 10.5,
            pop_log_sd: 1.0,
            density_log_mean: -3.0,
            density_log_sd: 1.0,
            psr_range: (3.0, 8.0),
            racial_alpha: [1.0, 0.6, 0.3, 4.0, 0.3],
            renter_range: (15.0, 45.0),
            highered_range: (10.0, 50.0),
            unemployment_range: (3.0, 12.0),
            rural_range: (0.0, 100.0),
            democrat_range: (20.0, 80.0),
            immigrant_rate: 0.002,
            extent_km: (2000.0, 1000.0),
            burn_in_sweeps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub ids: NodeIds,
    pub nodes: NodeTable,
    pub distances: DistanceTable,
    pub lagged: FlowNetwork,
    pub current: FlowNetwork,
    /// Covariates for the current period, including `lagged_log_flow`.
    pub dyads: DyadCovariateSet,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn draw_nodes(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Result<NodeTable> {
    let n_states = if cfg.n_states == 0 { (cfg.n_nodes / 10).max(1) } else { cfg.n_states };
    let bad = |e: &dyn std::fmt::Display| Error::invalid(format!("synthetic config: {e}"));
    let pop = LogNormal::new(cfg.pop_log_mean, cfg.pop_log_sd).map_err(|e| bad(&e))?;
    let dens = LogNormal::new(cfg.density_log_mean, cfg.density_log_sd).map_err(|e| bad(&e))?;
    let dir = Dirichlet::new(cfg.racial_alpha).map_err(|e| bad(&e))?;
    let mut records = Vec::with_capacity(cfg.n_nodes);
    for _ in 0..cfg.n_nodes {
        let population = (pop.sample(rng).round() as u64).max(100);
        let mut shares: [f64; 5] = dir.sample(rng);
        let total: f64 = shares.iter().sum();
        shares.iter_mut().for_each(|s| *s /= total);
        let immigrants = cfg.immigrant_rate * population as f64;
        let immigrant_inflow = if immigrants > 0.0 {
            Poisson::new(immigrants).map_err(|e| bad(&e))?.sample(rng) as u64
        } else {
            0
        };
        records.push(NodeRecord {
            population,
            density: dens.sample(rng),
            psr: uniform(rng, cfg.psr_range),
            racial_shares: shares,
            renter_pct: uniform(rng, cfg.renter_range),
            highered_pct: uniform(rng, cfg.highered_range),
            unemployment_pct: uniform(rng, cfg.unemployment_range),
            rural_pct: uniform(rng, cfg.rural_range),
            democrat_poll_pct: uniform(rng, cfg.democrat_range),
            region: Region::ALL[rng.random_range(0..4)],
            state_id: format!("S{:02}", rng.random_range(0..n_states)),
            immigrant_inflow,
        });
    }
    NodeTable::new(records)
}

/// Independent Poisson draws at the affine part of the model.
fn poisson_draw(bound: &BoundModel<'_>, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<FlowNetwork> {
    let mut net = FlowNetwork::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let rate = bound.basis_coefficients(theta, i, j)[0].exp();
            if !(rate < 1e12) {
                return Err(Error::Numerical(format!("rate {rate} at dyad ({i}, {j}) is too large to simulate")));
            }
            if rate > 0.0 {
                let v = Poisson::new(rate)
                    .map_err(|e| Error::Numerical(e.to_string()))?
                    .sample(rng) as u64;
                if v > 0 {
                    net.set_flow(i, j, v);
                }
            }
        }
    }
    Ok(net)
}

fn draw_network(
    model: &ModelSpec,
    theta: &[f64],
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    cfg: &SyntheticConfig,
    rng: &mut ChaCha8Rng,
) -> Result<FlowNetwork> {
    let n = cfg.n_nodes;
    let bound = BoundModel::bind(model, nodes, dyads)?;
    let init = poisson_draw(&bound, theta, n, rng)?;
    if model.is_affine() {
        return Ok(init);
    }
    let d = dyad_count(n) as u64;
    let chain = ChainConfig {
        burn_in: cfg.burn_in_sweeps.max(1) * d,
        thin: d,
        n_networks: 1,
        seed: rng.random(),
        execution: Execution::Sequential,
        ..ChainConfig::for_dyads(d as usize, 1, 0)
    };
    let mut sim = mcmc_simulate(model, theta, nodes, dyads, &init, &chain)?;
    Ok(sim.networks.pop().expect("one network"))
}

/// Draw a complete dataset: node attributes, distances, a lagged network and
/// a current network conditioned on it.
///
/// Affine models are drawn exactly as independent Poissons; other models are
/// started from the Poisson draw of their affine part and run through the
/// Metropolis-Hastings sampler. The lagged network is drawn from the same
/// model with `lagged_log_flow` set to zero.
pub fn synthetic_generate(cfg: &SyntheticConfig, model: &ModelSpec, theta: &[f64], seed: u64) -> Result<SyntheticData> {
    let n = cfg.n_nodes;
    if n < 2 {
        return Err(Error::invalid("synthetic networks need at least two nodes"));
    }
    if theta.len() != model.len() {
        return Err(Error::invalid(format!(
            "coefficient vector has length {}, model has {} terms",
            theta.len(),
            model.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = draw_nodes(cfg, &mut rng)?;
    let width = (n - 1).to_string().len();
    let ids = NodeIds::new((0..n).map(|k| format!("N{k:0width$}")))?;

    let xy: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random::<f64>() * cfg.extent_km.0, rng.random::<f64>() * cfg.extent_km.1))
        .collect();
    let mut distances = DistanceTable::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let km = 1.0 + (xy[i].0 - xy[j].0).hypot(xy[i].1 - xy[j].1);
            distances.insert(i, j, km)?;
        }
    }

    let mut dyads = build_dyad_covariates(&nodes, Some(&distances), None)?;
    dyads.insert(
        DYAD_LAGGED_LOG_FLOW,
        DyadMatrix::Sparse {
            n,
            values: Default::default(),
        },
    )?;
    let lagged = draw_network(model, theta, &nodes, &dyads, cfg, &mut rng)?.with_label("lagged");
    let dyads = build_dyad_covariates(&nodes, Some(&distances), Some(&lagged))?;
    let current = draw_network(model, theta, &nodes, &dyads, cfg, &mut rng)?.with_label("current");
    Ok(SyntheticData {
        ids,
        nodes,
        distances,
        lagged,
        current,
        dyads,
    })
}
