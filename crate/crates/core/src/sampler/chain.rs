//! Single-dyad Metropolis-Hastings moves on a valued network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flownet::{dyad_count, dyad_from_index, dyad_index, FlowNetwork};
use crate::statistics::{ln_factorial, BoundModel, DyadContext, N_BASIS};

use super::{ChainConfig, Proposal};

/// Probability of picking the dyad among currently nonzero dyads rather than
/// uniformly among all dyads.
const NONZERO_PICK: f64 = 0.5;
/// Probability of a geometric jump under [`Proposal::GeometricMixture`].
const JUMP_PROB: f64 = 0.2;

/// Success probability of the jump-length distribution from value `v`; the
/// mean jump is `2 + v / 2`.
#[inline]
fn jump_p(v: u64) -> f64 {
    1.0 / (2.0 + 0.5 * v as f64)
}

/// Length pmf for `k >= 1`.
#[inline]
fn geometric_pmf(p: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        p * (1.0 - p).powi((k - 1) as i32)
    }
}

/// Probability that a signed move of length `k ~ pmf` from `v`, reflected at
/// zero, lands on `to`.
fn reflected(v: u64, to: u64, pmf: impl Fn(u64) -> f64) -> f64 {
    let mut q = 0.0;
    if to > v {
        q += 0.5 * pmf(to - v);
    }
    if to < v {
        q += 0.5 * pmf(v - to);
    }
    if to > 0 {
        q += 0.5 * pmf(v + to);
    }
    q
}

fn value_proposal_prob(proposal: Proposal, v: u64, to: u64) -> f64 {
    let unit = reflected(v, to, |k| f64::from(u8::from(k == 1)));
    match proposal {
        Proposal::UnitStep => unit,
        Proposal::GeometricMixture => {
            let p = jump_p(v);
            (1.0 - JUMP_PROB) * unit + JUMP_PROB * reflected(v, to, |k| geometric_pmf(p, k))
        }
    }
}

/// Coefficients of a model at fixed `theta`, with the linear part tabulated
/// per dyad. Shared read-only by all chains.
#[derive(Debug, Clone)]
pub struct SimulationTarget {
    n_nodes: usize,
    eta: Vec<f64>,
    structural: [f64; N_BASIS],
    uses_waypoint: bool,
}

impl SimulationTarget {
    pub fn new(model: &BoundModel<'_>, theta: &[f64], n_nodes: usize, exec: Execution) -> Result<Self> {
        if theta.len() != model.len() {
            return Err(Error::invalid(format!(
                "coefficient vector has length {}, model has {} terms",
                theta.len(),
                model.len()
            )));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("non-finite coefficient {t}")));
        }
        model.check_size(n_nodes)?;
        if n_nodes < 2 {
            return Err(Error::invalid("simulation needs at least two nodes"));
        }
        let rows = exec.map(n_nodes, |i| {
            (0..n_nodes)
                .filter(|&j| j != i)
                .map(|j| model.basis_coefficients(theta, i, j)[0])
                .collect::<Vec<f64>>()
        });
        let eta: Vec<f64> = rows.into_iter().flatten().collect();
        let mut structural = [0.0; N_BASIS];
        for (t, &b) in model.basis_columns().iter().enumerate() {
            if b != 0 {
                structural[b] += theta[t];
            }
        }
        Ok(SimulationTarget {
            n_nodes,
            eta,
            structural,
            uses_waypoint: structural[3] != 0.0,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Log weight difference `ln w(to) - ln w(from)` at one dyad.
    #[inline]
    fn log_weight_diff(&self, d: usize, ctx: &DyadContext, from: u64, to: u64) -> f64 {
        let c = &self.structural;
        let mut diff = self.eta[d] * (to as f64 - from as f64)
            + c[1] * (f64::from(u8::from(to > 0)) - f64::from(u8::from(from > 0)))
            + c[2] * (to.min(ctx.y_rev) as f64 - from.min(ctx.y_rev) as f64);
        if self.uses_waypoint {
            diff += c[3] * (ctx.waypoint(to) as f64 - ctx.waypoint(from) as f64);
        }
        diff - ln_factorial(to) + ln_factorial(from)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChainDiagnostics {
    pub proposals: u64,
    pub accepted: u64,
    pub self_proposals: u64,
    pub non_finite: u64,
}

impl ChainDiagnostics {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub(crate) fn merge(&mut self, o: &ChainDiagnostics) {
        self.proposals += o.proposals;
        self.accepted += o.accepted;
        self.self_proposals += o.self_proposals;
        self.non_finite += o.non_finite;
    }
}

/// One Markov chain owning its network copy and random stream.
pub struct Chain<'t> {
    target: &'t SimulationTarget,
    proposal: Proposal,
    net: FlowNetwork,
    rng: ChaCha8Rng,
    n_dyads: usize,
    pub diagnostics: ChainDiagnostics,
}

impl<'t> Chain<'t> {
    pub fn new(target: &'t SimulationTarget, init: FlowNetwork, proposal: Proposal, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let n_dyads = dyad_count(init.n_nodes());
        Chain {
            target,
            proposal,
            net: init,
            rng,
            n_dyads,
            diagnostics: ChainDiagnostics::default(),
        }
    }

    pub fn network(&self) -> &FlowNetwork {
        &self.net
    }

    pub fn into_network(self) -> FlowNetwork {
        self.net
    }

    /// Probability of selecting a dyad with value `v` when the network has
    /// `nnz` nonzero dyads.
    #[inline]
    fn select_prob(&self, v: u64, nnz: usize) -> f64 {
        if nnz == 0 {
            1.0 / self.n_dyads as f64
        } else {
            (1.0 - NONZERO_PICK) / self.n_dyads as f64
                + if v > 0 { NONZERO_PICK / nnz as f64 } else { 0.0 }
        }
    }

    pub fn step(&mut self) {
        self.diagnostics.proposals += 1;
        let n = self.net.n_nodes();
        let nnz = self.net.edge_count();
        let (i, j) = if nnz > 0 && self.rng.random_bool(NONZERO_PICK) {
            let e = self.net.edges()[self.rng.random_range(0..nnz)];
            (e.origin, e.destination)
        } else {
            dyad_from_index(n, self.rng.random_range(0..self.n_dyads))
        };
        let ctx = DyadContext::new(&self.net, i, j);
        let from = ctx.y;
        let jump = self.proposal == Proposal::GeometricMixture && self.rng.random_bool(JUMP_PROB);
        let len = if jump {
            1 + Geometric::new(jump_p(from))
                .expect("valid geometric")
                .sample(&mut self.rng)
        } else {
            1
        };
        let up = self.rng.random_bool(0.5);
        let to = if up {
            from.saturating_add(len)
        } else if len <= from {
            from - len
        } else {
            len - from
        };
        if to == from {
            self.diagnostics.self_proposals += 1;
            return;
        }
        let nnz_after = match (from > 0, to > 0) {
            (true, false) => nnz - 1,
            (false, true) => nnz + 1,
            _ => nnz,
        };
        let d = dyad_index(n, i, j);
        let log_ratio = self.target.log_weight_diff(d, &ctx, from, to)
            + (value_proposal_prob(self.proposal, to, from) * self.select_prob(to, nnz_after)).ln()
            - (value_proposal_prob(self.proposal, from, to) * self.select_prob(from, nnz)).ln();
        if log_ratio.is_nan() {
            self.diagnostics.non_finite += 1;
            return;
        }
        if log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio {
            self.net.set_flow(i, j, to);
            self.diagnostics.accepted += 1;
        }
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Runs `config.chains` independent chains and concatenates their thinned
/// draws in chain order.
pub(crate) fn run_chains<T, F>(
    target: &SimulationTarget,
    init: &FlowNetwork,
    config: &ChainConfig,
    record: F,
) -> (Vec<T>, ChainDiagnostics)
where
    T: Send,
    F: Fn(&FlowNetwork) -> T + Sync + Send,
{
    let chains = config.chains.max(1).min(config.n_networks.max(1));
    let per_chain: Vec<usize> = (0..chains)
        .map(|c| config.n_networks / chains + usize::from(c < config.n_networks % chains))
        .collect();
    let results = config.execution.map(chains, |c| {
        let mut chain = Chain::new(target, init.clone(), config.proposal, config.seed, c as u64);
        chain.run(config.burn_in);
        let mut out = Vec::with_capacity(per_chain[c]);
        for _ in 0..per_chain[c] {
            chain.run(config.thin);
            out.push(record(chain.network()));
        }
        (out, chain.diagnostics)
    });
    let mut all = Vec::with_capacity(config.n_networks);
    let mut diag = ChainDiagnostics::default();
    for (out, d) in results {
        all.extend(out);
        diag.merge(&d);
    }
    (all, diag)
}
