//! Subsampled, L2-regularised maximum pseudo-likelihood estimation.
//!
//! Each sampled dyad contributes the log of its conditional pmf given the rest
//! of the network, `p(y_ij = v | rest) ∝ exp(θ·g(v)) / v!`, weighted by its
//! inverse inclusion probability. The objective is concave in θ, so a damped
//! Newton iteration on it is reliable.

mod effects;
mod newton;
mod objective;
mod sample;

pub use effects::{effect_multiplier, EffectKind};
pub use newton::{fit_mple, pseudo_bic, FitOptions, FitResult, SE_KIND};
pub use objective::{CapPolicy, Derivatives, Objective, PseudoLikelihood};
pub use sample::{allocate_strata, stratified_dyad_sample, DyadSample, SampleMeta, StrataCounts};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flownet::{DyadCovariateSet, FlowNetwork, NodeTable};
use crate::statistics::{BoundModel, DyadContext, ModelSpec};

/// `log p(y_ij = v | rest)` under `theta`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_log_pmf(
    model: &ModelSpec,
    theta: &[f64],
    net: &FlowNetwork,
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    dyad: (usize, usize),
    v: u64,
    cap: &CapPolicy,
) -> Result<f64> {
    let (lw, lse) = conditional_log_weights(model, theta, net, nodes, dyads, dyad, v, cap)?;
    Ok(lw[v as usize] - lse)
}

/// Unnormalised log weights over the truncated support (covering `v`) and
/// their log normaliser.
#[allow(clippy::too_many_arguments)]
pub fn conditional_log_weights(
    model: &ModelSpec,
    theta: &[f64],
    net: &FlowNetwork,
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    dyad: (usize, usize),
    v: u64,
    cap: &CapPolicy,
) -> Result<(Vec<f64>, f64)> {
    let (i, j) = dyad;
    if i == j {
        return Err(Error::SelfLoop(i.to_string()));
    }
    net.out_volume(i)?;
    net.in_volume(j)?;
    if theta.len() != model.len() {
        return Err(Error::invalid("coefficient vector length does not match model"));
    }
    let bound = BoundModel::bind(model, nodes, dyads)?;
    bound.check_size(net.n_nodes())?;
    let ctx = DyadContext::new(net, i, j);
    let coef = bound.basis_coefficients(theta, i, j);
    objective::log_weights(&coef, &ctx, cap, net.max_value(), v)
}

/// One-shot evaluation of the penalised pseudo-log-likelihood.
#[allow(clippy::too_many_arguments)]
pub fn penalized_pseudo_loglik(
    model: &ModelSpec,
    theta: &[f64],
    net: &FlowNetwork,
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    sample: &DyadSample,
    ridge_lambda: f64,
    level: Derivatives,
) -> Result<Objective> {
    let bound = BoundModel::bind(model, nodes, dyads)?;
    let pl = PseudoLikelihood::new(bound, net, sample, CapPolicy::default())?;
    pl.evaluate(theta, ridge_lambda, level, Execution::default())
}
