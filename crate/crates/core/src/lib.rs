//! Count-valued temporal exponential-family random graph models for directed
//! flow networks.
//!
//! The crate is organised around the pipeline an analyst runs on a migration
//! (or any origin-destination count) network:
//!
//! * [`flownet`] holds the sparse valued network and its covariate tables.
//! * [`statistics`] evaluates sufficient statistics and their per-dyad
//!   change profiles.
//! * [`estimator`] fits coefficients by subsampled, ridge-penalised maximum
//!   pseudo-likelihood.
//! * [`sampler`] simulates networks by Metropolis-Hastings, runs volume
//!   adequacy checks and coefficient knockout experiments.
//! * [`ingest`] loads CSV inputs, engineers dyadic covariates and generates
//!   synthetic datasets.
//!
//! Data-parallel loops (per-dyad objective terms, independent chains) run on
//! rayon when the `parallel` feature is enabled; see [`exec`].

pub mod error;
pub mod estimator;
pub mod exec;
pub mod flownet;
pub mod ingest;
pub mod sampler;
pub mod statistics;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use estimator::{
    effect_multiplier, fit_mple, penalized_pseudo_loglik, pseudo_bic, stratified_dyad_sample,
    CapPolicy, DyadSample, EffectKind, FitOptions, FitResult,
};
pub use exec::Execution;
pub use flownet::{DyadCovariateSet, DyadMatrix, FlowNetwork, NodeIds, NodeRecord, NodeTable};
pub use sampler::{
    adequacy_check, expected_total_flow, knockout_experiment, mcmc_simulate, AdequacyReport,
    ChainConfig, KnockoutReport, Proposal,
};
pub use statistics::{ModelSpec, TermKind, TermSpec};
