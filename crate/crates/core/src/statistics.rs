//! Sufficient statistics of valued network models and their single-dyad
//! change profiles.
//!
//! Every supported term changes with a single dyad value `y_ij = u` through one
//! of four basis functions of `u`:
//!
//! | basis | function of `u`                                   | terms                          |
//! |-------|---------------------------------------------------|--------------------------------|
//! | 0     | `u`                                               | Sum, node/dyad covariates, lag |
//! | 1     | `1[u > 0]`                                        | Nonzero                        |
//! | 2     | `min(u, y_ji)`                                    | MutualMin                      |
//! | 3     | `min(out_i' + u, in_i) + min(out_j, in_j' + u)`   | WaypointFlow                   |
//!
//! where `out_i'` and `in_j'` are the volumes with the dyad removed. The
//! estimator and the sampler both work in this basis, so a conditional
//! evaluation costs O(1) per candidate value regardless of node degree.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flownet::{DyadCovariateSet, DyadMatrix, FlowNetwork, NodeTable, DYAD_LAGGED_LOG_FLOW};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermKind {
    Sum,
    Nonzero,
    MutualMin,
    WaypointFlow,
    NodeOutCovariate { covariate: String },
    NodeInCovariate { covariate: String },
    DyadCovariate { covariate: String },
    LaggedLogFlow,
}

impl TermKind {
    pub fn default_label(&self) -> String {
        match self {
            TermKind::Sum => "sum".into(),
            TermKind::Nonzero => "nonzero".into(),
            TermKind::MutualMin => "mutual_min".into(),
            TermKind::WaypointFlow => "waypoint_flow".into(),
            TermKind::NodeOutCovariate { covariate } => format!("origin.{covariate}"),
            TermKind::NodeInCovariate { covariate } => format!("destin.{covariate}"),
            TermKind::DyadCovariate { covariate } => covariate.clone(),
            TermKind::LaggedLogFlow => "lagged_log_flow".into(),
        }
    }

    /// True for terms whose statistic is linear in every dyad value.
    pub fn is_affine(&self) -> bool {
        !matches!(
            self,
            TermKind::Nonzero | TermKind::MutualMin | TermKind::WaypointFlow
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSpec {
    #[serde(flatten)]
    pub kind: TermKind,
    #[serde(default)]
    pub label: String,
}

impl TermSpec {
    pub fn new(kind: TermKind) -> Self {
        let label = kind.default_label();
        TermSpec { kind, label }
    }

    pub fn labeled(kind: TermKind, label: impl Into<String>) -> Self {
        TermSpec {
            kind,
            label: label.into(),
        }
    }

    pub fn sum() -> Self {
        Self::new(TermKind::Sum)
    }
    pub fn nonzero() -> Self {
        Self::new(TermKind::Nonzero)
    }
    pub fn mutual_min() -> Self {
        Self::new(TermKind::MutualMin)
    }
    pub fn waypoint_flow() -> Self {
        Self::new(TermKind::WaypointFlow)
    }
    pub fn lagged_log_flow() -> Self {
        Self::new(TermKind::LaggedLogFlow)
    }
    pub fn node_out(covariate: &str) -> Self {
        Self::new(TermKind::NodeOutCovariate {
            covariate: covariate.into(),
        })
    }
    pub fn node_in(covariate: &str) -> Self {
        Self::new(TermKind::NodeInCovariate {
            covariate: covariate.into(),
        })
    }
    pub fn dyad(covariate: &str) -> Self {
        Self::new(TermKind::DyadCovariate {
            covariate: covariate.into(),
        })
    }
}

fn default_lag_depth() -> u32 {
    1
}

/// Ordered term list; coefficient vectors are indexed in the same order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub terms: Vec<TermSpec>,
    #[serde(default = "default_lag_depth")]
    pub lag_depth: u32,
}

impl ModelSpec {
    /// Validates the term list, filling empty labels with defaults.
    pub fn new(terms: Vec<TermSpec>) -> Result<Self> {
        let mut m = ModelSpec {
            terms,
            lag_depth: 1,
        };
        m.normalize()?;
        Ok(m)
    }

    pub fn normalize(&mut self) -> Result<()> {
        if self.lag_depth != 1 {
            return Err(Error::InvalidModel(format!(
                "lag depth {} unsupported; only one lagged network is modelled",
                self.lag_depth
            )));
        }
        if self.terms.is_empty() {
            return Err(Error::InvalidModel("model has no terms".into()));
        }
        for t in &mut self.terms {
            if t.label.is_empty() {
                t.label = t.kind.default_label();
            }
        }
        let count = |k: &TermKind| self.terms.iter().filter(|t| &t.kind == k).count();
        if count(&TermKind::Sum) > 1 {
            return Err(Error::InvalidModel("more than one sum term".into()));
        }
        if count(&TermKind::Nonzero) > 1 {
            return Err(Error::InvalidModel("more than one nonzero term".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.terms {
            if !seen.insert(t.label.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "duplicate term label {:?}",
                    t.label
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label.clone()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    pub fn is_affine(&self) -> bool {
        self.terms.iter().all(|t| t.kind.is_affine())
    }

    pub fn uses_lag(&self) -> bool {
        self.terms.iter().any(|t| t.kind == TermKind::LaggedLogFlow)
    }
}

/// Number of change-statistic basis functions.
pub const N_BASIS: usize = 4;

/// Volumes around one dyad with the dyad's own value removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DyadContext {
    pub i: u32,
    pub j: u32,
    /// Current (observed) value of `y_ij`.
    pub y: u64,
    /// Reverse flow `y_ji`.
    pub y_rev: u64,
    /// `out_volume(i) - y_ij`.
    pub out_i_rest: u64,
    pub in_i: u64,
    pub out_j: u64,
    /// `in_volume(j) - y_ij`.
    pub in_j_rest: u64,
}

impl DyadContext {
    pub fn new(net: &FlowNetwork, i: usize, j: usize) -> Self {
        let y = net.get(i, j);
        DyadContext {
            i: i as u32,
            j: j as u32,
            y,
            y_rev: net.get(j, i),
            out_i_rest: net.out_volumes()[i] - y,
            in_i: net.in_volumes()[i],
            out_j: net.out_volumes()[j],
            in_j_rest: net.in_volumes()[j] - y,
        }
    }

    #[inline]
    pub fn waypoint(&self, u: u64) -> u64 {
        (self.out_i_rest + u).min(self.in_i) + self.out_j.min(self.in_j_rest + u)
    }

    /// Change-statistic basis at `y_ij = u`.
    #[inline]
    pub fn basis(&self, u: u64) -> [f64; N_BASIS] {
        [
            u as f64,
            f64::from(u8::from(u > 0)),
            u.min(self.y_rev) as f64,
            self.waypoint(u) as f64,
        ]
    }
}

/// `ln(k!)`, tabulated for small `k`.
pub fn ln_factorial(k: u64) -> f64 {
    const TABLE_LEN: usize = 1 << 16;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        t.push(0.0);
        for n in 1..TABLE_LEN {
            t.push(statrs::function::gamma::ln_gamma(n as f64 + 1.0));
        }
        t
    });
    match table.get(k as usize) {
        Some(v) => *v,
        None => statrs::function::gamma::ln_gamma(k as f64 + 1.0),
    }
}

#[derive(Debug, Clone)]
enum BoundTerm<'a> {
    Sum,
    Nonzero,
    MutualMin,
    WaypointFlow,
    NodeOut(Vec<f64>),
    NodeIn(Vec<f64>),
    Dyad(&'a DyadMatrix),
}

/// A model whose covariate references have been resolved against concrete
/// node and dyad tables.
#[derive(Debug, Clone)]
pub struct BoundModel<'a> {
    spec: &'a ModelSpec,
    terms: Vec<BoundTerm<'a>>,
    /// Basis column used by each term.
    basis_of: Vec<usize>,
}

impl<'a> BoundModel<'a> {
    pub fn bind(
        spec: &'a ModelSpec,
        nodes: &NodeTable,
        dyads: &'a DyadCovariateSet,
    ) -> Result<Self> {
        let mut terms = Vec::with_capacity(spec.len());
        let mut basis_of = Vec::with_capacity(spec.len());
        for t in &spec.terms {
            let unknown = |name: &str| Error::UnknownCovariate {
                term: t.label.clone(),
                name: name.to_string(),
            };
            let bound = match &t.kind {
                TermKind::Sum => BoundTerm::Sum,
                TermKind::Nonzero => BoundTerm::Nonzero,
                TermKind::MutualMin => BoundTerm::MutualMin,
                TermKind::WaypointFlow => BoundTerm::WaypointFlow,
                TermKind::NodeOutCovariate { covariate } => {
                    BoundTerm::NodeOut(nodes.covariate(covariate).ok_or_else(|| unknown(covariate))?)
                }
                TermKind::NodeInCovariate { covariate } => {
                    BoundTerm::NodeIn(nodes.covariate(covariate).ok_or_else(|| unknown(covariate))?)
                }
                TermKind::DyadCovariate { covariate } => {
                    BoundTerm::Dyad(dyads.get(covariate).ok_or_else(|| unknown(covariate))?)
                }
                TermKind::LaggedLogFlow => BoundTerm::Dyad(
                    dyads
                        .get(DYAD_LAGGED_LOG_FLOW)
                        .ok_or_else(|| unknown(DYAD_LAGGED_LOG_FLOW))?,
                ),
            };
            basis_of.push(match bound {
                BoundTerm::Nonzero => 1,
                BoundTerm::MutualMin => 2,
                BoundTerm::WaypointFlow => 3,
                _ => 0,
            });
            if let BoundTerm::NodeOut(c) | BoundTerm::NodeIn(c) = &bound {
                if let Some(x) = c.iter().find(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "term {:?}: non-finite covariate value {x}",
                        t.label
                    )));
                }
            }
            terms.push(bound);
        }
        Ok(BoundModel {
            spec,
            terms,
            basis_of,
        })
    }

    pub fn spec(&self) -> &'a ModelSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Basis column each term loads on.
    pub fn basis_columns(&self) -> &[usize] {
        &self.basis_of
    }

    /// Checks that node-indexed covariates cover `n_nodes` nodes.
    pub fn check_size(&self, n_nodes: usize) -> Result<()> {
        for (t, spec) in self.terms.iter().zip(&self.spec.terms) {
            let n = match t {
                BoundTerm::NodeOut(c) | BoundTerm::NodeIn(c) => c.len(),
                BoundTerm::Dyad(m) => m.n_nodes(),
                _ => n_nodes,
            };
            if n != n_nodes {
                return Err(Error::InvalidInput(format!(
                    "term {:?} covers {n} nodes but the network has {n_nodes}",
                    spec.label
                )));
            }
        }
        Ok(())
    }

    /// Per-unit change of each term's statistic at dyad `(i, j)`, for terms
    /// on basis 0; other terms get 0.
    #[inline]
    pub fn slope(&self, t: usize, i: usize, j: usize) -> f64 {
        match &self.terms[t] {
            BoundTerm::Sum => 1.0,
            BoundTerm::NodeOut(c) => c[i],
            BoundTerm::NodeIn(c) => c[j],
            BoundTerm::Dyad(m) => m.get(i, j),
            _ => 0.0,
        }
    }

    pub fn slopes_into(&self, i: usize, j: usize, out: &mut [f64]) {
        for (t, o) in out.iter_mut().enumerate() {
            *o = self.slope(t, i, j);
        }
    }

    /// Basis-space coefficients `(theta . slopes, theta_nz, theta_mm, theta_wp)`
    /// for one dyad.
    #[inline]
    pub fn basis_coefficients(&self, theta: &[f64], i: usize, j: usize) -> [f64; N_BASIS] {
        let mut c = [0.0; N_BASIS];
        for (t, &b) in self.basis_of.iter().enumerate() {
            if b == 0 {
                c[0] += theta[t] * self.slope(t, i, j);
            } else {
                c[b] += theta[t];
            }
        }
        c
    }

    /// Full statistic vector of `net`.
    pub fn statistics(&self, net: &FlowNetwork) -> Vec<f64> {
        let needs_mutual = self.terms.iter().any(|t| matches!(t, BoundTerm::MutualMin));
        let needs_waypoint = self.terms.iter().any(|t| matches!(t, BoundTerm::WaypointFlow));
        let mutual = if needs_mutual { mutual_min_stat(net) } else { 0 };
        let waypoint = if needs_waypoint {
            waypoint_flow_stat(net)
        } else {
            0
        };
        self.terms
            .iter()
            .map(|t| match t {
                BoundTerm::Sum => net.total_flow() as f64,
                BoundTerm::Nonzero => net.edge_count() as f64,
                BoundTerm::MutualMin => mutual as f64,
                BoundTerm::WaypointFlow => waypoint as f64,
                BoundTerm::NodeOut(c) => net
                    .out_volumes()
                    .iter()
                    .zip(c)
                    .map(|(&v, &x)| v as f64 * x)
                    .sum(),
                BoundTerm::NodeIn(c) => net
                    .in_volumes()
                    .iter()
                    .zip(c)
                    .map(|(&v, &x)| v as f64 * x)
                    .sum(),
                BoundTerm::Dyad(m) => net
                    .sorted_edges()
                    .iter()
                    .map(|e| e.value as f64 * m.get(e.origin, e.destination))
                    .sum(),
            })
            .collect()
    }

    /// Statistic rows `g(y with y_ij = v)` for `v = 0..=v_max`.
    pub fn profile(&self, net: &FlowNetwork, i: usize, j: usize, v_max: u64) -> Vec<Vec<f64>> {
        let full = self.statistics(net);
        let ctx = DyadContext::new(net, i, j);
        let now = ctx.basis(ctx.y);
        let k = self.len();
        let mut slopes = vec![0.0; k];
        self.slopes_into(i, j, &mut slopes);
        let loading = |t: usize, b: &[f64; N_BASIS]| -> f64 {
            match self.basis_of[t] {
                0 => slopes[t] * b[0],
                c => b[c],
            }
        };
        let rest: Vec<f64> = (0..k).map(|t| full[t] - loading(t, &now)).collect();
        (0..=v_max)
            .map(|v| {
                let b = ctx.basis(v);
                (0..k).map(|t| rest[t] + loading(t, &b)).collect()
            })
            .collect()
    }
}

/// Sum over unordered pairs `{i, j}` of `min(y_ij, y_ji)`.
pub fn mutual_min_stat(net: &FlowNetwork) -> u64 {
    net.edges()
        .iter()
        .filter(|e| e.origin < e.destination)
        .map(|e| e.value.min(net.get(e.destination, e.origin)))
        .sum()
}

/// Sum over nodes of `min(out_volume, in_volume)`.
pub fn waypoint_flow_stat(net: &FlowNetwork) -> u64 {
    net.out_volumes()
        .iter()
        .zip(net.in_volumes())
        .map(|(&o, &i)| o.min(i))
        .sum()
}

pub fn global_statistic(
    term: &TermSpec,
    net: &FlowNetwork,
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
) -> Result<f64> {
    let spec = ModelSpec {
        terms: vec![term.clone()],
        lag_depth: 1,
    };
    let bound = BoundModel::bind(&spec, nodes, dyads)?;
    bound.check_size(net.n_nodes())?;
    Ok(bound.statistics(net)[0])
}

pub fn statistic_vector(
    model: &ModelSpec,
    net: &FlowNetwork,
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
) -> Result<Vec<f64>> {
    let bound = BoundModel::bind(model, nodes, dyads)?;
    bound.check_size(net.n_nodes())?;
    Ok(bound.statistics(net))
}

/// Statistic vectors as `y_ij` ranges over `0..=v_max`, computed from change
/// statistics around the current network.
pub fn conditional_profile(
    model: &ModelSpec,
    net: &FlowNetwork,
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    dyad: (usize, usize),
    v_max: u64,
) -> Result<Vec<Vec<f64>>> {
    let (i, j) = dyad;
    if i == j {
        return Err(Error::SelfLoop(i.to_string()));
    }
    net.out_volume(i)?;
    net.in_volume(j)?;
    let bound = BoundModel::bind(model, nodes, dyads)?;
    bound.check_size(net.n_nodes())?;
    Ok(bound.profile(net, i, j, v_max))
}
