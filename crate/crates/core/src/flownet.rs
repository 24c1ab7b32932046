//! Sparse directed valued networks and the node / dyad covariate tables that
//! accompany them.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0-based node index with the external id for each position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIds {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl NodeIds {
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = NodeIds::default();
        for id in ids {
            let id = id.into();
            if out.lookup.contains_key(&id) {
                return Err(Error::invalid(format!("duplicate node id {id:?}")));
            }
            out.lookup.insert(id.clone(), out.ids.len());
            out.ids.push(id);
        }
        Ok(out)
    }

    /// Ids "0", "1", ... for anonymous networks.
    pub fn sequential(n: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string())).expect("sequential ids are unique")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// One `origin,destination,count` record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub origin: String,
    pub destination: String,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub origin: usize,
    pub destination: usize,
    pub value: u64,
}

/// Number of ordered pairs `(i, j)`, `i != j`.
pub fn dyad_count(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1)
}

/// Maps a dyad index in `0..n(n-1)` to its ordered pair, row-major with the
/// diagonal skipped.
pub fn dyad_from_index(n_nodes: usize, index: usize) -> (usize, usize) {
    let i = index / (n_nodes - 1);
    let r = index % (n_nodes - 1);
    (i, if r >= i { r + 1 } else { r })
}

pub fn dyad_index(n_nodes: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j);
    i * (n_nodes - 1) + if j > i { j - 1 } else { j }
}

/// Sparse directed network of non-negative integer flows.
///
/// Absent pairs carry zero flow. Stored values are always at least one and
/// node in/out volumes are maintained alongside the edge list, so volume
/// queries are O(1) even while a sampler mutates the network.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n_nodes: usize,
    period_label: String,
    edges: Vec<Edge>,
    index: HashMap<(u32, u32), usize>,
    in_volume: Vec<u64>,
    out_volume: Vec<u64>,
    total: u64,
}

impl FlowNetwork {
    pub fn empty(n_nodes: usize) -> Self {
        FlowNetwork {
            n_nodes,
            period_label: String::new(),
            edges: Vec::new(),
            index: HashMap::new(),
            in_volume: vec![0; n_nodes],
            out_volume: vec![0; n_nodes],
            total: 0,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.period_label = label.into();
        self
    }

    /// Build from index triples. Zero counts are dropped; self-loops,
    /// out-of-range indices and repeated pairs are rejected.
    pub fn from_indexed<I>(n_nodes: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut net = FlowNetwork::empty(n_nodes);
        let mut seen = std::collections::HashSet::new();
        for (i, j, v) in triples {
            net.check_node(i)?;
            net.check_node(j)?;
            if i == j {
                return Err(Error::SelfLoop(i.to_string()));
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEdge {
                    origin: i.to_string(),
                    destination: j.to_string(),
                });
            }
            if v > 0 {
                net.set_flow(i, j, v);
            }
        }
        Ok(net)
    }

    /// Build from id-keyed records, resolving ids through `ids`.
    pub fn build(ids: &NodeIds, records: &[FlowRecord]) -> Result<Self> {
        let mut net = FlowNetwork::empty(ids.len());
        let mut seen = std::collections::HashSet::new();
        for rec in records {
            if rec.origin == rec.destination {
                return Err(Error::SelfLoop(rec.origin.clone()));
            }
            let i = ids.index_of(&rec.origin)?;
            let j = ids.index_of(&rec.destination)?;
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEdge {
                    origin: rec.origin.clone(),
                    destination: rec.destination.clone(),
                });
            }
            if rec.count > 0 {
                net.set_flow(i, j, rec.count);
            }
        }
        Ok(net)
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node < self.n_nodes {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index: node,
                n_nodes: self.n_nodes,
            })
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dyads(&self) -> usize {
        dyad_count(self.n_nodes)
    }

    pub fn period_label(&self) -> &str {
        &self.period_label
    }

    /// Number of stored (nonzero) edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_flow(&self) -> u64 {
        self.total
    }

    pub fn max_value(&self) -> u64 {
        self.edges.iter().map(|e| e.value).max().unwrap_or(0)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.index
            .get(&(i as u32, j as u32))
            .map_or(0, |&k| self.edges[k].value)
    }

    /// Stored edges in insertion order (modified by removals).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Stored edges sorted by `(origin, destination)`.
    pub fn sorted_edges(&self) -> Vec<Edge> {
        let mut e = self.edges.clone();
        e.sort_unstable_by_key(|e| (e.origin, e.destination));
        e
    }

    pub fn in_volume(&self, node: usize) -> Result<u64> {
        self.check_node(node)?;
        Ok(self.in_volume[node])
    }

    pub fn out_volume(&self, node: usize) -> Result<u64> {
        self.check_node(node)?;
        Ok(self.out_volume[node])
    }

    pub fn in_volumes(&self) -> &[u64] {
        &self.in_volume
    }

    pub fn out_volumes(&self) -> &[u64] {
        &self.out_volume
    }

    /// Set `y_ij = value`, returning the previous value. Panics on a
    /// self-loop or out-of-range index.
    pub fn set_flow(&mut self, i: usize, j: usize, value: u64) -> u64 {
        assert!(i != j, "self-loop ({i}, {i})");
        assert!(i < self.n_nodes && j < self.n_nodes, "node out of range");
        let key = (i as u32, j as u32);
        let old = match self.index.get(&key) {
            Some(&k) => {
                let old = self.edges[k].value;
                if value == 0 {
                    self.edges.swap_remove(k);
                    self.index.remove(&key);
                    if k < self.edges.len() {
                        let moved = self.edges[k];
                        self.index
                            .insert((moved.origin as u32, moved.destination as u32), k);
                    }
                } else {
                    self.edges[k].value = value;
                }
                old
            }
            None => {
                if value > 0 {
                    self.index.insert(key, self.edges.len());
                    self.edges.push(Edge {
                        origin: i,
                        destination: j,
                        value,
                    });
                }
                0
            }
        };
        self.out_volume[i] = self.out_volume[i] - old + value;
        self.in_volume[j] = self.in_volume[j] - old + value;
        self.total = self.total - old + value;
        old
    }

    /// Edge records using the external ids, sorted by node index.
    pub fn to_records(&self, ids: &NodeIds) -> Vec<FlowRecord> {
        self.sorted_edges()
            .into_iter()
            .map(|e| FlowRecord {
                origin: ids.id(e.origin).to_string(),
                destination: ids.id(e.destination).to_string(),
                count: e.value,
            })
            .collect()
    }

    pub fn summarize(&self) -> SummaryReport {
        let n = self.n_nodes as f64;
        let e = self.edges.len() as f64;
        let dyads = self.n_dyads() as f64;
        let total = self.total as f64;
        SummaryReport {
            period_label: self.period_label.clone(),
            vertices: self.n_nodes,
            edges: self.edges.len(),
            density: if dyads > 0.0 { e / dyads } else { 0.0 },
            mean_degree: if n > 0.0 { 2.0 * e / n } else { 0.0 },
            total_flow: self.total,
            mean_flow_per_node: if n > 0.0 { 2.0 * total / n } else { 0.0 },
            mean_flow_per_edge: if e > 0.0 { total / e } else { 0.0 },
        }
    }
}

impl PartialEq for FlowNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.n_nodes == other.n_nodes
            && self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .all(|e| other.get(e.origin, e.destination) == e.value)
    }
}

/// Descriptive statistics of one flow network.
///
/// Degree is Freeman total degree (in + out), so the mean degree is
/// `2 * edges / vertices`; likewise the mean flow per node counts both
/// in- and out-migrants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub period_label: String,
    pub vertices: usize,
    pub edges: usize,
    pub density: f64,
    pub mean_degree: f64,
    pub total_flow: u64,
    pub mean_flow_per_node: f64,
    pub mean_flow_per_edge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Northeast,
    South,
    West,
    Midwest,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Northeast,
        Region::South,
        Region::West,
        Region::Midwest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Northeast => "Northeast",
            Region::South => "South",
            Region::West => "West",
            Region::Midwest => "Midwest",
        }
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "northeast" => Ok(Region::Northeast),
            "south" => Ok(Region::South),
            "west" => Ok(Region::West),
            "midwest" => Ok(Region::Midwest),
            other => Err(Error::invalid(format!("unknown region {other:?}"))),
        }
    }
}

/// Order of entries in [`NodeRecord::racial_shares`].
pub const RACIAL_GROUPS: [&str; 5] = ["hispanic", "black", "asian", "white", "other"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub population: u64,
    /// Thousand persons per square kilometre.
    pub density: f64,
    /// Potential support ratio, ages 15-64 over 65+.
    pub psr: f64,
    /// Hispanic, NH-Black, NH-Asian, NH-White, other; proportions summing to one.
    pub racial_shares: [f64; 5],
    pub renter_pct: f64,
    pub highered_pct: f64,
    pub unemployment_pct: f64,
    pub rural_pct: f64,
    pub democrat_poll_pct: f64,
    pub region: Region,
    pub state_id: String,
    pub immigrant_inflow: u64,
}

impl NodeRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.population == 0 {
            return Err("population must be positive".into());
        }
        if !(self.density.is_finite() && self.density >= 0.0) {
            return Err(format!("density {} is not a non-negative number", self.density));
        }
        if !(self.psr.is_finite() && self.psr >= 0.0) {
            return Err(format!("psr {} is not a non-negative number", self.psr));
        }
        if self.racial_shares.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err("racial shares must lie in [0, 1]".into());
        }
        let sum: f64 = self.racial_shares.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("racial shares sum to {sum}, expected 1"));
        }
        for (name, v) in [
            ("pct_renter", self.renter_pct),
            ("pct_highered", self.highered_pct),
            ("pct_unemployment", self.unemployment_pct),
            ("pct_rural", self.rural_pct),
            ("pct_democrat_2008", self.democrat_poll_pct),
        ] {
            if !(0.0..=100.0).contains(&v) {
                return Err(format!("{name} = {v} outside [0, 100]"));
            }
        }
        Ok(())
    }
}

/// Per-node covariates, indexed like the network.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeTable {
    pub records: Vec<NodeRecord>,
}

/// Names accepted by [`NodeTable::covariate`].
pub const NODE_COVARIATES: &[&str] = &[
    "population",
    "log_population",
    "density",
    "log_density",
    "psr",
    "immigrant_inflow",
    "log_immigrant_inflow",
    "pct_hispanic",
    "pct_black",
    "pct_asian",
    "pct_white",
    "pct_other",
    "p_hispanic",
    "p_black",
    "p_asian",
    "p_white",
    "p_other",
    "pct_renter",
    "pct_highered",
    "pct_unemployment",
    "pct_rural",
    "pct_democrat",
    "p_renter",
    "p_highered",
    "p_unemployment",
    "p_rural",
    "p_democrat",
    "northeast",
    "south",
    "west",
    "midwest",
];

impl NodeTable {
    pub fn new(records: Vec<NodeRecord>) -> Result<Self> {
        for (k, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|m| Error::invalid(format!("node {k}: {m}")))?;
        }
        Ok(NodeTable { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Numeric node covariate by name.
    ///
    /// `p_*` names are proportions (the `pct_*` value over 100), `log_*`
    /// names are natural logs, and `log_immigrant_inflow` is `ln(1 + x)` so
    /// that counties without immigrants stay finite. Region names yield 0/1
    /// dummies.
    pub fn covariate(&self, name: &str) -> Option<Vec<f64>> {
        let col = |f: &dyn Fn(&NodeRecord) -> f64| -> Vec<f64> { self.records.iter().map(f).collect() };
        let share = |k: usize| col(&|r| r.racial_shares[k]);
        let region = |g: Region| col(&|r| f64::from(u8::from(r.region == g)));
        Some(match name {
            "population" => col(&|r| r.population as f64),
            "log_population" => col(&|r| (r.population as f64).ln()),
            "density" => col(&|r| r.density),
            "log_density" => col(&|r| r.density.ln()),
            "psr" => col(&|r| r.psr),
            "immigrant_inflow" => col(&|r| r.immigrant_inflow as f64),
            "log_immigrant_inflow" => col(&|r| (r.immigrant_inflow as f64).ln_1p()),
            "pct_renter" => col(&|r| r.renter_pct),
            "pct_highered" => col(&|r| r.highered_pct),
            "pct_unemployment" => col(&|r| r.unemployment_pct),
            "pct_rural" => col(&|r| r.rural_pct),
            "pct_democrat" => col(&|r| r.democrat_poll_pct),
            "p_renter" => col(&|r| r.renter_pct / 100.0),
            "p_highered" => col(&|r| r.highered_pct / 100.0),
            "p_unemployment" => col(&|r| r.unemployment_pct / 100.0),
            "p_rural" => col(&|r| r.rural_pct / 100.0),
            "p_democrat" => col(&|r| r.democrat_poll_pct / 100.0),
            "northeast" => region(Region::Northeast),
            "south" => region(Region::South),
            "west" => region(Region::West),
            "midwest" => region(Region::Midwest),
            _ => {
                if let Some(g) = name.strip_prefix("p_") {
                    let k = RACIAL_GROUPS.iter().position(|x| *x == g)?;
                    share(k)
                } else if let Some(g) = name.strip_prefix("pct_") {
                    let k = RACIAL_GROUPS.iter().position(|x| *x == g)?;
                    col(&|r| 100.0 * r.racial_shares[k])
                } else {
                    return None;
                }
            }
        })
    }
}

/// One real-valued matrix over ordered node pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum DyadMatrix {
    /// Row-major `n x n`; diagonal entries are ignored.
    Dense { n: usize, values: Vec<f64> },
    /// Absent pairs are zero.
    Sparse {
        n: usize,
        values: HashMap<(u32, u32), f64>,
    },
}

impl DyadMatrix {
    pub fn dense_from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    values[i * n + j] = f(i, j);
                }
            }
        }
        DyadMatrix::Dense { n, values }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            DyadMatrix::Dense { n, .. } | DyadMatrix::Sparse { n, .. } => *n,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            DyadMatrix::Dense { n, values } => values[i * n + j],
            DyadMatrix::Sparse { values, .. } => {
                values.get(&(i as u32, j as u32)).copied().unwrap_or(0.0)
            }
        }
    }

    fn all_pairs(&self, pred: impl Fn(f64, f64) -> bool) -> Option<(usize, usize)> {
        let n = self.n_nodes();
        for i in 0..n {
            for j in (i + 1)..n {
                if !pred(self.get(i, j), self.get(j, i)) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Named dyadic covariates. The conventional names are the `DYAD_*`
/// constants; additional names are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DyadCovariateSet {
    n_nodes: usize,
    matrices: BTreeMap<String, DyadMatrix>,
}

pub const DYAD_LOG_DISTANCE: &str = "log_distance";
pub const DYAD_SAME_STATE: &str = "same_state";
pub const DYAD_POLITICAL: &str = "political_dissim";
pub const DYAD_RURAL: &str = "rural_dissim";
pub const DYAD_RACIAL: &str = "racial_dissim";
pub const DYAD_UNEMP_DIFF: &str = "unemp_diff";
pub const DYAD_LAGGED_LOG_FLOW: &str = "lagged_log_flow";

const SYMMETRIC: &[&str] = &[DYAD_POLITICAL, DYAD_RURAL, DYAD_RACIAL, DYAD_SAME_STATE];
const ANTISYMMETRIC: &[&str] = &[DYAD_UNEMP_DIFF];

impl DyadCovariateSet {
    pub fn new(n_nodes: usize) -> Self {
        DyadCovariateSet {
            n_nodes,
            matrices: BTreeMap::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Insert or replace a matrix, enforcing symmetry for the dissimilarity
    /// names and antisymmetry for `unemp_diff`.
    pub fn insert(&mut self, name: impl Into<String>, m: DyadMatrix) -> Result<()> {
        let name = name.into();
        if m.n_nodes() != self.n_nodes {
            return Err(Error::invalid(format!(
                "dyad covariate {name:?} has {} nodes, expected {}",
                m.n_nodes(),
                self.n_nodes
            )));
        }
        let bad = if SYMMETRIC.contains(&name.as_str()) {
            m.all_pairs(|a, b| a == b)
        } else if ANTISYMMETRIC.contains(&name.as_str()) {
            m.all_pairs(|a, b| a == -b)
        } else {
            None
        };
        if let Some((i, j)) = bad {
            return Err(Error::invalid(format!(
                "dyad covariate {name:?} violates its symmetry at ({i}, {j})"
            )));
        }
        self.matrices.insert(name, m);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&DyadMatrix> {
        self.matrices.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.matrices.keys().map(String::as_str)
    }
}
