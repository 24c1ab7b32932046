//! CSV loaders and writers, dyadic covariate construction, group-flow
//! aggregation and a synthetic dataset generator.
//!
//! File formats (UTF-8, header row required, `.` decimal separator):
//!
//! * flows: `origin,destination,count`
//! * nodes: `id,state,region,population,density,psr,pct_hispanic,pct_black,
//!   pct_asian,pct_white,pct_other,pct_renter,pct_highered,pct_unemployment,
//!   pct_rural,pct_democrat_2008,immigrant_inflow`
//! * distances: `id_a,id_b,km`, one direction per pair is enough
//!
//! Racial composition columns are percentages; they are stored as shares
//! and must sum to 100 (to 1e-9 relative).

mod synthetic;

pub use synthetic::{synthetic_generate, SyntheticConfig, SyntheticData};

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flownet::{
    DyadCovariateSet, DyadMatrix, FlowNetwork, FlowRecord, NodeIds, NodeRecord, NodeTable, Region, DYAD_LAGGED_LOG_FLOW,
    DYAD_LOG_DISTANCE, DYAD_POLITICAL, DYAD_RACIAL, DYAD_RURAL, DYAD_SAME_STATE, DYAD_UNEMP_DIFF,
};

pub const FLOW_HEADER: [&str; 3] = ["origin", "destination", "count"];
pub const DISTANCE_HEADER: [&str; 3] = ["id_a", "id_b", "km"];
pub const NODE_HEADER: [&str; 17] = [
    "id",
    "state",
    "region",
    "population",
    "density",
    "psr",
    "pct_hispanic",
    "pct_black",
    "pct_asian",
    "pct_white",
    "pct_other",
    "pct_renter",
    "pct_highered",
    "pct_unemployment",
    "pct_rural",
    "pct_democrat_2008",
    "immigrant_inflow",
];

struct Table {
    path: PathBuf,
    columns: HashMap<String, usize>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Table> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        let csv_err = |source| Error::Csv {
            path: path.into(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let columns: HashMap<String, usize> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .enumerate()
            .map(|(k, h)| (h.to_string(), k))
            .collect();
        let missing: Vec<&str> = required.iter().copied().filter(|c| !columns.contains_key(*c)).collect();
        if !missing.is_empty() {
            return Err(Error::Malformed {
                path: path.into(),
                row: 1,
                message: format!("missing column(s): {}", missing.join(", ")),
            });
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec));
        }
        Ok(Table {
            path: path.into(),
            columns,
            rows,
        })
    }

    fn malformed(&self, row: usize, message: impl Into<String>) -> Error {
        Error::Malformed {
            path: self.path.clone(),
            row,
            message: message.into(),
        }
    }

    fn str<'r>(&self, (line, rec): &'r (usize, csv::StringRecord), col: &str) -> Result<&'r str> {
        rec.get(self.columns[col])
            .ok_or_else(|| self.malformed(*line, format!("missing value for {col}")))
    }

    fn parse<T: std::str::FromStr>(&self, row: &(usize, csv::StringRecord), col: &str) -> Result<T> {
        let s = self.str(row, col)?;
        s.parse()
            .map_err(|_| self.malformed(row.0, format!("{col}: cannot parse {s:?}")))
    }
}

/// Read a flow edge list. Duplicate `(origin, destination)` rows and
/// self-loops are rejected with their line number.
pub fn load_flows(path: impl AsRef<Path>) -> Result<Vec<FlowRecord>> {
    let t = Table::read(path.as_ref(), &FLOW_HEADER)?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let origin = t.str(row, "origin")?.to_string();
        let destination = t.str(row, "destination")?.to_string();
        let count: u64 = t.parse(row, "count")?;
        if origin == destination {
            return Err(t.malformed(row.0, format!("self-loop record for {origin:?}")));
        }
        if let Some(first) = seen.insert((origin.clone(), destination.clone()), row.0) {
            return Err(t.malformed(
                row.0,
                format!("duplicate record ({origin}, {destination}), first seen on line {first}"),
            ));
        }
        out.push(FlowRecord {
            origin,
            destination,
            count,
        });
    }
    Ok(out)
}

/// Read the node covariate table; row order defines node indices.
pub fn load_nodes(path: impl AsRef<Path>) -> Result<(NodeIds, NodeTable)> {
    let t = Table::read(path.as_ref(), &NODE_HEADER)?;
    let mut ids = Vec::with_capacity(t.rows.len());
    let mut seen = HashMap::new();
    let mut records = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let id = t.str(row, "id")?.to_string();
        if let Some(first) = seen.insert(id.clone(), row.0) {
            return Err(t.malformed(row.0, format!("duplicate node id {id:?}, first seen on line {first}")));
        }
        let f = |c: &str| t.parse::<f64>(row, c);
        let mut shares = [0.0; 5];
        for (s, c) in shares.iter_mut().zip(&NODE_HEADER[6..11]) {
            *s = f(c)? / 100.0;
        }
        let region: Region = t
            .str(row, "region")?
            .parse()
            .map_err(|e: Error| t.malformed(row.0, e.to_string()))?;
        let rec = NodeRecord {
            population: t.parse(row, "population")?,
            density: f("density")?,
            psr: f("psr")?,
            racial_shares: shares,
            renter_pct: f("pct_renter")?,
            highered_pct: f("pct_highered")?,
            unemployment_pct: f("pct_unemployment")?,
            rural_pct: f("pct_rural")?,
            democrat_poll_pct: f("pct_democrat_2008")?,
            region,
            state_id: t.str(row, "state")?.to_string(),
            immigrant_inflow: t.parse(row, "immigrant_inflow")?,
        };
        rec.validate()
            .map_err(|m| t.malformed(row.0, format!("node {id:?}: {m}")))?;
        ids.push(id);
        records.push(rec);
    }
    Ok((NodeIds::new(ids)?, NodeTable::new(records)?))
}

/// Pairwise distances in km, keyed by node index. Either direction of a pair
/// may be given; if both are, they must agree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistanceTable {
    km: HashMap<(u32, u32), f64>,
}

impl DistanceTable {
    pub fn insert(&mut self, a: usize, b: usize, km: f64) -> Result<()> {
        let key = (a.min(b) as u32, a.max(b) as u32);
        match self.km.insert(key, km) {
            Some(old) if old != km => Err(Error::invalid(format!(
                "conflicting distances {old} and {km} for pair ({a}, {b})"
            ))),
            _ => Ok(()),
        }
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.km.get(&(a.min(b) as u32, a.max(b) as u32)).copied()
    }

    pub fn len(&self) -> usize {
        self.km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.km.is_empty()
    }
}

pub fn load_distances(path: impl AsRef<Path>, ids: &NodeIds) -> Result<DistanceTable> {
    let t = Table::read(path.as_ref(), &DISTANCE_HEADER)?;
    let mut table = DistanceTable::default();
    for row in &t.rows {
        let idx = |c: &str| -> Result<usize> {
            let id = t.str(row, c)?;
            ids.index_of(id)
                .map_err(|_| t.malformed(row.0, format!("unknown node id {id:?}")))
        };
        let (a, b) = (idx("id_a")?, idx("id_b")?);
        let km: f64 = t.parse(row, "km")?;
        if a == b {
            continue;
        }
        table
            .insert(a, b, km)
            .map_err(|e| t.malformed(row.0, e.to_string()))?;
    }
    Ok(table)
}

/// A five-group racial composition given as shares or raw counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawComposition(pub [f64; 5]);

impl RawComposition {
    /// Shares summing to one.
    pub fn shares(&self) -> Result<[f64; 5]> {
        if self.0.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(format!("composition {:?} has negative or non-finite entries", self.0)));
        }
        let total: f64 = self.0.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("composition is all zero"));
        }
        Ok(self.0.map(|x| x / total))
    }
}

/// Half the L1 distance between two compositions.
pub fn racial_dissimilarity(a: &RawComposition, b: &RawComposition) -> Result<f64> {
    let (a, b) = (a.shares()?, b.shares()?);
    Ok(half_l1(&a, &b))
}

fn half_l1(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    (0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0)
}

/// `|x_a - x_b| / 100` for two percentages.
pub fn scalar_dissimilarity(x_a: f64, x_b: f64) -> Result<f64> {
    for x in [x_a, x_b] {
        if !(0.0..=100.0).contains(&x) {
            return Err(Error::invalid(format!("percentage {x} outside [0, 100]")));
        }
    }
    Ok((x_a - x_b).abs() / 100.0)
}

/// Dyadic covariates from node attributes, distances and (optionally) the
/// lagged network:
///
/// * `log_distance = ln(km)`, only when a distance table is supplied
/// * `same_state` 0/1
/// * `political_dissim`, `rural_dissim` from the percentage columns,
///   `racial_dissim` from the racial shares
/// * `unemp_diff` = destination minus origin, percentage points
/// * `lagged_log_flow = ln(1 + y_lag)`
pub fn build_dyad_covariates(
    nodes: &NodeTable,
    distances: Option<&DistanceTable>,
    lagged: Option<&FlowNetwork>,
) -> Result<DyadCovariateSet> {
    let n = nodes.len();
    let r = &nodes.records;
    let mut set = DyadCovariateSet::new(n);
    if let Some(distances) = distances {
        set.insert(DYAD_LOG_DISTANCE, log_distance(n, distances)?)?;
    }
    set.insert(
        DYAD_SAME_STATE,
        DyadMatrix::dense_from_fn(n, |i, j| f64::from(u8::from(r[i].state_id == r[j].state_id))),
    )?;
    set.insert(
        DYAD_POLITICAL,
        DyadMatrix::dense_from_fn(n, |i, j| {
            (r[i].democrat_poll_pct - r[j].democrat_poll_pct).abs() / 100.0
        }),
    )?;
    set.insert(
        DYAD_RURAL,
        DyadMatrix::dense_from_fn(n, |i, j| (r[i].rural_pct - r[j].rural_pct).abs() / 100.0),
    )?;
    set.insert(
        DYAD_RACIAL,
        DyadMatrix::dense_from_fn(n, |i, j| half_l1(&r[i].racial_shares, &r[j].racial_shares)),
    )?;
    set.insert(
        DYAD_UNEMP_DIFF,
        DyadMatrix::dense_from_fn(n, |i, j| r[j].unemployment_pct - r[i].unemployment_pct),
    )?;
    if let Some(lag) = lagged {
        if lag.n_nodes() != n {
            return Err(Error::invalid(format!(
                "lagged network has {} nodes, node table has {n}",
                lag.n_nodes()
            )));
        }
        set.insert(DYAD_LAGGED_LOG_FLOW, lagged_log_flow(lag))?;
    }
    Ok(set)
}

/// `ln(km)` for every pair; every pair must have a positive distance.
pub fn log_distance(n: usize, distances: &DistanceTable) -> Result<DyadMatrix> {
    let mut missing = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            match distances.get(i, j) {
                None => missing.push((i, j)),
                Some(km) if !(km > 0.0 && km.is_finite()) => {
                    return Err(Error::invalid(format!(
                        "distance between nodes {i} and {j} is {km}; must be positive"
                    )))
                }
                _ => {}
            }
        }
    }
    if !missing.is_empty() {
        let shown: Vec<String> = missing.iter().take(10).map(|(i, j)| format!("({i}, {j})")).collect();
        return Err(Error::invalid(format!(
            "missing distance for {} pair(s): {}{}",
            missing.len(),
            shown.join(", "),
            if missing.len() > 10 { ", ..." } else { "" }
        )));
    }
    Ok(DyadMatrix::dense_from_fn(n, |i, j| distances.get(i, j).map_or(0.0, f64::ln)))
}

/// `ln(1 + y)` of a network, sparse.
pub fn lagged_log_flow(lag: &FlowNetwork) -> DyadMatrix {
    DyadMatrix::Sparse {
        n: lag.n_nodes(),
        values: lag
            .edges()
            .iter()
            .map(|e| ((e.origin as u32, e.destination as u32), (e.value as f64).ln_1p()))
            .collect(),
    }
}

/// Flow totals between the two sides of a binary node partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFlowMatrix {
    /// `cells[a][b]` is the flow from group `a` into group `b`.
    pub cells: [[u64; 2]; 2],
    /// `column_shares[a][b]`: share of the inflow into group `b` that comes
    /// from group `a`; NaN for a group receiving no flow.
    pub column_shares: [[f64; 2]; 2],
}

impl GroupFlowMatrix {
    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    /// Share of the inflow into `group` that originates in the other group.
    pub fn cross_share_into(&self, group: usize) -> f64 {
        self.column_shares[1 - group][group]
    }
}

pub fn group_flow_matrix(net: &FlowNetwork, partition: &[bool]) -> Result<GroupFlowMatrix> {
    if partition.len() != net.n_nodes() {
        return Err(Error::invalid(format!(
            "partition covers {} nodes, network has {}",
            partition.len(),
            net.n_nodes()
        )));
    }
    let mut cells = [[0u64; 2]; 2];
    for e in net.edges() {
        cells[usize::from(partition[e.origin])][usize::from(partition[e.destination])] += e.value;
    }
    let mut column_shares = [[f64::NAN; 2]; 2];
    for b in 0..2 {
        let col = cells[0][b] + cells[1][b];
        if col > 0 {
            for a in 0..2 {
                column_shares[a][b] = cells[a][b] as f64 / col as f64;
            }
        }
    }
    Ok(GroupFlowMatrix {
        cells,
        column_shares,
    })
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.into(),
        source,
    }
}

/// Write a network as an `origin,destination,count` edge list, sorted by
/// node index.
pub fn write_flows(path: impl AsRef<Path>, net: &FlowNetwork, ids: &NodeIds) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let err = csv_error(path);
    w.write_record(FLOW_HEADER).map_err(&err)?;
    for r in net.to_records(ids) {
        w.write_record([r.origin, r.destination, r.count.to_string()])
            .map_err(&err)?;
    }
    finish(w, path)
}

pub fn write_nodes(path: impl AsRef<Path>, ids: &NodeIds, nodes: &NodeTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let err = csv_error(path);
    w.write_record(NODE_HEADER).map_err(&err)?;
    for (k, r) in nodes.records.iter().enumerate() {
        let mut row = vec![
            ids.id(k).to_string(),
            r.state_id.clone(),
            r.region.name().to_string(),
            r.population.to_string(),
            r.density.to_string(),
            r.psr.to_string(),
        ];
        row.extend(r.racial_shares.iter().map(|s| (100.0 * s).to_string()));
        row.extend(
            [r.renter_pct, r.highered_pct, r.unemployment_pct, r.rural_pct, r.democrat_poll_pct]
                .iter()
                .map(f64::to_string),
        );
        row.push(r.immigrant_inflow.to_string());
        w.write_record(&row).map_err(&err)?;
    }
    finish(w, path)
}

pub fn write_distances(path: impl AsRef<Path>, ids: &NodeIds, distances: &DistanceTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let err = csv_error(path);
    w.write_record(DISTANCE_HEADER).map_err(&err)?;
    let mut pairs: Vec<(&(u32, u32), &f64)> = distances.km.iter().collect();
    pairs.sort_by_key(|(k, _)| **k);
    for (&(a, b), km) in pairs {
        w.write_record([ids.id(a as usize), ids.id(b as usize), &km.to_string()])
            .map_err(&err)?;
    }
    finish(w, path)
}

/// One dissimilarity row per unordered node pair:
/// `id_a,id_b,political_dissim,rural_dissim,racial_dissim`.
pub fn write_dissimilarities(out: &mut impl Write, ids: &NodeIds, nodes: &NodeTable) -> Result<()> {
    let r = &nodes.records;
    let mut w = csv::Writer::from_writer(out);
    let err = |source| Error::Csv {
        path: PathBuf::from("<dissimilarity output>"),
        source,
    };
    w.write_record(["id_a", "id_b", DYAD_POLITICAL, DYAD_RURAL, DYAD_RACIAL])
        .map_err(err)?;
    for i in 0..r.len() {
        for j in (i + 1)..r.len() {
            w.write_record([
                ids.id(i).to_string(),
                ids.id(j).to_string(),
                scalar_dissimilarity(r[i].democrat_poll_pct, r[j].democrat_poll_pct)?.to_string(),
                scalar_dissimilarity(r[i].rural_pct, r[j].rural_pct)?.to_string(),
                half_l1(&r[i].racial_shares, &r[j].racial_shares).to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<dissimilarity output>"),
        source,
    })
}

/// Ids referenced by flow records but absent from `ids`.
pub fn unknown_ids(records: &[FlowRecord], ids: &NodeIds) -> Vec<String> {
    let mut out: Vec<String> = records
        .iter()
        .flat_map(|r| [&r.origin, &r.destination])
        .filter(|id| ids.index_of(id).is_err())
        .cloned()
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    out.sort();
    out
}
