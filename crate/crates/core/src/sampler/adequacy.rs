use serde::{Deserialize, Serialize};

use crate::flownet::{FlowNetwork, NodeIds};

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pearson correlation; `None` when either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (dx, dy) = (x[k] - mx, y[k] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRow {
    pub node: usize,
    pub observed: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub q025: f64,
    pub q975: f64,
    pub outside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEnvelope {
    pub rows: Vec<VolumeRow>,
    /// Correlation of observed volumes with simulated medians.
    pub correlation: f64,
    pub n_outside: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdequacyReport {
    pub n_networks: usize,
    pub in_volume: VolumeEnvelope,
    pub out_volume: VolumeEnvelope,
    pub warnings: Vec<String>,
}

fn envelope(observed: &[u64], samples: &[&[u64]], what: &str, warnings: &mut Vec<String>) -> VolumeEnvelope {
    let mut rows = Vec::with_capacity(observed.len());
    let mut col = vec![0.0; samples.len()];
    for (node, &obs) in observed.iter().enumerate() {
        for (c, s) in col.iter_mut().zip(samples) {
            *c = s[node] as f64;
        }
        col.sort_by(f64::total_cmp);
        let (q025, q975) = (quantile(&col, 0.025), quantile(&col, 0.975));
        let obs = obs as f64;
        rows.push(VolumeRow {
            node,
            observed: obs,
            median: quantile(&col, 0.5),
            min: col.first().copied().unwrap_or(f64::NAN),
            max: col.last().copied().unwrap_or(f64::NAN),
            q025,
            q975,
            outside: obs < q025 || obs > q975,
        });
    }
    let obs: Vec<f64> = rows.iter().map(|r| r.observed).collect();
    let med: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let correlation = if obs == med {
        1.0
    } else {
        pearson(&obs, &med).unwrap_or_else(|| {
            warnings.push(format!("{what}-volume correlation undefined (constant series)"));
            f64::NAN
        })
    };
    VolumeEnvelope {
        n_outside: rows.iter().filter(|r| r.outside).count(),
        rows,
        correlation,
    }
}

/// Per-node in/out volume envelopes of `simulated` around `observed`.
pub fn adequacy_from_samples(observed: &FlowNetwork, simulated: &[FlowNetwork]) -> AdequacyReport {
    let mut warnings = Vec::new();
    if simulated.is_empty() {
        warnings.push("no simulated networks".into());
    } else if simulated.windows(2).all(|w| w[0] == w[1]) {
        warnings.push("degenerate chain: all simulated networks are identical".into());
    }
    let ins: Vec<&[u64]> = simulated.iter().map(|n| n.in_volumes()).collect();
    let outs: Vec<&[u64]> = simulated.iter().map(|n| n.out_volumes()).collect();
    let in_volume = envelope(observed.in_volumes(), &ins, "in", &mut warnings);
    let out_volume = envelope(observed.out_volumes(), &outs, "out", &mut warnings);
    AdequacyReport {
        n_networks: simulated.len(),
        in_volume,
        out_volume,
        warnings,
    }
}

impl VolumeEnvelope {
    /// `node,observed,median,min,max,q2.5,q97.5`.
    pub fn to_csv(&self, ids: Option<&NodeIds>) -> String {
        let mut out = String::from("node,observed,median,min,max,q2.5,q97.5\n");
        for r in &self.rows {
            let id = ids.map_or_else(|| r.node.to_string(), |m| m.id(r.node).to_string());
            out.push_str(&format!(
                "{id},{},{},{},{},{},{}\n",
                r.observed, r.median, r.min, r.max, r.q025, r.q975
            ));
        }
        out
    }
}
