//! Tie / no-tie stratified dyad sampling with Horvitz-Thompson weights.

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flownet::{dyad_count, dyad_from_index, dyad_index, FlowNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataCounts {
    pub total_nonzero: usize,
    pub total_zero: usize,
    pub sampled_nonzero: usize,
    pub sampled_zero: usize,
}

impl StrataCounts {
    /// Inverse inclusion probability of the nonzero stratum.
    pub fn nonzero_weight(&self) -> f64 {
        ratio(self.total_nonzero, self.sampled_nonzero)
    }

    pub fn zero_weight(&self) -> f64 {
        ratio(self.total_zero, self.sampled_zero)
    }
}

fn ratio(total: usize, sampled: usize) -> f64 {
    if sampled == 0 {
        0.0
    } else {
        total as f64 / sampled as f64
    }
}

/// Sampled dyads, sorted by `(i, j)`, with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadSample {
    pub dyads: Vec<(u32, u32)>,
    pub weights: Vec<f64>,
    pub strata: StrataCounts,
    pub seed: u64,
}

/// [`DyadSample`] without the dyad list, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub n_sampled: usize,
    pub strata: StrataCounts,
    pub nonzero_weight: f64,
    pub zero_weight: f64,
    pub weight_total: f64,
    pub seed: u64,
    pub census: bool,
}

impl DyadSample {
    pub fn len(&self) -> usize {
        self.dyads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dyads.is_empty()
    }

    pub fn weight_total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_census(&self) -> bool {
        self.strata.sampled_nonzero == self.strata.total_nonzero
            && self.strata.sampled_zero == self.strata.total_zero
    }

    pub fn meta(&self) -> SampleMeta {
        SampleMeta {
            n_sampled: self.len(),
            strata: self.strata,
            nonzero_weight: self.strata.nonzero_weight(),
            zero_weight: self.strata.zero_weight(),
            weight_total: self.weight_total(),
            seed: self.seed,
            census: self.is_census(),
        }
    }

    /// Every dyad once with unit weight.
    pub fn census(net: &FlowNetwork) -> Self {
        let n = net.n_nodes();
        let dyads: Vec<(u32, u32)> = (0..dyad_count(n))
            .map(|d| {
                let (i, j) = dyad_from_index(n, d);
                (i as u32, j as u32)
            })
            .collect();
        let nnz = net.edge_count();
        let strata = StrataCounts {
            total_nonzero: nnz,
            total_zero: dyads.len() - nnz,
            sampled_nonzero: nnz,
            sampled_zero: dyads.len() - nnz,
        };
        DyadSample {
            weights: vec![1.0; dyads.len()],
            dyads,
            strata,
            seed: 0,
        }
    }
}

/// Splits `n_total` draws between the nonzero and zero strata by fair coin
/// flips, redirecting draws to the other stratum once one is exhausted.
pub fn allocate_strata(
    total_nonzero: usize,
    total_zero: usize,
    n_total: usize,
    rng: &mut impl rand::Rng,
) -> (usize, usize) {
    let n_total = n_total.min(total_nonzero + total_zero);
    let heads = Binomial::new(n_total as u64, 0.5)
        .expect("valid binomial")
        .sample(rng) as usize;
    let mut nz = heads.min(total_nonzero);
    let mut zero = n_total - nz;
    if zero > total_zero {
        zero = total_zero;
        nz = n_total - zero;
    }
    (nz, zero)
}

/// Tie / no-tie sample of `n_total` distinct dyads.
///
/// Within a stratum, dyads are drawn uniformly without replacement; each
/// sampled dyad carries its stratum's inverse inclusion probability. If
/// `n_total` reaches the number of dyads the census is returned.
pub fn stratified_dyad_sample(net: &FlowNetwork, n_total: usize, seed: u64) -> Result<DyadSample> {
    if n_total == 0 {
        return Err(Error::invalid("dyad sample size must be at least 1"));
    }
    let n = net.n_nodes();
    let total = dyad_count(n);
    if total == 0 {
        return Err(Error::invalid("network has no dyads"));
    }
    if n_total >= total {
        let mut s = DyadSample::census(net);
        s.seed = seed;
        return Ok(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nnz = net.edge_count();
    let nzero = total - nnz;
    let (k_nz, k_zero) = allocate_strata(nnz, nzero, n_total, &mut rng);

    let edges = net.sorted_edges();
    let mut picked: Vec<usize> = index::sample(&mut rng, nnz, k_nz)
        .into_iter()
        .map(|k| dyad_index(n, edges[k].origin, edges[k].destination))
        .collect();

    if 2 * k_zero >= nzero {
        let zeros: Vec<usize> = (0..total)
            .filter(|&d| {
                let (i, j) = dyad_from_index(n, d);
                net.get(i, j) == 0
            })
            .collect();
        picked.extend(index::sample(&mut rng, nzero, k_zero).into_iter().map(|k| zeros[k]));
    } else {
        let mut chosen = HashSet::with_capacity(k_zero);
        let mut order = Vec::with_capacity(k_zero);
        while order.len() < k_zero {
            let d = rand::Rng::random_range(&mut rng, 0..total);
            let (i, j) = dyad_from_index(n, d);
            if net.get(i, j) == 0 && chosen.insert(d) {
                order.push(d);
            }
        }
        picked.extend(order);
    }
    picked.sort_unstable();

    let strata = StrataCounts {
        total_nonzero: nnz,
        total_zero: nzero,
        sampled_nonzero: k_nz,
        sampled_zero: k_zero,
    };
    let (w_nz, w_zero) = (strata.nonzero_weight(), strata.zero_weight());
    let mut dyads = Vec::with_capacity(picked.len());
    let mut weights = Vec::with_capacity(picked.len());
    for d in picked {
        let (i, j) = dyad_from_index(n, d);
        dyads.push((i as u32, j as u32));
        weights.push(if net.get(i, j) > 0 { w_nz } else { w_zero });
    }
    Ok(DyadSample {
        dyads,
        weights,
        strata,
        seed,
    })
}
