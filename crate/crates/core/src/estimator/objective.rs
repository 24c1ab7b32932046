//! Weighted, ridge-penalised pseudo-log-likelihood with analytic derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Execution, DYAD_CHUNK};
use crate::flownet::FlowNetwork;
use crate::statistics::{ln_factorial, BoundModel, DyadContext, N_BASIS};

use super::sample::DyadSample;

/// Truncation rule for the per-dyad conditional normaliser.
///
/// The support starts at `max(y_ij, y_ji, min_support)` and doubles until the
/// last retained term carries less than `tail_tol` of the mass and the
/// weights are decreasing, or until the ceiling
/// `max(ceiling_factor * max_edge, min_ceiling)` is reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapPolicy {
    pub min_support: u64,
    pub tail_tol: f64,
    pub ceiling_factor: u64,
    pub min_ceiling: u64,
}

impl Default for CapPolicy {
    fn default() -> Self {
        CapPolicy {
            min_support: 20,
            tail_tol: 1e-12,
            ceiling_factor: 10,
            min_ceiling: 1024,
        }
    }
}

impl CapPolicy {
    pub fn ceiling(&self, max_edge: u64) -> u64 {
        (self.ceiling_factor.saturating_mul(max_edge)).max(self.min_ceiling)
    }
}

/// `ln w(u) = c . b(u) - ln u!` for `u = 0..=V`, with `V` chosen by `cap`
/// (and at least `at_least`). Returns the log weights and their log-sum.
pub(crate) fn log_weights(
    coef: &[f64; N_BASIS],
    ctx: &DyadContext,
    cap: &CapPolicy,
    max_edge: u64,
    at_least: u64,
) -> Result<(Vec<f64>, f64)> {
    let ceiling = cap.ceiling(max_edge).max(at_least);
    let mut support = ctx.y.max(ctx.y_rev).max(cap.min_support).max(at_least).min(ceiling);
    let lw_at = |u: u64| -> f64 {
        let b = ctx.basis(u);
        coef[0] * b[0] + coef[1] * b[1] + coef[2] * b[2] + coef[3] * b[3] - ln_factorial(u)
    };
    let mut lw: Vec<f64> = Vec::with_capacity(support as usize + 1);
    loop {
        for u in lw.len() as u64..=support {
            lw.push(lw_at(u));
        }
        let lse = log_sum_exp(&lw);
        if !lse.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite conditional normaliser at dyad ({}, {}) with basis coefficients {coef:?}",
                ctx.i, ctx.j
            )));
        }
        let last = lw[support as usize];
        let decreasing = support == 0 || last <= lw[support as usize - 1];
        if (decreasing && (last - lse).exp() < cap.tail_tol) || support >= ceiling {
            return Ok((lw, lse));
        }
        support = (support * 2).min(ceiling);
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivatives {
    ValueOnly,
    Gradient,
    Hessian,
}

/// Objective value with optional derivatives. `hessian` is row-major `k x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    /// Weighted pseudo-log-likelihood before the ridge penalty.
    pub unpenalized: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl Objective {
    fn zeros(k: usize, d: Derivatives) -> Self {
        Objective {
            value: 0.0,
            unpenalized: 0.0,
            gradient: if d == Derivatives::ValueOnly {
                Vec::new()
            } else {
                vec![0.0; k]
            },
            hessian: if d == Derivatives::Hessian {
                vec![0.0; k * k]
            } else {
                Vec::new()
            },
        }
    }

    fn add(&mut self, other: &Objective) {
        self.unpenalized += other.unpenalized;
        for (a, b) in self.gradient.iter_mut().zip(&other.gradient) {
            *a += b;
        }
        for (a, b) in self.hessian.iter_mut().zip(&other.hessian) {
            *a += b;
        }
    }
}

/// Sampled dyads with their change-statistic context, prepared once so each
/// objective evaluation is a pass over flat arrays.
#[derive(Debug, Clone)]
pub struct PseudoLikelihood<'a> {
    model: BoundModel<'a>,
    contexts: Vec<DyadContext>,
    weights: Vec<f64>,
    /// Row-major `n_sampled x k` slopes (zero for non-linear terms).
    slopes: Vec<f64>,
    max_edge: u64,
    cap: CapPolicy,
}

impl<'a> PseudoLikelihood<'a> {
    pub fn new(
        model: BoundModel<'a>,
        net: &FlowNetwork,
        sample: &DyadSample,
        cap: CapPolicy,
    ) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::invalid("empty dyad sample"));
        }
        model.check_size(net.n_nodes())?;
        let k = model.len();
        let n = net.n_nodes();
        let mut contexts = Vec::with_capacity(sample.len());
        let mut slopes = vec![0.0; sample.len() * k];
        for (row, &(i, j)) in sample.dyads.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            if i == j || i >= n || j >= n {
                return Err(Error::invalid(format!("sampled dyad ({i}, {j}) is invalid")));
            }
            contexts.push(DyadContext::new(net, i, j));
            let s = &mut slopes[row * k..(row + 1) * k];
            model.slopes_into(i, j, s);
            for (t, &b) in model.basis_columns().iter().enumerate() {
                if b != 0 {
                    s[t] = 0.0;
                }
            }
            if let Some(x) = s.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite covariate value {x} at dyad ({i}, {j})"
                )));
            }
        }
        Ok(PseudoLikelihood {
            model,
            contexts,
            weights: sample.weights.clone(),
            slopes,
            max_edge: net.max_value(),
            cap,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.model.len()
    }

    pub fn n_dyads(&self) -> usize {
        self.contexts.len()
    }

    pub fn weight_total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn model(&self) -> &BoundModel<'a> {
        &self.model
    }

    fn coefficients(&self, theta: &[f64], row: usize) -> [f64; N_BASIS] {
        let k = self.n_terms();
        let s = &self.slopes[row * k..(row + 1) * k];
        let mut c = [0.0; N_BASIS];
        for (t, &b) in self.model.basis_columns().iter().enumerate() {
            if b == 0 {
                c[0] += theta[t] * s[t];
            } else {
                c[b] += theta[t];
            }
        }
        c
    }

    fn accumulate(
        &self,
        theta: &[f64],
        rows: std::ops::Range<usize>,
        level: Derivatives,
    ) -> Result<Objective> {
        let k = self.n_terms();
        let cols = self.model.basis_columns();
        let mut acc = Objective::zeros(k, level);
        let mut load = vec![0.0; k];
        for row in rows {
            let ctx = &self.contexts[row];
            let w = self.weights[row];
            let coef = self.coefficients(theta, row);
            let (lw, lse) = log_weights(&coef, ctx, &self.cap, self.max_edge, 0)?;
            acc.unpenalized += w * (lw[ctx.y as usize] - lse);
            if level == Derivatives::ValueOnly {
                continue;
            }
            let mut mean = [0.0; N_BASIS];
            let mut second = [[0.0; N_BASIS]; N_BASIS];
            for (u, &l) in lw.iter().enumerate() {
                let p = (l - lse).exp();
                if p == 0.0 {
                    continue;
                }
                let b = ctx.basis(u as u64);
                for a in 0..N_BASIS {
                    mean[a] += p * b[a];
                    if level == Derivatives::Hessian {
                        for c in a..N_BASIS {
                            second[a][c] += p * b[a] * b[c];
                        }
                    }
                }
            }
            let obs = ctx.basis(ctx.y);
            let s = &self.slopes[row * k..(row + 1) * k];
            for t in 0..k {
                let col = cols[t];
                load[t] = if col == 0 { s[t] } else { 1.0 };
                acc.gradient[t] += w * load[t] * (obs[col] - mean[col]);
            }
            if level == Derivatives::Hessian {
                for a in 0..k {
                    let ca = cols[a];
                    for b in a..k {
                        let cb = cols[b];
                        let (lo, hi) = if ca <= cb { (ca, cb) } else { (cb, ca) };
                        let cov = second[lo][hi] - mean[lo] * mean[hi];
                        acc.hessian[a * k + b] -= w * load[a] * load[b] * cov;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Penalised objective `sum_d w_d log p(y_d | rest) - lambda |theta|^2`.
    pub fn evaluate(
        &self,
        theta: &[f64],
        ridge_lambda: f64,
        level: Derivatives,
        exec: Execution,
    ) -> Result<Objective> {
        let k = self.n_terms();
        if theta.len() != k {
            return Err(Error::invalid(format!(
                "coefficient vector has length {}, model has {k} terms",
                theta.len()
            )));
        }
        if !(ridge_lambda >= 0.0) {
            return Err(Error::invalid("ridge lambda must be non-negative"));
        }
        let starts: Vec<usize> = (0..self.n_dyads()).step_by(DYAD_CHUNK).collect();
        let parts = exec.map_chunks(&starts, 1, |c| {
            let s = c[0];
            self.accumulate(theta, s..(s + DYAD_CHUNK).min(self.n_dyads()), level)
        });
        let mut total = Objective::zeros(k, level);
        for p in parts {
            total.add(&p?);
        }
        let norm2: f64 = theta.iter().map(|t| t * t).sum();
        total.value = total.unpenalized - ridge_lambda * norm2;
        for (g, t) in total.gradient.iter_mut().zip(theta) {
            *g -= 2.0 * ridge_lambda * t;
        }
        if level == Derivatives::Hessian {
            for a in 0..k {
                total.hessian[a * k + a] -= 2.0 * ridge_lambda;
                for b in 0..a {
                    total.hessian[a * k + b] = total.hessian[b * k + a];
                }
            }
        }
        Ok(total)
    }
}
