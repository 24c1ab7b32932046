//! Damped Newton maximisation of the penalised pseudo-log-likelihood.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flownet::{DyadCovariateSet, FlowNetwork, NodeTable};
use crate::statistics::{BoundModel, ModelSpec, TermKind};

use super::objective::{CapPolicy, Derivatives, Objective, PseudoLikelihood};
use super::sample::{DyadSample, SampleMeta};

/// Label attached to reported standard errors.
pub const SE_KIND: &str = "pseudo-likelihood SE (inverse penalized Hessian, no sandwich or design correction)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub ridge_lambda: f64,
    /// Convergence threshold on the max-norm of the penalised gradient.
    pub tol: f64,
    pub max_iter: usize,
    pub cap: CapPolicy,
    pub execution: Execution,
    pub theta_init: Option<Vec<f64>>,
    /// Abort when `|theta|` exceeds this.
    pub max_theta_norm: f64,
    /// `n` in the BIC penalty; defaults to the weighted dyad total.
    pub effective_n: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ridge_lambda: 0.01,
            tol: 1e-6,
            max_iter: 100,
            cap: CapPolicy::default(),
            execution: Execution::default(),
            theta_init: None,
            max_theta_norm: 1e4,
            effective_n: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelSpec,
    pub labels: Vec<String>,
    pub theta: Vec<f64>,
    /// `None` where the penalised Hessian could not be inverted.
    pub std_errors: Vec<Option<f64>>,
    pub se_kind: String,
    pub penalized_pll: f64,
    pub unpenalized_pll: f64,
    pub pseudo_bic: f64,
    pub effective_n: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    pub ridge_lambda: f64,
    pub sample: SampleMeta,
    pub diagnostics: Vec<String>,
}

impl FitResult {
    /// Estimate and SE by term label.
    pub fn coefficient(&self, label: &str) -> Option<(f64, Option<f64>)> {
        let k = self.labels.iter().position(|l| l == label)?;
        Some((self.theta[k], self.std_errors[k]))
    }

    /// Coefficient table: `term,estimate,sig,se,z,p_value`.
    pub fn coefficient_csv(&self) -> String {
        use statrs::distribution::{ContinuousCDF, Normal};
        let normal = Normal::standard();
        let mut out = String::from("term,estimate,sig,se,z,p_value\n");
        for (k, label) in self.labels.iter().enumerate() {
            let est = self.theta[k];
            match self.std_errors[k] {
                Some(se) if se > 0.0 => {
                    let z = est / se;
                    let p = 2.0 * (1.0 - normal.cdf(z.abs()));
                    let sig = if p < 0.001 {
                        "***"
                    } else if p < 0.01 {
                        "**"
                    } else if p < 0.05 {
                        "*"
                    } else {
                        ""
                    };
                    out.push_str(&format!("{label},{est:.6},{sig},{se:.6},{z:.4},{p:.3e}\n"));
                }
                _ => out.push_str(&format!("{label},{est:.6},,,,\n")),
            }
        }
        out
    }
}

/// `-2 * unpenalised pseudo-log-likelihood + k * ln(n)`.
pub fn pseudo_bic(fit: &FitResult, effective_n: Option<f64>) -> f64 {
    let n = effective_n.unwrap_or(fit.sample.weight_total);
    -2.0 * fit.unpenalized_pll + fit.theta.len() as f64 * n.ln()
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn neg_hessian(obj: &Objective, k: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(k, k, &obj.hessian).map(|x| -x)
}

fn condition_report(m: &DMatrix<f64>) -> String {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!(
        "negative Hessian not positive definite: eigenvalues in [{lo:.3e}, {hi:.3e}], condition {:.3e}",
        if lo > 0.0 { hi / lo } else { f64::INFINITY }
    )
}

/// Newton ascent with Armijo step-halving; falls back to a scaled gradient
/// step when the negative Hessian is not positive definite.
pub fn fit_mple(
    model: &ModelSpec,
    net: &FlowNetwork,
    nodes: &NodeTable,
    dyads: &DyadCovariateSet,
    sample: &DyadSample,
    options: &FitOptions,
) -> Result<FitResult> {
    let bound = BoundModel::bind(model, nodes, dyads)?;
    let pl = PseudoLikelihood::new(bound, net, sample, options.cap)?;
    let k = model.len();
    let lambda = options.ridge_lambda;
    let exec = options.execution;

    let mut theta = match &options.theta_init {
        Some(t) if t.len() == k => t.clone(),
        Some(t) => {
            return Err(Error::invalid(format!(
                "initial coefficients have length {}, model has {k} terms",
                t.len()
            )))
        }
        None => {
            let mut t = vec![0.0; k];
            if let Some(s) = model.terms.iter().position(|t| t.kind == TermKind::Sum) {
                let (wy, w) = sample
                    .dyads
                    .iter()
                    .zip(&sample.weights)
                    .fold((0.0, 0.0), |(a, b), (&(i, j), &w)| {
                        (a + w * net.get(i as usize, j as usize) as f64, b + w)
                    });
                if wy > 0.0 {
                    t[s] = (wy / w).ln();
                }
            }
            t
        }
    };

    let mut diagnostics = Vec::new();
    let mut obj = pl.evaluate(&theta, lambda, Derivatives::Hessian, exec)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        if max_abs(&obj.gradient) < options.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let g = DVector::from_column_slice(&obj.gradient);
        let nh = neg_hessian(&obj, k);
        let (dir, newton) = match nh.clone().cholesky() {
            Some(ch) => (ch.solve(&g), true),
            None => {
                let scale = nh.diagonal().iter().copied().fold(0.0, f64::max);
                let scale = if scale > 0.0 { scale } else { g.norm().max(1.0) };
                (&g / scale, false)
            }
        };
        let slope = g.dot(&dir);
        let mut step = 1.0;
        let mut accepted = None;
        // Inside the quadratic region the predicted gain is below the
        // resolution of the objective, so the line search cannot judge it.
        if newton && slope < 1e-9 * obj.value.abs().max(1.0) {
            accepted = Some(theta.iter().zip(dir.iter()).map(|(t, d)| t + d).collect());
        }
        for _ in 0..if accepted.is_some() { 0 } else { 60 } {
            let cand: Vec<f64> = theta.iter().zip(dir.iter()).map(|(t, d)| t + step * d).collect();
            match pl.evaluate(&cand, lambda, Derivatives::ValueOnly, exec) {
                Ok(v) if v.value >= obj.value + 1e-4 * step * slope => {
                    accepted = Some(cand);
                    break;
                }
                Ok(_) | Err(Error::Numerical(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some(next) = accepted else {
            if newton && slope < 1e-10 * obj.value.abs().max(1.0) {
                converged = true;
                diagnostics.push(format!(
                    "stopped at the floating-point floor: Newton decrement {slope:.3e}, gradient max-norm {:.3e}",
                    max_abs(&obj.gradient)
                ));
            } else {
                diagnostics.push("line search failed to improve the objective".into());
            }
            break;
        };
        if next == theta {
            converged = newton;
            diagnostics.push(format!(
                "stopped at the floating-point floor: gradient max-norm {:.3e}",
                max_abs(&obj.gradient)
            ));
            break;
        }
        theta = next;
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        if !(norm <= options.max_theta_norm) {
            return Err(Error::Numerical(format!(
                "coefficients diverged at iteration {iterations}: |theta| = {norm:.3e}"
            )));
        }
        obj = pl.evaluate(&theta, lambda, Derivatives::Hessian, exec)?;
        if !newton {
            diagnostics.push(format!(
                "iteration {iterations}: indefinite Hessian, took a gradient step"
            ));
        }
    }
    if !converged && max_abs(&obj.gradient) < options.tol {
        converged = true;
    }
    if !converged && iterations >= options.max_iter {
        diagnostics.push(format!("reached max_iter = {}", options.max_iter));
    }

    let nh = neg_hessian(&obj, k);
    let std_errors = match nh.clone().cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            (0..k).map(|t| Some(inv[(t, t)].max(0.0).sqrt())).collect()
        }
        None => {
            converged = false;
            diagnostics.push(condition_report(&nh));
            vec![None; k]
        }
    };

    let sample_meta = sample.meta();
    let effective_n = options.effective_n.unwrap_or(sample_meta.weight_total);
    let mut fit = FitResult {
        model: model.clone(),
        labels: model.labels(),
        theta,
        std_errors,
        se_kind: SE_KIND.into(),
        penalized_pll: obj.value,
        unpenalized_pll: obj.unpenalized,
        pseudo_bic: f64::NAN,
        effective_n,
        converged,
        iterations,
        gradient_max_norm: max_abs(&obj.gradient),
        ridge_lambda: lambda,
        sample: sample_meta,
        diagnostics,
    };
    fit.pseudo_bic = pseudo_bic(&fit, Some(effective_n));
    Ok(fit)
}
