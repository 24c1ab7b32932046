//! Acceptance gate: ten criteria, one PASS/FAIL line each, exit code 1 if any
//! criterion fails. Reference values are computed here by independent
//! oracles (brute force, closed forms, an IRLS solver, exact enumeration).

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use vtergm::estimator::{conditional_log_pmf, Derivatives};
use vtergm::flownet::{dyad_count, DYAD_LOG_DISTANCE, DYAD_POLITICAL, DYAD_SAME_STATE};
use vtergm::ingest::{synthetic_generate, SyntheticConfig};
use vtergm::sampler::{Chain, SimulationTarget};
use vtergm::statistics::{conditional_profile, mutual_min_stat, waypoint_flow_stat, BoundModel};
use vtergm::{
    adequacy_check, effect_multiplier, fit_mple, knockout_experiment, penalized_pseudo_loglik, stratified_dyad_sample,
    CapPolicy, ChainConfig, DyadCovariateSet, DyadMatrix, DyadSample, EffectKind, Execution, FitOptions, FlowNetwork,
    ModelSpec, NodeTable, Proposal, TermSpec,
};

const POISSON_TOL: f64 = 1e-12;
const GLM_TOL: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
const COVERAGE_MIN: f64 = 0.90;
const COVERAGE_SES: f64 = 2.0;
const TV_MAX: f64 = 0.02;
const TV_STEPS: u64 = 1_000_000;
const TV_TRUNC: usize = 6;
const ADEQUACY_MIN_CORR: f64 = 0.95;
const KNOCKOUT_MIN_AGREE: f64 = 0.95;
const EFFECT_TOL_PP: f64 = 0.05;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dense(net: &FlowNetwork) -> Vec<Vec<u64>> {
    let n = net.n_nodes();
    (0..n).map(|i| (0..n).map(|j| if i == j { 0 } else { net.get(i, j) }).collect()).collect()
}

fn brute_mutual(y: &[Vec<u64>]) -> u64 {
    let n = y.len();
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| y[i][j].min(y[j][i])).sum()
}

fn brute_waypoint(y: &[Vec<u64>]) -> u64 {
    let n = y.len();
    (0..n)
        .map(|i| {
            let out: u64 = y[i].iter().sum();
            let inn: u64 = (0..n).map(|k| y[k][i]).sum();
            out.min(inn)
        })
        .sum()
}

fn random_network(n: usize, p: f64, max: u64, rng: &mut ChaCha8Rng) -> FlowNetwork {
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                triples.push((i, j, rng.random_range(1..=max)));
            }
        }
    }
    FlowNetwork::from_indexed(n, triples).unwrap()
}

fn c1_statistic_oracles() -> Check {
    // Three-star fixtures: center 0 with six distinct neighbours, six events split
    // between inflow and outflow.
    for (inflow, outflow, expected) in [(3u64, 3u64, 3u64), (4, 2, 2), (5, 1, 1)] {
        let mut triples = Vec::new();
        for k in 0..inflow {
            triples.push((1 + k as usize, 0, 1));
        }
        for k in 0..outflow {
            triples.push((0, 1 + (inflow + k) as usize, 1));
        }
        let net = FlowNetwork::from_indexed(7, triples).unwrap();
        let got = waypoint_flow_stat(&net);
        ensure(got == expected, || format!("star in={inflow} out={outflow}: waypoint {got}, expected {expected}"))?;
    }
    let net = FlowNetwork::from_indexed(3, [(0, 1, 5), (1, 0, 5), (0, 2, 2)]).unwrap();
    ensure(mutual_min_stat(&net) == 5, || "mutual min {5,5,2} != 5".into())?;

    let model = ModelSpec::new(vec![TermSpec::mutual_min(), TermSpec::waypoint_flow()]).unwrap();
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(6));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let net = random_network(6, rng.random_range(0.1..0.9), 9, &mut rng);
        let mut y = dense(&net);
        ensure(mutual_min_stat(&net) == brute_mutual(&y), || format!("case {case}: mutual min"))?;
        ensure(waypoint_flow_stat(&net) == brute_waypoint(&y), || format!("case {case}: waypoint"))?;
        let (i, j) = (rng.random_range(0..6), rng.random_range(0..5));
        let j = if j >= i { j + 1 } else { j };
        let rows = conditional_profile(&model, &net, &nodes, &dyads, (i, j), 12).unwrap();
        for (v, row) in rows.iter().enumerate() {
            y[i][j] = v as u64;
            let want = [brute_mutual(&y) as f64, brute_waypoint(&y) as f64];
            ensure(row[..] == want, || format!("case {case}: profile row {v} at ({i},{j}): {row:?} vs {want:?}"))?;
        }
    }
    Ok("three-star fixtures give 3/2/1; 1000 random 6-node networks and profiles match brute force exactly".into())
}

fn c2_poisson_reduction() -> Check {
    let model = ModelSpec::new(vec![TermSpec::sum()]).unwrap();
    let net = FlowNetwork::from_indexed(4, [(0, 1, 3), (2, 1, 8), (3, 0, 1)]).unwrap();
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(4));
    let mut worst: f64 = 0.0;
    for lambda in [0.1f64, 1.0, 7.0] {
        for v in 0..=30u64 {
            let ln_fact: f64 = (1..=v).map(|k| (k as f64).ln()).sum();
            let exact = v as f64 * lambda.ln() - lambda - ln_fact;
            let got = conditional_log_pmf(&model, &[lambda.ln()], &net, &nodes, &dyads, (0, 1), v, &CapPolicy::default())
                .map_err(|e| e.to_string())?;
            worst = worst.max((got - exact).abs());
        }
    }
    ensure(worst < POISSON_TOL, || format!("max abs error {worst:.3e}"))?;
    Ok(format!("max abs error {worst:.2e} over 93 cases"))
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        x[r] = (b[r] - ((r + 1)..n).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
    }
    x
}

/// Poisson log-link regression by iteratively reweighted least squares.
fn irls_poisson(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut beta = vec![0.0; k];
    beta[0] = mean.ln();
    for _ in 0..100 {
        let mut xtwx = vec![vec![0.0; k]; k];
        let mut xtwz = vec![0.0; k];
        for (row, &yi) in x.iter().zip(y) {
            let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = eta.exp();
            let z = eta + (yi - mu) / mu;
            for a in 0..k {
                xtwz[a] += mu * row[a] * z;
                for b in 0..k {
                    xtwx[a][b] += mu * row[a] * row[b];
                }
            }
        }
        let next = solve(xtwx, xtwz);
        let delta = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        if delta < 1e-13 {
            break;
        }
    }
    beta
}

fn c3_glm_equivalence() -> Check {
    let n = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x1: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x2: Vec<f64> = (0..n * n).map(|_| f64::from(u8::from(rng.random_bool(0.3)))).collect();
    let truth = [0.4, -0.8, 0.5];
    let mut triples = Vec::new();
    let (mut design, mut response) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let row = vec![1.0, x1[i * n + j], x2[i * n + j]];
            let rate = (truth[0] + truth[1] * row[1] + truth[2] * row[2]).exp();
            let y = Poisson::new(rate).unwrap().sample(&mut rng) as u64;
            triples.push((i, j, y));
            design.push(row);
            response.push(y as f64);
        }
    }
    let net = FlowNetwork::from_indexed(n, triples).unwrap();
    let mut dyads = DyadCovariateSet::new(n);
    dyads.insert("x1", DyadMatrix::Dense { n, values: x1 }).unwrap();
    dyads.insert("x2", DyadMatrix::Dense { n, values: x2 }).unwrap();
    let model = ModelSpec::new(vec![TermSpec::sum(), TermSpec::dyad("x1"), TermSpec::dyad("x2")]).unwrap();
    let opts = FitOptions {
        ridge_lambda: 0.0,
        ..Default::default()
    };
    let fit = fit_mple(&model, &net, &NodeTable::default(), &dyads, &DyadSample::census(&net), &opts)
        .map_err(|e| e.to_string())?;
    let oracle = irls_poisson(&design, &response);
    let worst = fit.theta.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(fit.converged, || "fit did not converge".into())?;
    ensure(worst < GLM_TOL, || format!("theta {:?} vs IRLS {oracle:?}", fit.theta))?;
    Ok(format!("max |theta - IRLS| = {worst:.2e}"))
}

fn c4_gradient_check() -> Check {
    let model = ModelSpec::new(vec![
        TermSpec::sum(),
        TermSpec::nonzero(),
        TermSpec::mutual_min(),
        TermSpec::waypoint_flow(),
        TermSpec::dyad("x"),
    ])
    .unwrap();
    let k = model.len();
    let nodes = NodeTable::default();
    let mut worst: f64 = 0.0;
    for inst in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + inst);
        let n = 10;
        let net = random_network(n, 0.4, 12, &mut rng);
        let mut dyads = DyadCovariateSet::new(n);
        let x: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        dyads.insert("x", DyadMatrix::Dense { n, values: x }).unwrap();
        let sample = stratified_dyad_sample(&net, 50, inst).unwrap();
        let theta = [
            rng.random_range(0.0..1.5),
            rng.random_range(-1.0..0.5),
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.03..0.03),
            rng.random_range(-0.5..0.5),
        ];
        let eval = |t: &[f64], lvl| penalized_pseudo_loglik(&model, t, &net, &nodes, &dyads, &sample, 0.01, lvl).unwrap();
        let base = eval(&theta, Derivatives::Hessian);
        let rel = |an: f64, fd: f64| (an - fd).abs() / fd.abs().max(1.0);
        for a in 0..k {
            let (mut up, mut dn) = (theta, theta);
            up[a] += FD_STEP;
            dn[a] -= FD_STEP;
            let fd = (eval(&up, Derivatives::ValueOnly).value - eval(&dn, Derivatives::ValueOnly).value) / (2.0 * FD_STEP);
            worst = worst.max(rel(base.gradient[a], fd));
            let (gu, gd) = (eval(&up, Derivatives::Gradient).gradient, eval(&dn, Derivatives::Gradient).gradient);
            for b in 0..k {
                worst = worst.max(rel(base.hessian[b * k + a], (gu[b] - gd[b]) / (2.0 * FD_STEP)));
            }
        }
    }
    ensure(worst < FD_REL_TOL, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("worst relative error {worst:.2e} over 10 instances"))
}

fn c5_subsampling() -> Check {
    let n = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x1: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let x2: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let rate = (-2.6 + 0.8 * x1[i * n + j] - 1.0 * x2[i * n + j]).exp();
                triples.push((i, j, Poisson::new(rate).unwrap().sample(&mut rng) as u64));
            }
        }
    }
    let net = FlowNetwork::from_indexed(n, triples).unwrap();
    let mut dyads = DyadCovariateSet::new(n);
    dyads.insert("x1", DyadMatrix::Dense { n, values: x1 }).unwrap();
    dyads.insert("x2", DyadMatrix::Dense { n, values: x2 }).unwrap();
    let nodes = NodeTable::default();
    let model = ModelSpec::new(vec![TermSpec::sum(), TermSpec::nonzero(), TermSpec::dyad("x1"), TermSpec::dyad("x2")]).unwrap();
    let opts = FitOptions::default();
    let census = fit_mple(&model, &net, &nodes, &dyads, &DyadSample::census(&net), &opts).map_err(|e| e.to_string())?;
    let n_sample = dyad_count(n) / 5;
    let fits = Execution::Parallel.map(50, |r| {
        let s = stratified_dyad_sample(&net, n_sample, 5000 + r as u64).unwrap();
        fit_mple(&model, &net, &nodes, &dyads, &s, &opts).unwrap()
    });
    let mut covered = 0;
    let mut pairs = 0;
    for f in &fits {
        for k in 0..model.len() {
            pairs += 1;
            if let Some(se) = f.std_errors[k] {
                if (f.theta[k] - census.theta[k]).abs() <= COVERAGE_SES * se {
                    covered += 1;
                }
            }
        }
    }
    let rate = covered as f64 / pairs as f64;
    ensure(rate >= COVERAGE_MIN, || format!("coverage {covered}/{pairs} = {rate:.3}"))?;
    Ok(format!(
        "coverage {covered}/{pairs} = {rate:.3}; {} nonzero dyads, {n_sample} sampled",
        net.edge_count()
    ))
}

fn c6_sampler() -> Check {
    let model = ModelSpec::new(vec![TermSpec::sum(), TermSpec::mutual_min()]).unwrap();
    let theta = [0.2, 0.3];
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(2));
    let bound = BoundModel::bind(&model, &nodes, &dyads).unwrap();
    let target = SimulationTarget::new(&bound, &theta, 2, Execution::Sequential).unwrap();
    let t = TV_TRUNC + 1;
    let mut exact = vec![vec![0.0; t]; t];
    let mut z = 0.0;
    for a in 0..t {
        for b in 0..t {
            let lf = |v: usize| (1..=v).map(|k| (k as f64).ln()).sum::<f64>();
            exact[a][b] = (theta[0] * (a + b) as f64 + theta[1] * a.min(b) as f64 - lf(a) - lf(b)).exp();
            z += exact[a][b];
        }
    }
    let mut detail = Vec::new();
    for proposal in [Proposal::GeometricMixture, Proposal::UnitStep] {
        let mut chain = Chain::new(&target, FlowNetwork::empty(2), proposal, 6, 0);
        chain.run(10_000);
        let mut counts = vec![vec![0u64; t]; t];
        let mut outside = 0u64;
        for _ in 0..TV_STEPS {
            chain.step();
            let (a, b) = (chain.network().get(0, 1) as usize, chain.network().get(1, 0) as usize);
            if a < t && b < t {
                counts[a][b] += 1;
            } else {
                outside += 1;
            }
        }
        let mut tv = outside as f64 / TV_STEPS as f64;
        for a in 0..t {
            for b in 0..t {
                tv += (counts[a][b] as f64 / TV_STEPS as f64 - exact[a][b] / z).abs();
            }
        }
        tv *= 0.5;
        ensure(tv < TV_MAX, || format!("{proposal:?}: total variation {tv:.4}"))?;
        detail.push(format!("{proposal:?} TV {tv:.4}"));
    }
    Ok(detail.join(", "))
}

fn self_fit_model() -> ModelSpec {
    ModelSpec::new(vec![
        TermSpec::sum(),
        TermSpec::node_out("log_population"),
        TermSpec::node_in("log_population"),
        TermSpec::dyad(DYAD_LOG_DISTANCE),
        TermSpec::dyad(DYAD_SAME_STATE),
        TermSpec::dyad(DYAD_POLITICAL),
        TermSpec::mutual_min(),
        TermSpec::lagged_log_flow(),
    ])
    .unwrap()
}

const SELF_FIT_THETA: [f64; 8] = [-6.5, 0.5, 0.5, -0.6, 0.8, -2.0, 0.05, 0.3];

fn c7_self_fit_adequacy() -> Check {
    let model = self_fit_model();
    let cfg = SyntheticConfig {
        n_nodes: 100,
        ..Default::default()
    };
    let data = synthetic_generate(&cfg, &model, &SELF_FIT_THETA, 7).map_err(|e| e.to_string())?;
    let fit = fit_mple(&model, &data.current, &data.nodes, &data.dyads, &DyadSample::census(&data.current), &FitOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(fit.converged, || "self-fit did not converge".into())?;
    let chain = ChainConfig {
        chains: 4,
        ..ChainConfig::for_dyads(dyad_count(100), 100, 70)
    };
    let report = adequacy_check(&model, &fit.theta, &data.nodes, &data.dyads, &data.current, &chain).map_err(|e| e.to_string())?;
    let (r_in, r_out) = (report.in_volume.correlation, report.out_volume.correlation);
    ensure(r_in >= ADEQUACY_MIN_CORR && r_out >= ADEQUACY_MIN_CORR, || {
        format!("in-volume r = {r_in:.4}, out-volume r = {r_out:.4}")
    })?;
    Ok(format!(
        "in-volume r = {r_in:.4}, out-volume r = {r_out:.4}; total flow {}, {} + {} nodes outside 95% band",
        data.current.total_flow(),
        report.in_volume.n_outside,
        report.out_volume.n_outside
    ))
}

fn c8_knockout() -> Check {
    let model = ModelSpec::new(vec![
        TermSpec::sum(),
        TermSpec::dyad(DYAD_LOG_DISTANCE),
        TermSpec::dyad(DYAD_POLITICAL),
        TermSpec::mutual_min(),
    ])
    .unwrap();
    let cfg = SyntheticConfig {
        n_nodes: 50,
        ..Default::default()
    };
    let data = synthetic_generate(&cfg, &model, &[3.0, -0.5, -2.0, 0.05], 8).map_err(|e| e.to_string())?;
    let fit = fit_mple(&model, &data.current, &data.nodes, &data.dyads, &DyadSample::census(&data.current), &FitOptions::default())
        .map_err(|e| e.to_string())?;
    let k = model.index_of(DYAD_POLITICAL).unwrap();
    ensure(fit.theta[k] < 0.0, || format!("fitted political coefficient {} is not negative", fit.theta[k]))?;
    let label = [DYAD_POLITICAL.to_string()];
    let base = ChainConfig::for_dyads(dyad_count(50), 40, 0);
    let reports = Execution::Parallel.map(20, |r| {
        let cfg = ChainConfig {
            seed: 800 + r as u64,
            execution: Execution::Sequential,
            ..base.clone()
        };
        knockout_experiment(&model, &fit.theta, &data.nodes, &data.dyads, &data.current, &label, &cfg).unwrap()
    });
    let up = reports.iter().filter(|r| r.difference > 0.0).count();
    let share = up as f64 / reports.len() as f64;
    ensure(share >= KNOCKOUT_MIN_AGREE, || format!("knockout increased flow in {up}/20 pairs"))?;
    let none = knockout_experiment(&model, &fit.theta, &data.nodes, &data.dyads, &data.current, &[], &base).map_err(|e| e.to_string())?;
    ensure(none.baseline == none.counterfactual && none.difference == 0.0, || format!("empty knockout changed totals: {none:?}"))?;
    let mean_pct = reports.iter().map(|r| r.percent_difference).sum::<f64>() / reports.len() as f64;
    Ok(format!(
        "political coefficient {:.3}; increase in {up}/20 pairs (mean {mean_pct:+.1}%); empty knockout identical",
        fit.theta[k]
    ))
}

fn c9_effect_sizes() -> Check {
    let cases = [
        (-0.231, 0.10, EffectKind::AdditivePp, -2.3),
        (0.350, 0.10, EffectKind::Relative, 3.4),
        (0.374, 0.10, EffectKind::Relative, 3.6),
        (-0.561, 0.10, EffectKind::Relative, -5.2),
    ];
    let mut got = Vec::new();
    for (coef, delta, kind, reported) in cases {
        let pct = effect_multiplier(coef, delta, kind).map_err(|e| e.to_string())?;
        ensure((pct - reported).abs() <= EFFECT_TOL_PP, || format!("({coef}, {delta}): {pct:.3}% vs {reported}%"))?;
        got.push(format!("{pct:+.2}%"));
    }
    Ok(got.join(", "))
}

fn c10_ridge() -> Check {
    let model = self_fit_model();
    let cfg = SyntheticConfig {
        n_nodes: 60,
        ..Default::default()
    };
    let data = synthetic_generate(&cfg, &model, &SELF_FIT_THETA, 10).map_err(|e| e.to_string())?;
    let sample = stratified_dyad_sample(&data.current, 2000, 10).map_err(|e| e.to_string())?;
    let mut norms = Vec::new();
    for lambda in [0.0, 0.01, 0.1, 1.0] {
        let opts = FitOptions {
            ridge_lambda: lambda,
            ..Default::default()
        };
        let fit = fit_mple(&model, &data.current, &data.nodes, &data.dyads, &sample, &opts).map_err(|e| e.to_string())?;
        ensure(fit.converged, || format!("lambda {lambda}: no convergence"))?;
        norms.push(fit.theta.iter().map(|t| t * t).sum::<f64>().sqrt());
    }
    ensure(norms.windows(2).all(|w| w[1] <= w[0]), || format!("norms {norms:?}"))?;
    Ok(format!("|theta| = {norms:.6?} for lambda 0, 0.01, 0.1, 1"))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 10] = [
        ("statistic oracles", 1, c1_statistic_oracles),
        ("Poisson reduction", 1, c2_poisson_reduction),
        ("GLM equivalence", 30, c3_glm_equivalence),
        ("gradient check", 30, c4_gradient_check),
        ("subsampling consistency", 600, c5_subsampling),
        ("sampler correctness", 120, c6_sampler),
        ("self-fit adequacy", 600, c7_self_fit_adequacy),
        ("knockout monotonicity", 600, c8_knockout),
        ("effect-multiplier arithmetic", 1, c9_effect_sizes),
        ("ridge shrinkage", 120, c10_ridge),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > Duration::from_secs(*budget) => Err(format!("over time budget; {d}")),
            o => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag} {name} [{:.2}s / {budget}s]: {detail}",
            k + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
