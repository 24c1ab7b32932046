use super::*;
use crate::flownet::dyad_count;
use crate::statistics::TermSpec;

fn sum_model() -> ModelSpec {
    ModelSpec::new(vec![TermSpec::sum()]).unwrap()
}

fn config(n: usize, n_networks: usize, seed: u64) -> ChainConfig {
    ChainConfig {
        execution: Execution::Sequential,
        ..ChainConfig::for_dyads(dyad_count(n), n_networks, seed)
    }
}

#[test]
fn poisson_target_mean() {
    let n = 6;
    let d = dyad_count(n) as f64;
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(n));
    let sim = mcmc_simulate(&sum_model(), &[2f64.ln()], &nodes, &dyads, &FlowNetwork::empty(n), &config(n, 1500, 3)).unwrap();
    let per_dyad: Vec<f64> = sim.networks.iter().map(|g| g.total_flow() as f64 / d).collect();
    let (mean, se) = batch_means(&per_dyad);
    assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean} se {se}");
    // Independent Poisson marginals: variance close to the mean.
    let values: Vec<f64> = sim
        .networks
        .iter()
        .flat_map(|g| (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| g.get(i, j) as f64)))
        .collect();
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    assert!((v / m - 1.0).abs() < 0.1, "dispersion {}", v / m);
    assert!(sim.diagnostics.acceptance_rate() > 0.2);
}

#[test]
fn two_node_chain_matches_enumeration() {
    let model = ModelSpec::new(vec![TermSpec::sum(), TermSpec::mutual_min()]).unwrap();
    let theta = [0.1, 0.3];
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(2));
    let bound = BoundModel::bind(&model, &nodes, &dyads).unwrap();
    let target = SimulationTarget::new(&bound, &theta, 2, Execution::Sequential).unwrap();
    let weight = |a: u64, b: u64| {
        (theta[0] * (a + b) as f64 + theta[1] * a.min(b) as f64
            - crate::statistics::ln_factorial(a)
            - crate::statistics::ln_factorial(b))
        .exp()
    };
    let mut exact = [[0.0; 7]; 7];
    let mut z = 0.0;
    for a in 0..7 {
        for b in 0..7 {
            exact[a][b] = weight(a as u64, b as u64);
            z += exact[a][b];
        }
    }
    for proposal in [Proposal::UnitStep, Proposal::GeometricMixture] {
        let mut chain = Chain::new(&target, FlowNetwork::empty(2), proposal, 11, 0);
        chain.run(1000);
        let steps = 200_000;
        let mut counts = [[0u64; 7]; 7];
        let mut outside = 0u64;
        for _ in 0..steps {
            chain.step();
            let (a, b) = (chain.network().get(0, 1), chain.network().get(1, 0));
            if a < 7 && b < 7 {
                counts[a as usize][b as usize] += 1;
            } else {
                outside += 1;
            }
        }
        let mut tv = outside as f64 / steps as f64;
        for a in 0..7 {
            for b in 0..7 {
                tv += (counts[a][b] as f64 / steps as f64 - exact[a][b] / z).abs();
            }
        }
        tv *= 0.5;
        assert!(tv < 0.03, "{proposal:?}: tv {tv}");
    }
}

#[test]
fn seeded_chains_are_deterministic() {
    let n = 5;
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(n));
    let model = ModelSpec::new(vec![TermSpec::sum(), TermSpec::nonzero(), TermSpec::waypoint_flow()]).unwrap();
    let theta = [0.4, -0.5, 0.05];
    let mut cfg = config(n, 20, 99);
    cfg.chains = 3;
    let a = mcmc_simulate(&model, &theta, &nodes, &dyads, &FlowNetwork::empty(n), &cfg).unwrap();
    let b = mcmc_simulate(&model, &theta, &nodes, &dyads, &FlowNetwork::empty(n), &cfg).unwrap();
    assert_eq!(a.networks, b.networks);
    assert_eq!(a.diagnostics, b.diagnostics);
    cfg.execution = Execution::Parallel;
    let c = mcmc_simulate(&model, &theta, &nodes, &dyads, &FlowNetwork::empty(n), &cfg).unwrap();
    assert_eq!(a.networks, c.networks);
    cfg.seed = 100;
    let d = mcmc_simulate(&model, &theta, &nodes, &dyads, &FlowNetwork::empty(n), &cfg).unwrap();
    assert_ne!(a.networks, d.networks);
}

#[test]
fn expected_total_is_poisson_mean() {
    let n = 5;
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(n));
    let d = dyad_count(n) as f64;
    let est = expected_total_flow(&sum_model(), &[3f64.ln()], &nodes, &dyads, &FlowNetwork::empty(n), &config(n, 1000, 5)).unwrap();
    assert!((est.mean - 3.0 * d).abs() < 3.0 * est.mc_se, "{est:?}");

    let low = expected_total_flow(&sum_model(), &[-50.0], &nodes, &dyads, &FlowNetwork::empty(n), &config(n, 50, 5)).unwrap();
    assert_eq!(low.mean, 0.0);
}

#[test]
fn mc_se_scales_with_root_n() {
    let n = 5;
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(n));
    let se = |k: usize| -> f64 {
        // Average over seeds to steady the ratio.
        (0..8)
            .map(|s| {
                expected_total_flow(&sum_model(), &[1.0], &nodes, &dyads, &FlowNetwork::empty(n), &config(n, k, 40 + s))
                    .unwrap()
                    .mc_se
            })
            .sum::<f64>()
            / 8.0
    };
    let ratio = se(400) / se(800);
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.3, "ratio {ratio}");
}

#[test]
fn knockouts() {
    let n = 5;
    let nodes = NodeTable::default();
    let mut dyads = DyadCovariateSet::new(n);
    dyads
        .insert("x", crate::flownet::DyadMatrix::dense_from_fn(n, |i, j| ((i + 2 * j) % 3) as f64))
        .unwrap();
    let model = ModelSpec::new(vec![TermSpec::sum(), TermSpec::dyad("x")]).unwrap();
    let init = FlowNetwork::empty(n);
    let cfg = config(n, 200, 8);

    let none = knockout_experiment(&model, &[0.5, -0.4], &nodes, &dyads, &init, &[], &cfg).unwrap();
    assert_eq!(none.baseline, none.counterfactual);
    assert_eq!(none.percent_difference, 0.0);

    let zero = knockout_experiment(&model, &[0.5, 0.0], &nodes, &dyads, &init, &["x".into()], &cfg).unwrap();
    assert_ne!(zero.counterfactual_seed, zero.baseline_seed);
    assert!(zero.difference.abs() < 3.0 * zero.difference_se, "{zero:?}");

    let neg = knockout_experiment(&model, &[0.5, -0.4], &nodes, &dyads, &init, &["x".into()], &cfg).unwrap();
    assert!(neg.difference > 0.0);
    assert!((neg.percent_difference - 100.0 * neg.difference / neg.baseline.mean).abs() < 1e-9);

    let err = knockout_experiment(&model, &[0.5, -0.4], &nodes, &dyads, &init, &["nope".into()], &cfg);
    assert!(matches!(err, Err(Error::UnknownLabel(_))));
}

#[test]
fn invalid_chain_config() {
    let n = 3;
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(n));
    let mut cfg = config(n, 10, 1);
    cfg.thin = 0;
    assert!(mcmc_simulate(&sum_model(), &[0.0], &nodes, &dyads, &FlowNetwork::empty(n), &cfg).is_err());
    let cfg = config(n, 10, 1);
    assert!(mcmc_simulate(&sum_model(), &[0.0, 1.0], &nodes, &dyads, &FlowNetwork::empty(n), &cfg).is_err());
}

#[test]
fn thin_tuning_finds_a_lag() {
    let n = 4;
    let (nodes, dyads) = (NodeTable::default(), DyadCovariateSet::new(n));
    let thin = tune_thin(&sum_model(), &[1.0], &nodes, &dyads, &FlowNetwork::empty(n), 500, 12, 20, 2).unwrap();
    assert!(thin.is_some_and(|t| t % 12 == 0));
}
