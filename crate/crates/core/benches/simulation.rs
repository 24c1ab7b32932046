use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vtergm::flownet::{dyad_count, DYAD_LOG_DISTANCE, DYAD_POLITICAL};
use vtergm::ingest::{synthetic_generate, SyntheticConfig};
use vtergm::sampler::mcmc_simulate;
use vtergm::{adequacy_check, ChainConfig, Execution, ModelSpec, TermSpec};

fn model() -> ModelSpec {
    ModelSpec::new(vec![
        TermSpec::sum(),
        TermSpec::node_out("log_population"),
        TermSpec::node_in("log_population"),
        TermSpec::dyad(DYAD_LOG_DISTANCE),
        TermSpec::dyad(DYAD_POLITICAL),
        TermSpec::mutual_min(),
    ])
    .unwrap()
}

const THETA: [f64; 6] = [-6.0, 0.5, 0.5, -0.6, -2.0, 0.05];

fn chains(c: &mut Criterion) {
    let m = model();
    let cfg = SyntheticConfig {
        n_nodes: 100,
        ..Default::default()
    };
    let data = synthetic_generate(&cfg, &m, &THETA, 3).unwrap();
    let d = dyad_count(100) as u64;
    let mut group = c.benchmark_group("mcmc_chains");
    group.sample_size(10);
    for n_chains in [1usize, 4, 8] {
        for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let chain = ChainConfig {
                burn_in: 2 * d,
                thin: d,
                n_networks: 2 * n_chains,
                chains: n_chains,
                execution,
                ..ChainConfig::for_dyads(d as usize, 1, 9)
            };
            group.bench_with_input(BenchmarkId::new(name, n_chains), &chain, |b, chain| {
                b.iter(|| mcmc_simulate(&m, &THETA, &data.nodes, &data.dyads, &data.current, chain).unwrap())
            });
        }
    }
    group.finish();
}

fn adequacy(c: &mut Criterion) {
    let m = model();
    let cfg = SyntheticConfig {
        n_nodes: 60,
        ..Default::default()
    };
    let data = synthetic_generate(&cfg, &m, &THETA, 4).unwrap();
    let mut group = c.benchmark_group("adequacy_100_networks");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let chain = ChainConfig {
            chains: 4,
            execution,
            ..ChainConfig::for_dyads(dyad_count(60), 100, 5)
        };
        group.bench_function(name, |b| {
            b.iter(|| adequacy_check(&m, &THETA, &data.nodes, &data.dyads, &data.current, &chain).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, chains, adequacy);
criterion_main!(benches);
