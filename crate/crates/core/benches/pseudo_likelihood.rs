use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use vtergm::estimator::{Derivatives, PseudoLikelihood};
use vtergm::flownet::{DYAD_LAGGED_LOG_FLOW, DYAD_LOG_DISTANCE, DYAD_POLITICAL, DYAD_SAME_STATE};
use vtergm::ingest::{synthetic_generate, SyntheticConfig};
use vtergm::statistics::BoundModel;
use vtergm::{fit_mple, CapPolicy, DyadSample, Execution, FitOptions, ModelSpec, TermSpec};

fn model() -> ModelSpec {
    ModelSpec::new(vec![
        TermSpec::sum(),
        TermSpec::nonzero(),
        TermSpec::node_out("log_population"),
        TermSpec::node_in("log_population"),
        TermSpec::dyad(DYAD_LOG_DISTANCE),
        TermSpec::dyad(DYAD_SAME_STATE),
        TermSpec::dyad(DYAD_POLITICAL),
        TermSpec::mutual_min(),
        TermSpec::waypoint_flow(),
        TermSpec::dyad(DYAD_LAGGED_LOG_FLOW),
    ])
    .unwrap()
}

const THETA: [f64; 10] = [-6.0, -0.5, 0.5, 0.5, -0.6, 0.5, -2.0, 0.05, -0.002, 0.3];

fn objective(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective_hessian");
    group.sample_size(20);
    for n in [100, 300] {
        let cfg = SyntheticConfig {
            n_nodes: n,
            ..Default::default()
        };
        let data = synthetic_generate(&cfg, &model(), &THETA, 1).unwrap();
        let sample = DyadSample::census(&data.current);
        let m = model();
        let bound = BoundModel::bind(&m, &data.nodes, &data.dyads).unwrap();
        let pl = PseudoLikelihood::new(bound, &data.current, &sample, CapPolicy::default()).unwrap();
        group.throughput(Throughput::Elements(sample.len() as u64));
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, n), &exec, |b, &exec| {
                b.iter(|| pl.evaluate(black_box(&THETA), 0.01, Derivatives::Hessian, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn full_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_census");
    group.sample_size(10);
    let cfg = SyntheticConfig {
        n_nodes: 200,
        ..Default::default()
    };
    let m = model();
    let data = synthetic_generate(&cfg, &m, &THETA, 2).unwrap();
    let sample = DyadSample::census(&data.current);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let opts = FitOptions {
            execution,
            ..Default::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| fit_mple(&m, &data.current, &data.nodes, &data.dyads, &sample, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, objective, full_fit);
criterion_main!(benches);
