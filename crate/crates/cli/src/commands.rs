use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use vtergm::flownet::{dyad_count, FlowRecord, SummaryReport};
use vtergm::ingest::{self, synthetic_generate, DistanceTable};
use vtergm::statistics::BoundModel;
use vtergm::{
    adequacy_check, fit_mple, knockout_experiment, stratified_dyad_sample, ChainConfig, DyadCovariateSet, DyadSample,
    Execution, FitOptions, FitResult, FlowNetwork, NodeIds, NodeTable,
};

use crate::config::{default_synth_model, RunConfig};
use crate::manifest::{config_hash, write_json, Manifest, RunLog, SeedSource, Seeds};
use crate::{ChainArgs, Cli, CliError, Command, DataArgs, EXIT_NOT_CONVERGED};

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    CliError::Validation(msg.into()).into()
}

struct Run {
    command: &'static str,
    cfg: RunConfig,
    out: PathBuf,
    seeds: Seeds,
    exec: Execution,
    outputs: Vec<PathBuf>,
    log: RunLog,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(PathBuf::from(name));
        self.out.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let p = self.path(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let p = self.path(name);
        write_json(&p, value)
    }

    fn finish(mut self, status: &str) -> anyhow::Result<()> {
        let cfg_path = self.out.join("run_config.json");
        write_json(&cfg_path, &self.cfg)?;
        self.outputs.push("run_config.json".into());
        let m = Manifest {
            command: self.command,
            status,
            library_version: vtergm::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_hash(&self.cfg),
            seeds: &self.seeds,
            execution: self.exec,
            threads: self.cfg.threads,
            outputs: &self.outputs,
        };
        write_json(&self.out.join("manifest.json"), &m)?;
        self.log.line(&format!("{} finished: {status}", self.command));
        Ok(())
    }

    fn chain(&mut self, n_nodes: usize) -> ChainConfig {
        let c = &self.cfg.chain;
        let d = dyad_count(n_nodes).max(1) as u64;
        let (burn_in, thin, n_networks, proposal, chains) =
            (c.burn_in.unwrap_or(10 * d), c.thin.unwrap_or(d), c.n_networks, c.proposal, c.chains);
        ChainConfig {
            burn_in,
            thin,
            n_networks,
            proposal,
            seed: self.seeds.derive("chain"),
            chains,
            execution: self.exec,
        }
    }
}

fn apply_data(cfg: &mut RunConfig, d: &DataArgs) {
    let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
        if v.is_some() {
            slot.clone_from(v);
        }
    };
    set(&mut cfg.inputs.flows, &d.flows);
    set(&mut cfg.inputs.lagged_flows, &d.lagged_flows);
    set(&mut cfg.inputs.nodes, &d.nodes);
    set(&mut cfg.inputs.distances, &d.distances);
}

fn apply_chain(cfg: &mut RunConfig, c: &ChainArgs) {
    if let Some(v) = c.n_networks {
        cfg.chain.n_networks = v;
    }
    if c.burn_in.is_some() {
        cfg.chain.burn_in = c.burn_in;
    }
    if c.thin.is_some() {
        cfg.chain.thin = c.thin;
    }
    if let Some(v) = c.chains {
        cfg.chain.chains = v;
    }
}

fn apply_flags(cfg: &mut RunConfig, cli: &Cli) {
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.out.is_some() {
        cfg.out.clone_from(&cli.out);
    }
    match &cli.command {
        Command::Summarize { data } | Command::Dissim { data } => apply_data(cfg, data),
        Command::Fit {
            data,
            sample_size,
            ridge_lambda,
            max_iter,
        } => {
            apply_data(cfg, data);
            if sample_size.is_some() {
                cfg.estimator.sample_size = *sample_size;
            }
            if let Some(v) = ridge_lambda {
                cfg.estimator.ridge_lambda = *v;
            }
            if let Some(v) = max_iter {
                cfg.estimator.max_iter = *v;
            }
        }
        Command::Gof { data, fit, chain } | Command::Simulate { data, fit, chain } => {
            apply_data(cfg, data);
            apply_chain(cfg, chain);
            if fit.is_some() {
                cfg.inputs.fit.clone_from(fit);
            }
        }
        Command::Knockout {
            data,
            fit,
            zero,
            chain,
        } => {
            apply_data(cfg, data);
            apply_chain(cfg, chain);
            if fit.is_some() {
                cfg.inputs.fit.clone_from(fit);
            }
            if !zero.is_empty() {
                cfg.knockout.zero_labels.clone_from(zero);
            }
        }
        Command::Synth { n_nodes } => {
            if let Some(n) = n_nodes {
                cfg.synth.generator.n_nodes = *n;
            }
        }
    }
}

fn execution(threads: Option<usize>) -> anyhow::Result<Execution> {
    match threads {
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            vtergm::exec::init_threads(n)?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    let (mut cfg, seed_source) = match &cli.config {
        Some(path) => {
            let mut cfg = RunConfig::load(path)?;
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.resolve_inputs(base);
            if let Some(out) = &mut cfg.out {
                if out.is_relative() {
                    *out = base.join(&*out);
                }
            }
            (cfg, SeedSource::Config)
        }
        None => (RunConfig::default(), SeedSource::Config),
    };
    let (root, source) = match (cli.seed, cfg.seed) {
        (Some(s), _) => (Some(s), SeedSource::Flag),
        (None, s) => (s, seed_source),
    };
    apply_flags(&mut cfg, &cli);
    cfg.validate()?;
    let seeds = Seeds::new(root, source);
    cfg.seed = Some(seeds.root);
    let exec = execution(cfg.threads)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("vtergm_out"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let command = match cli.command {
        Command::Summarize { .. } => "summarize",
        Command::Dissim { .. } => "dissim",
        Command::Fit { .. } => "fit",
        Command::Gof { .. } => "gof",
        Command::Simulate { .. } => "simulate",
        Command::Knockout { .. } => "knockout",
        Command::Synth { .. } => "synth",
    };
    let log = RunLog::new(&out);
    log.line(&format!("{command} started, root seed {}", seeds.root));
    let mut run = Run {
        command,
        cfg,
        out,
        seeds,
        exec,
        outputs: Vec::new(),
        log,
    };
    let result = match command {
        "summarize" => summarize(&mut run),
        "dissim" => dissim(&mut run),
        "fit" => fit(&mut run),
        "gof" => gof(&mut run),
        "simulate" => simulate(&mut run),
        "knockout" => knockout(&mut run),
        _ => synth(&mut run),
    };
    match result {
        Ok(code) => {
            run.finish(if code == 0 { "ok" } else { "not_converged" })?;
            Ok(code)
        }
        Err(e) => {
            run.log.line(&format!("{command} failed: {e:#}"));
            Err(e)
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str, command: &str) -> anyhow::Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| invalid(format!("{command} needs inputs.{what} (or --{})", what.replace('_', "-"))))
}

struct Data {
    ids: NodeIds,
    nodes: NodeTable,
    current: Option<FlowNetwork>,
    dyads: DyadCovariateSet,
}

fn network(path: &Path, ids: &NodeIds, label: &str) -> anyhow::Result<FlowNetwork> {
    let records = ingest::load_flows(path)?;
    Ok(FlowNetwork::build(ids, &records)
        .with_context(|| format!("{}", path.display()))?
        .with_label(label))
}

fn load_data(run: &Run, need_flows: bool) -> anyhow::Result<Data> {
    let inputs = &run.cfg.inputs;
    let (ids, nodes) = ingest::load_nodes(required(&inputs.nodes, "nodes", run.command)?)?;
    let current = match &inputs.flows {
        Some(p) => Some(network(p, &ids, "current")?),
        None if need_flows => {
            required(&None, "flows", run.command)?;
            None
        }
        None => None,
    };
    let lagged = inputs.lagged_flows.as_deref().map(|p| network(p, &ids, "lagged")).transpose()?;
    let distances: Option<DistanceTable> =
        inputs.distances.as_deref().map(|p| ingest::load_distances(p, &ids)).transpose()?;
    let dyads = ingest::build_dyad_covariates(&nodes, distances.as_ref(), lagged.as_ref())?;
    Ok(Data {
        ids,
        nodes,
        current,
        dyads,
    })
}

fn load_fit(run: &Run) -> anyhow::Result<FitResult> {
    let path = required(&run.cfg.inputs.fit, "fit", run.command)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut fit: FitResult =
        serde_json::from_str(&text).with_context(|| format!("parsing fit {}", path.display()))?;
    fit.model
        .normalize()
        .with_context(|| format!("model in {}", path.display()))?;
    if fit.theta.len() != fit.model.len() {
        return Err(invalid(format!(
            "{}: {} coefficients for {} terms",
            path.display(),
            fit.theta.len(),
            fit.model.len()
        )));
    }
    Ok(fit)
}

fn summary_csv(rows: &[SummaryReport]) -> String {
    let mut s = String::from(
        "period,vertices,edges,density,mean_degree,total_flow,mean_flow_per_node,mean_flow_per_edge\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.period_label,
            r.vertices,
            r.edges,
            r.density,
            r.mean_degree,
            r.total_flow,
            r.mean_flow_per_node,
            r.mean_flow_per_edge
        ));
    }
    s
}

fn summarize(run: &mut Run) -> anyhow::Result<u8> {
    let inputs = run.cfg.inputs.clone();
    let flows = required(&inputs.flows, "flows", "summarize")?;
    let current = ingest::load_flows(flows)?;
    let lagged = inputs.lagged_flows.as_deref().map(ingest::load_flows).transpose()?;
    let ids = match &inputs.nodes {
        Some(p) => ingest::load_nodes(p)?.0,
        None => {
            let all = current.iter().chain(lagged.iter().flatten());
            let set: BTreeSet<&str> =
                all.flat_map(|r: &FlowRecord| [r.origin.as_str(), r.destination.as_str()]).collect();
            NodeIds::new(set)?
        }
    };
    let mut rows = vec![FlowNetwork::build(&ids, &current)?.with_label("current").summarize()];
    if let Some(l) = &lagged {
        rows.push(FlowNetwork::build(&ids, l)?.with_label("lagged").summarize());
    }
    println!(
        "{:<10}{:>10}{:>12}{:>10}{:>12}{:>14}{:>14}{:>14}",
        "period", "vertices", "edges", "density", "mean_deg", "total_flow", "flow/node", "flow/edge"
    );
    for r in &rows {
        println!(
            "{:<10}{:>10}{:>12}{:>10.4}{:>12.2}{:>14}{:>14.2}{:>14.2}",
            r.period_label,
            r.vertices,
            r.edges,
            r.density,
            r.mean_degree,
            r.total_flow,
            r.mean_flow_per_node,
            r.mean_flow_per_edge
        );
    }
    run.json("summary.json", &rows)?;
    run.text("summary.csv", &summary_csv(&rows))?;
    Ok(0)
}

fn dissim(run: &mut Run) -> anyhow::Result<u8> {
    let nodes = run.cfg.inputs.nodes.clone();
    let (ids, table) = ingest::load_nodes(required(&nodes, "nodes", "dissim")?)?;
    let path = run.path("dissimilarity.csv");
    let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(file);
    ingest::write_dissimilarities(&mut w, &ids, &table)?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    println!("{} pairs written to {}", ids.len() * ids.len().saturating_sub(1) / 2, path.display());
    Ok(0)
}

fn fit(run: &mut Run) -> anyhow::Result<u8> {
    let model = run
        .cfg
        .model
        .clone()
        .ok_or_else(|| invalid("fit needs a model in the config file"))?;
    let data = load_data(run, true)?;
    let net = data.current.as_ref().expect("flows required");
    BoundModel::bind(&model, &data.nodes, &data.dyads)?;
    let est = run.cfg.estimator.clone();
    let sample = match est.sample_size {
        Some(m) => stratified_dyad_sample(net, m, run.seeds.derive("sample"))?,
        None => DyadSample::census(net),
    };
    let opts = FitOptions {
        ridge_lambda: est.ridge_lambda,
        tol: est.tol,
        max_iter: est.max_iter,
        cap: est.cap,
        execution: run.exec,
        effective_n: est.effective_n,
        ..FitOptions::default()
    };
    let result = fit_mple(&model, net, &data.nodes, &data.dyads, &sample, &opts)?;
    let csv = result.coefficient_csv();
    print!("{csv}");
    println!(
        "pseudo-BIC {:.3}, {} iterations, converged: {}",
        result.pseudo_bic, result.iterations, result.converged
    );
    run.json("fit.json", &result)?;
    run.text("coefficients.csv", &csv)?;
    if result.converged {
        Ok(0)
    } else {
        eprintln!(
            "fit did not converge after {} iterations (gradient max-norm {:.3e}); reports written",
            result.iterations, result.gradient_max_norm
        );
        for d in &result.diagnostics {
            eprintln!("  {d}");
        }
        Ok(EXIT_NOT_CONVERGED)
    }
}

#[derive(Serialize)]
struct GofOutput<'a> {
    chain: &'a ChainConfig,
    report: &'a vtergm::AdequacyReport,
}

fn gof(run: &mut Run) -> anyhow::Result<u8> {
    let fit = load_fit(run)?;
    let data = load_data(run, true)?;
    let observed = data.current.as_ref().expect("flows required");
    let chain = run.chain(observed.n_nodes());
    let report = adequacy_check(&fit.model, &fit.theta, &data.nodes, &data.dyads, observed, &chain)?;
    println!(
        "in-volume r = {:.4} ({} outside 95% band), out-volume r = {:.4} ({} outside)",
        report.in_volume.correlation,
        report.in_volume.n_outside,
        report.out_volume.correlation,
        report.out_volume.n_outside
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    run.json(
        "adequacy.json",
        &GofOutput {
            chain: &chain,
            report: &report,
        },
    )?;
    run.text("adequacy_in.csv", &report.in_volume.to_csv(Some(&data.ids)))?;
    run.text("adequacy_out.csv", &report.out_volume.to_csv(Some(&data.ids)))?;
    Ok(0)
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    chain: &'a ChainConfig,
    diagnostics: vtergm::sampler::ChainDiagnostics,
    acceptance_rate: f64,
    total_flows: Vec<u64>,
    files: Vec<String>,
}

fn simulate(run: &mut Run) -> anyhow::Result<u8> {
    let fit = load_fit(run)?;
    let data = load_data(run, false)?;
    let init = data
        .current
        .clone()
        .unwrap_or_else(|| FlowNetwork::empty(data.nodes.len()));
    let chain = run.chain(init.n_nodes());
    let sim = vtergm::sampler::mcmc_simulate(&fit.model, &fit.theta, &data.nodes, &data.dyads, &init, &chain)?;
    let dir = run.out.join("sim");
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let width = sim.networks.len().saturating_sub(1).to_string().len().max(3);
    let mut files = Vec::with_capacity(sim.networks.len());
    for (k, net) in sim.networks.iter().enumerate() {
        let name = format!("sim/network_{k:0width$}.csv");
        ingest::write_flows(run.path(&name), net, &data.ids)?;
        files.push(name);
    }
    let out = SimulateOutput {
        chain: &chain,
        diagnostics: sim.diagnostics,
        acceptance_rate: sim.diagnostics.acceptance_rate(),
        total_flows: sim.networks.iter().map(FlowNetwork::total_flow).collect(),
        files,
    };
    println!(
        "{} networks, acceptance rate {:.3}",
        sim.networks.len(),
        out.acceptance_rate
    );
    run.json("simulate.json", &out)?;
    Ok(0)
}

#[derive(Serialize)]
struct KnockoutOutput<'a> {
    chain: &'a ChainConfig,
    report: &'a vtergm::KnockoutReport,
}

fn knockout(run: &mut Run) -> anyhow::Result<u8> {
    let fit = load_fit(run)?;
    let data = load_data(run, true)?;
    let observed = data.current.as_ref().expect("flows required");
    let chain = run.chain(observed.n_nodes());
    let labels = run.cfg.knockout.zero_labels.clone();
    let report = knockout_experiment(&fit.model, &fit.theta, &data.nodes, &data.dyads, observed, &labels, &chain)?;
    println!(
        "baseline {:.1}, counterfactual {:.1}: {:+.3}% (SE of difference {:.1})",
        report.baseline.mean, report.counterfactual.mean, report.percent_difference, report.difference_se
    );
    run.json(
        "knockout.json",
        &KnockoutOutput {
            chain: &chain,
            report: &report,
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct Truth<'a> {
    model: &'a vtergm::ModelSpec,
    theta: &'a [f64],
    seed: u64,
    generator: &'a vtergm::ingest::SyntheticConfig,
}

fn synth(run: &mut Run) -> anyhow::Result<u8> {
    let (model, theta) = match (&run.cfg.model, &run.cfg.synth.theta) {
        (Some(m), Some(t)) => (m.clone(), t.clone()),
        (None, None) => default_synth_model(),
        (None, Some(t)) => (default_synth_model().0, t.clone()),
        (Some(_), None) => return Err(invalid("synth.theta is required when a model is configured")),
    };
    if theta.len() != model.len() {
        return Err(invalid(format!(
            "synth.theta has {} values, model has {} terms",
            theta.len(),
            model.len()
        )));
    }
    let generator = run.cfg.synth.generator.clone();
    let seed = run.seeds.derive("synth");
    let data = synthetic_generate(&generator, &model, &theta, seed)?;
    ingest::write_flows(run.path("flows.csv"), &data.current, &data.ids)?;
    ingest::write_flows(run.path("lagged_flows.csv"), &data.lagged, &data.ids)?;
    ingest::write_nodes(run.path("nodes.csv"), &data.ids, &data.nodes)?;
    ingest::write_distances(run.path("distances.csv"), &data.ids, &data.distances)?;
    run.json(
        "truth.json",
        &Truth {
            model: &model,
            theta: &theta,
            seed,
            generator: &generator,
        },
    )?;
    let mut fit_cfg = RunConfig {
        model: Some(model),
        seed: run.cfg.seed,
        ..RunConfig::default()
    };
    fit_cfg.inputs.flows = Some("flows.csv".into());
    fit_cfg.inputs.lagged_flows = Some("lagged_flows.csv".into());
    fit_cfg.inputs.nodes = Some("nodes.csv".into());
    fit_cfg.inputs.distances = Some("distances.csv".into());
    fit_cfg.inputs.fit = Some("fit/fit.json".into());
    fit_cfg.out = Some("fit".into());
    run.json("fit_config.json", &fit_cfg)?;
    println!(
        "{} nodes, {} nonzero flows (lagged {}), total flow {}",
        data.ids.len(),
        data.current.edge_count(),
        data.lagged.edge_count(),
        data.current.total_flow()
    );
    Ok(0)
}
