//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use stab_core::baselines::{exhaustive_tap_exact, exhaustive_tap_worlds, sigma_hat_worlds};
use stab_core::exact::ExactSigma;
use stab_core::graph::{generate_ba, generate_er};
use stab_core::stab::choose_sample_counts;
use stab_core::{DirectedGraph, NodeId, NodeSet};

use crate::config::{
    pick, Algorithm, EllRuleKind, EstimatorKind, ExperimentConfig, GraphSource, RunSeeds,
    SketchPreset, StabParams, DEFAULT_MC_SAMPLES, DEFAULT_TIME_LIMIT_S,
};
use crate::doc::{InfluenceDoc, Model};
use crate::error::{Error, Result};
use crate::format::{graph_hash, read_graph, read_oracle, write_graph, write_oracle};
use crate::parallel::{self, thread_pool};
use crate::report::{
    append_csv, meta_path, read_json, stop_name, write_json, ConfigEcho, OracleMeta, ResultRow,
    SolutionDoc, SweepRow, SCHEMA_VERSION,
};
use crate::snap::load_snap_edgelist;
use crate::stats::GraphStats;

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "stab", version, about = "Minimum seed sets for threshold activation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or ingest a graph and write it as a TAPG file.
    Generate {
        #[command(subcommand)]
        source: GenerateSource,
    },
    /// Sample worlds, build the sketch oracle and write it as a TAPO file.
    BuildOracles(BuildArgs),
    /// Solve for one or more thresholds and evaluate the seed sets.
    Run(RunArgs),
    /// Rebuild and solve across a list of external-influence levels.
    SweepExternal(SweepArgs),
    /// Exact activation and optimum seed sets on small graphs.
    BruteForce(BruteArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenerateSource {
    /// Directed Erdos-Renyi graph.
    Er {
        /// Number of nodes.
        #[arg(long)]
        n: usize,
        /// Edge probability; defaults to 2/n.
        #[arg(long)]
        p: Option<f64>,
        /// Generator seed.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Barabasi-Albert graph with bidirectional edges.
    Ba {
        /// Number of nodes.
        #[arg(long)]
        n: usize,
        /// Links added per arriving node.
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Generator seed.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// SNAP edge list.
    Snap {
        /// Edge-list file.
        #[arg(long)]
        input: PathBuf,
        /// Add the reverse of every edge.
        #[arg(long)]
        symmetrize: bool,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Write the original id of each dense node, one per line.
        #[arg(long)]
        remap_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// TAPG graph file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Master random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    /// Influence document (JSON).
    #[arg(long)]
    pub influence: Option<PathBuf>,
    /// Diffusion model for uniformly drawn parameters.
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Upper bound of the uniform edge-parameter draw.
    #[arg(long)]
    pub ip_max: Option<f64>,
    /// Seed for the edge and external parameter draws.
    #[arg(long)]
    pub param_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Allowed shortfall as a fraction of the threshold.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Failure probability for the number of worlds.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Exponent in the sketch failure probability n^-c.
    #[arg(long)]
    pub c: Option<f64>,
    /// Rule for the number of sampled worlds.
    #[arg(long, value_enum)]
    pub ell_rule: Option<EllRuleKind>,
    /// Sketch-size preset.
    #[arg(long, value_enum)]
    pub sketch: Option<SketchPreset>,
    /// Relative error for the epsilon sketch preset.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of worlds, overriding the rule.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Sketch size, overriding the preset.
    #[arg(long)]
    pub k: Option<usize>,
    /// Stop once no node adds at least one expected activation.
    #[arg(long)]
    pub cea_stop: Option<bool>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub influence: InfluenceArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Upper bound of the per-node external activation probability; 0 disables it.
    #[arg(long)]
    pub ep_max: Option<f64>,
    /// Threshold, needed only by the threshold-scaled sketch preset.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output TAPO file; the metadata goes next to it with a .json suffix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub influence: InfluenceArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Upper bound of the per-node external activation probability; 0 disables it.
    #[arg(long)]
    pub ep_max: Option<f64>,
    /// TAPO oracle file; required for STAB.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Thresholds, comma separated or repeated.
    #[arg(long = "threshold", value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    /// Solver to run.
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    /// Marginal-gain estimator for STAB.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorKind>,
    /// Lazy (priority queue) candidate evaluation.
    #[arg(long)]
    pub lazy: Option<bool>,
    /// Monte Carlo cascades for the final evaluation.
    #[arg(long)]
    pub mc_samples: Option<u64>,
    /// Monte Carlo worlds per CELF round.
    #[arg(long)]
    pub celf_samples: Option<usize>,
    /// Wall-clock limit for CELF, in seconds.
    #[arg(long)]
    pub time_limit_s: Option<u64>,
    /// Directory for solutions and CSV tables.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub influence: InfluenceArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// External-influence levels, comma separated.
    #[arg(long = "ep-max", value_delimiter = ',')]
    pub ep_max: Vec<f64>,
    /// Thresholds, comma separated or repeated.
    #[arg(long = "threshold", value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    /// Marginal-gain estimator for STAB.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorKind>,
    /// Monte Carlo cascades for the final evaluation.
    #[arg(long)]
    pub mc_samples: Option<u64>,
    /// Directory for solutions and CSV tables.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BruteArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub influence: InfluenceArgs,
    /// Upper bound of the per-node external activation probability; 0 disables it.
    #[arg(long)]
    pub ep_max: Option<f64>,
    /// Seed set to evaluate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<NodeId>,
    /// Also search for a minimum seed set reaching this threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Use this many sampled worlds instead of exact enumeration.
    #[arg(long)]
    pub worlds: Option<usize>,
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { source } => cmd_generate(source),
        Command::BuildOracles(a) => cmd_build_oracles(a),
        Command::Run(a) => cmd_run(a),
        Command::SweepExternal(a) => cmd_sweep_external(a),
        Command::BruteForce(a) => cmd_brute_force(a),
    }
}

fn cmd_generate(source: GenerateSource) -> Result<()> {
    let (g, out) = match source {
        GenerateSource::Er { n, p, seed, out } => {
            let p = p.unwrap_or_else(|| (2.0 / n as f64).min(1.0));
            (generate_er(n, p, seed)?, out)
        }
        GenerateSource::Ba { n, m, seed, out } => (generate_ba(n, m, seed)?, out),
        GenerateSource::Snap {
            input,
            symmetrize,
            out,
            remap_out,
        } => {
            let s = load_snap_edgelist(&input, symmetrize)?;
            if let Some(path) = remap_out {
                let mut text = String::new();
                for id in &s.original_ids {
                    text.push_str(&id.to_string());
                    text.push('\n');
                }
                fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            (s.graph, out)
        }
    };
    write_graph(&out, &g)?;
    println!("{} hash={}", GraphStats::of(&g), graph_hash(&g)?);
    Ok(())
}

struct Loaded {
    file: ExperimentConfig,
    graph: DirectedGraph,
    hash: String,
}

fn load_common(common: &CommonArgs) -> Result<Loaded> {
    let file = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    file.validate()?;
    let source = match (&common.graph, &file.graph) {
        (Some(p), _) => GraphSource::File { path: p.clone() },
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(Error::Config("no graph given (--graph or config \"graph\")".into())),
    };
    let graph = load_graph(&source)?;
    let hash = graph_hash(&graph)?;
    Ok(Loaded { file, graph, hash })
}

/// Loads or generates the graph described by `source`.
pub fn load_graph(source: &GraphSource) -> Result<DirectedGraph> {
    Ok(match source {
        GraphSource::File { path } => read_graph(path)?,
        GraphSource::Er { n, p, seed } => {
            generate_er(*n, p.unwrap_or_else(|| (2.0 / *n as f64).min(1.0)), *seed)?
        }
        GraphSource::Ba { n, m, seed } => generate_ba(*n, *m, *seed)?,
        GraphSource::Snap { path, symmetrize } => load_snap_edgelist(path, *symmetrize)?.graph,
    })
}

fn resolve_influence(
    args: &InfluenceArgs,
    ep_max: Option<f64>,
    file: &ExperimentConfig,
    fallback: Option<&InfluenceDoc>,
) -> Result<InfluenceDoc> {
    let mut doc = match &args.influence {
        Some(p) => read_json(p)?,
        None => file
            .influence
            .clone()
            .or_else(|| fallback.cloned())
            .unwrap_or_default(),
    };
    if let Some(m) = args.model {
        doc.model = m;
    }
    if let Some(p) = args.ip_max {
        doc.ip_max = Some(p);
        doc.ip = None;
    }
    if let Some(s) = args.param_seed {
        doc.param_seed = s;
    }
    if let Some(e) = ep_max {
        doc = doc.with_ep_max(e);
    }
    Ok(doc)
}

fn resolve_params(args: &ParamArgs, file: &ExperimentConfig, base: StabParams) -> StabParams {
    StabParams {
        alpha: pick(args.alpha, file.alpha, base.alpha),
        delta: pick(args.delta, file.delta, base.delta),
        c: pick(args.c, file.c, base.c),
        ell_rule: pick(args.ell_rule, file.ell_rule, base.ell_rule),
        sketch: pick(args.sketch, file.sketch, base.sketch),
        epsilon: pick(args.epsilon, file.epsilon, base.epsilon),
        ell: args.ell.or(file.ell).or(base.ell),
        k: args.k.or(file.k).or(base.k),
        cea_stop: pick(args.cea_stop, file.cea_stop, base.cea_stop),
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

fn cmd_build_oracles(a: BuildArgs) -> Result<()> {
    let l = load_common(&a.common)?;
    let doc = resolve_influence(&a.influence, a.ep_max, &l.file, None)?;
    let params = resolve_params(&a.params, &l.file, StabParams::default());
    let seeds = RunSeeds::from_master(pick(a.common.seed, l.file.seed, DEFAULT_SEED));
    let n = l.graph.node_count();
    let threshold = match (params.sketch, a.threshold) {
        (SketchPreset::Threshold, None) => {
            return Err(Error::Config("the threshold sketch preset needs --threshold".into()))
        }
        (_, t) => t,
    };
    // Any threshold in (0, n] gives the same l, and k unless the preset uses it.
    let cfg = params.to_config(threshold.unwrap_or(n as f64), EstimatorKind::C2, false);
    let (ell, k) = choose_sample_counts(&cfg, n)?;
    let spec = doc.to_spec(&l.graph)?;
    let pool = thread_pool(a.common.workers.or(l.file.workers))?;
    let start = Instant::now();
    let oracle = pool.install(|| parallel::build_oracle(&l.graph, &spec, ell, k, seeds.worlds, seeds.ranks))?;
    let build_ms = elapsed_ms(start);
    write_oracle(&a.out, &oracle)?;
    let meta = OracleMeta {
        schema: SCHEMA_VERSION,
        graph_hash: l.hash,
        nodes: n,
        edges: l.graph.edge_count(),
        influence: doc,
        params,
        threshold,
        ell,
        k,
        offset: oracle.offset(),
        seeds,
        workers: pool.current_num_threads(),
        build_ms,
    };
    write_json(&meta_path(&a.out), &meta)?;
    println!(
        "oracle n={n} ell={ell} k={k} offset={} workers={} build_ms={build_ms}",
        oracle.offset(),
        meta.workers
    );
    Ok(())
}

fn thresholds(flag: &[f64], file: &ExperimentConfig) -> Result<Vec<f64>> {
    let t = if flag.is_empty() {
        file.thresholds.clone().unwrap_or_default()
    } else {
        flag.to_vec()
    };
    if t.is_empty() {
        return Err(Error::Config("no threshold given (--threshold or config \"thresholds\")".into()));
    }
    Ok(t)
}

fn out_dir(flag: &Option<PathBuf>, file: &ExperimentConfig) -> Result<PathBuf> {
    let dir = flag.clone().or_else(|| file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn label(algorithm: Algorithm, estimator: EstimatorKind) -> &'static str {
    match (algorithm, estimator) {
        (Algorithm::Celf, _) => "celf",
        (Algorithm::Stab, EstimatorKind::C1) => "stab-c1",
        (Algorithm::Stab, EstimatorKind::C2) => "stab-c2",
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let l = load_common(&a.common)?;
    let algorithm = pick(a.algorithm, l.file.algorithm, Algorithm::Stab);
    let meta: Option<OracleMeta> = match &a.oracle {
        Some(p) => {
            let m: OracleMeta = read_json(&meta_path(p))?;
            if m.graph_hash != l.hash {
                return Err(Error::HashMismatch {
                    expected: m.graph_hash,
                    found: l.hash,
                });
            }
            Some(m)
        }
        None if algorithm == Algorithm::Stab => {
            return Err(Error::Config("STAB needs --oracle".into()))
        }
        None => None,
    };
    let doc = resolve_influence(&a.influence, a.ep_max, &l.file, meta.as_ref().map(|m| &m.influence))?;
    if let Some(m) = &meta {
        if m.influence != doc {
            return Err(Error::Config("influence model differs from the one the oracle was built with".into()));
        }
    }
    let base = meta.as_ref().map_or_else(StabParams::default, |m| m.params.clone());
    let params = resolve_params(&a.params, &l.file, base);
    let master = a
        .common
        .seed
        .or(l.file.seed)
        .or(meta.as_ref().map(|m| m.seeds.master))
        .unwrap_or(DEFAULT_SEED);
    let seeds = RunSeeds::from_master(master);
    let estimator = pick(a.estimator, l.file.estimator, EstimatorKind::C2);
    let lazy = pick(a.lazy, l.file.lazy, false);
    let mc_samples = pick(a.mc_samples, l.file.mc_samples, DEFAULT_MC_SAMPLES);
    let celf_samples = pick(a.celf_samples, l.file.celf_samples, stab_core::baselines::DEFAULT_CELF_SAMPLES);
    let limit = Duration::from_secs(pick(a.time_limit_s, l.file.time_limit_s, DEFAULT_TIME_LIMIT_S));
    let ts = thresholds(&a.thresholds, &l.file)?;
    let dir = out_dir(&a.out_dir, &l.file)?;
    let spec = doc.to_spec(&l.graph)?;
    let pool = thread_pool(a.common.workers.or(l.file.workers))?;
    let oracle = match &a.oracle {
        Some(p) => Some(read_oracle(p)?),
        None => None,
    };
    let name = label(algorithm, estimator);
    let mut tripped = false;
    for &t in &ts {
        let start = Instant::now();
        let sol = match (algorithm, &oracle) {
            (Algorithm::Stab, Some(o)) => {
                let cfg = params.to_config(t, estimator, lazy);
                pool.install(|| parallel::run_stab(&l.graph, &cfg, o))?
            }
            (Algorithm::Stab, None) => unreachable!("checked above"),
            (Algorithm::Celf, _) => {
                parallel::celf_with_time_limit(&l.graph, &spec, t, celf_samples, seeds.celf, limit)?
            }
        };
        let greedy_ms = elapsed_ms(start);
        let start = Instant::now();
        let eval = pool.install(|| parallel::evaluate(&l.graph, &spec, &sol.seed_set(), mc_samples, seeds.eval, Some(t)))?;
        let eval_ms = elapsed_ms(start);
        let echo = ConfigEcho {
            algorithm,
            threshold: t,
            estimator: (algorithm == Algorithm::Stab).then_some(estimator),
            lazy: (algorithm == Algorithm::Stab).then_some(lazy),
            params: (algorithm == Algorithm::Stab).then(|| params.clone()),
            influence: doc.clone(),
            graph_hash: l.hash.clone(),
            mc_samples,
            celf_samples: (algorithm == Algorithm::Celf).then_some(celf_samples),
            seeds,
            workers: pool.current_num_threads(),
        };
        let out = SolutionDoc::new(&sol, eval, greedy_ms, eval_ms, echo);
        write_json(&dir.join(format!("solution-{name}-T{t}.json")), &out)?;
        append_csv(
            &dir.join("results.csv"),
            &[ResultRow {
                schema: SCHEMA_VERSION,
                threshold: t,
                algorithm: name.into(),
                seeds: sol.seeds.len(),
                mean: eval.mean,
                stderr: eval.std_error,
                normalized: eval.normalized.unwrap_or(f64::NAN),
                runtime_ms: greedy_ms,
                stopped_by: stop_name(sol.stopped_by).into(),
                master_seed: master,
            }],
        )?;
        println!(
            "T={t} algorithm={name} seeds={} sigma_hat={:.3} mean={:.3} normalized={:.4} stopped_by={} greedy_ms={greedy_ms}",
            sol.seeds.len(),
            sol.estimated_activation,
            eval.mean,
            eval.normalized.unwrap_or(f64::NAN),
            stop_name(sol.stopped_by),
        );
        if sol.guard_tripped {
            tripped = true;
            break;
        }
    }
    if tripped {
        return Err(Error::GuardTripped(limit.as_secs()));
    }
    Ok(())
}

fn cmd_sweep_external(a: SweepArgs) -> Result<()> {
    let l = load_common(&a.common)?;
    let base_doc = resolve_influence(&a.influence, None, &l.file, None)?;
    let params = resolve_params(&a.params, &l.file, StabParams::default());
    let master = pick(a.common.seed, l.file.seed, DEFAULT_SEED);
    let seeds = RunSeeds::from_master(master);
    let estimator = pick(a.estimator, l.file.estimator, EstimatorKind::C2);
    let mc_samples = pick(a.mc_samples, l.file.mc_samples, DEFAULT_MC_SAMPLES);
    let levels = if a.ep_max.is_empty() {
        l.file.ep_max.clone().unwrap_or_default()
    } else {
        a.ep_max.clone()
    };
    if levels.is_empty() {
        return Err(Error::Config("no ep_max levels given".into()));
    }
    let ts = thresholds(&a.thresholds, &l.file)?;
    let dir = out_dir(&a.out_dir, &l.file)?;
    let pool = thread_pool(a.common.workers.or(l.file.workers))?;
    let n = l.graph.node_count();
    let mut rows = Vec::new();
    for &e in &levels {
        let spec = base_doc.with_ep_max(e).to_spec(&l.graph)?;
        let mut cached: Option<((usize, usize), stab_core::sketch::SketchOracle, u64)> = None;
        for &t in &ts {
            let cfg = params.to_config(t, estimator, false);
            let counts = choose_sample_counts(&cfg, n)?;
            if cached.as_ref().map(|c| c.0) != Some(counts) {
                let start = Instant::now();
                let o = pool.install(|| {
                    parallel::build_oracle(&l.graph, &spec, counts.0, counts.1, seeds.worlds, seeds.ranks)
                })?;
                cached = Some((counts, o, elapsed_ms(start)));
            }
            let (_, oracle, build_ms) = cached.as_ref().expect("built above");
            let start = Instant::now();
            let sol = pool.install(|| parallel::run_stab(&l.graph, &cfg, oracle))?;
            let greedy_ms = elapsed_ms(start);
            let eval = pool.install(|| parallel::evaluate(&l.graph, &spec, &sol.seed_set(), mc_samples, seeds.eval, Some(t)))?;
            let row = SweepRow {
                schema: SCHEMA_VERSION,
                ep_max: e,
                threshold: t,
                seeds: sol.seeds.len(),
                offset: oracle.offset(),
                external_fraction: oracle.offset() / t,
                mean: eval.mean,
                stderr: eval.std_error,
                normalized: eval.normalized.unwrap_or(f64::NAN),
                build_ms: *build_ms,
                greedy_ms,
                master_seed: master,
            };
            println!(
                "ep_max={e} T={t} seeds={} offset={:.3} normalized={:.4} greedy_ms={greedy_ms}",
                row.seeds, row.offset, row.normalized
            );
            rows.push(row);
        }
    }
    append_csv(&dir.join("sweep_external.csv"), &rows)?;
    let echo = SweepEcho {
        schema: SCHEMA_VERSION,
        graph_hash: l.hash,
        influence: base_doc,
        params,
        estimator,
        ep_max: levels,
        thresholds: ts,
        mc_samples,
        seeds,
        workers: pool.current_num_threads(),
    };
    write_json(&dir.join("sweep_external.json"), &echo)
}

#[derive(Serialize)]
struct SweepEcho {
    schema: u32,
    graph_hash: String,
    influence: InfluenceDoc,
    params: StabParams,
    estimator: EstimatorKind,
    ep_max: Vec<f64>,
    thresholds: Vec<f64>,
    mc_samples: u64,
    seeds: RunSeeds,
    workers: usize,
}

#[derive(Serialize)]
struct BruteReport {
    schema: u32,
    graph_hash: String,
    influence: InfluenceDoc,
    method: &'static str,
    worlds: Option<usize>,
    seeds_rng: Option<RunSeeds>,
    evaluated: Option<Evaluated>,
    optimum: Option<Optimum>,
}

#[derive(Serialize)]
struct Evaluated {
    seeds: Vec<NodeId>,
    /// Exact value as a reduced fraction, when enumerated.
    exact: Option<String>,
    value: f64,
}

#[derive(Serialize)]
struct Optimum {
    threshold: f64,
    found: bool,
    seeds: Vec<NodeId>,
    value: Option<f64>,
}

fn cmd_brute_force(a: BruteArgs) -> Result<()> {
    let l = load_common(&a.common)?;
    let doc = resolve_influence(&a.influence, a.ep_max, &l.file, None)?;
    let spec = doc.to_spec(&l.graph)?;
    let chosen: NodeSet = a.seeds.iter().copied().collect();
    if let Some(id) = chosen.max_id() {
        l.graph.check_node(id)?;
    }
    let mut report = BruteReport {
        schema: SCHEMA_VERSION,
        graph_hash: l.hash.clone(),
        influence: doc,
        method: "",
        worlds: a.worlds,
        seeds_rng: None,
        evaluated: None,
        optimum: None,
    };
    match a.worlds {
        None => {
            report.method = "exact";
            let sigma = ExactSigma::new(&l.graph, &spec)?;
            let mask = sigma.mask_of(&chosen)?;
            report.evaluated = Some(Evaluated {
                seeds: chosen.iter().collect(),
                exact: Some(sigma.sigma_mask(mask).to_string()),
                value: sigma.sigma_f64(mask),
            });
            if let Some(t) = a.threshold {
                let best = exhaustive_tap_exact(&sigma, t)?;
                report.optimum = Some(Optimum {
                    threshold: t,
                    found: best.is_some(),
                    value: best.as_ref().and_then(|s| s.to_mask()).map(|m| sigma.sigma_f64(m)),
                    seeds: best.map(|s| s.iter().collect()).unwrap_or_default(),
                });
            }
        }
        Some(ell) => {
            report.method = "worlds";
            let seeds = RunSeeds::from_master(pick(a.common.seed, l.file.seed, DEFAULT_SEED));
            report.seeds_rng = Some(seeds);
            let worlds = parallel::sample_worlds(&l.graph, &spec, ell, seeds.worlds)?;
            report.evaluated = Some(Evaluated {
                seeds: chosen.iter().collect(),
                exact: None,
                value: sigma_hat_worlds(&worlds, &chosen)?,
            });
            if let Some(t) = a.threshold {
                let best = exhaustive_tap_worlds(&worlds, t)?;
                let value = match &best {
                    Some(s) => Some(sigma_hat_worlds(&worlds, s)?),
                    None => None,
                };
                report.optimum = Some(Optimum {
                    threshold: t,
                    found: best.is_some(),
                    value,
                    seeds: best.map(|s| s.iter().collect()).unwrap_or_default(),
                });
            }
        }
    }
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out).map_err(|e| Error::io(Path::new("<stdout>"), e))
}
