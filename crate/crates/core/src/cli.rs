//! Command-line front end. Every output file is accompanied by (or embeds)
//! the tool version and the fully resolved configuration, seeds included.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    bench, checkpoint_divergence, comparisons_csv, pairwise_csv, pairwise_tests, results_csv,
    sample_states, BenchSetup, Method, SinkhornConfig, SIGNIFICANCE,
};
use crate::error::{Error, Result};
use crate::expert::{Expert, ExpertConfig, DEFAULT_ALPHA};
use crate::matching::{Allocator, Incentive};
use crate::policy::{
    BigCam, Hyper, PolicyConfig, PolicyParams, SampleMode, ShrinkConfig, DEFAULT_EPSILON,
};
use crate::scenario::{
    scaled_batch, FleetSpec, Scenario, Validation, DEFAULT_MAX_CAPACITY, DEFAULT_MAX_RANGE,
};
use crate::sim::{episode_rng, run_world, SimConfig, World};
use crate::trainer::{train, ScenarioStream, TrainConfig, TrainLog, TrainSetup, TRAIN_LOG_HEADER};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "mrta", version, about = "Bigraph task allocation for collective transport")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a batch of scenario files plus a manifest.
    Generate(GenerateArgs),
    /// Run one episode and write its result as JSON.
    Run(RunArgs),
    /// Train policy params with the evolution strategy.
    Train(TrainArgs),
    /// Benchmark methods on a shared scenario set.
    Bench(BenchArgs),
    /// Sinkhorn distance of checkpoint weights to the expert's.
    CompareWeights(CompareArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FleetArgs {
    /// Robot range, km.
    #[arg(long, default_value_t = DEFAULT_MAX_RANGE)]
    pub max_range: f64,
    /// Robot payload capacity, units.
    #[arg(long, default_value_t = DEFAULT_MAX_CAPACITY)]
    pub max_capacity: u32,
}

impl FleetArgs {
    fn fleet(&self, n_robots: usize) -> FleetSpec {
        FleetSpec {
            n_robots,
            max_range: self.max_range,
            max_capacity: self.max_capacity,
            ..FleetSpec::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolicyArgs {
    /// Exploration probability in sampling mode.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Decoder attention heads; checked against loaded params.
    #[arg(long)]
    pub heads: Option<usize>,
    /// Embedding length; checked against loaded params.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = 6)]
    pub shrink_robots: usize,
    #[arg(long, default_value_t = 50)]
    pub shrink_tasks: usize,
    /// Match over the whole problem instead of a shrunk window.
    #[arg(long)]
    pub no_shrink: bool,
}

impl PolicyArgs {
    fn config(&self, mode: SampleMode) -> Result<PolicyConfig> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("--epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if !self.no_shrink && (self.shrink_robots == 0 || self.shrink_tasks == 0) {
            return Err(Error::Config("shrink sizes must be positive".into()));
        }
        Ok(PolicyConfig {
            epsilon: self.epsilon,
            mode,
            shrink: (!self.no_shrink).then_some(ShrinkConfig {
                max_robots: self.shrink_robots,
                max_tasks: self.shrink_tasks,
            }),
            ..PolicyConfig::default()
        })
    }

    fn hyper(&self) -> Hyper {
        let d = Hyper::default();
        Hyper {
            h: self.hidden.unwrap_or(d.h),
            heads: self.heads.unwrap_or(d.heads),
            ..d
        }
    }

    fn load(&self, path: &Path) -> Result<PolicyParams> {
        let params = PolicyParams::load(path)?;
        let mismatch = |want: Option<usize>, got: usize| want.is_some_and(|w| w != got);
        if mismatch(self.heads, params.hyper.heads) || mismatch(self.hidden, params.hyper.h) {
            return Err(Error::ParamsFormat(format!(
                "{} holds {:?}, which disagrees with --heads/--hidden",
                path.display(),
                params.hyper
            )));
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExpertArgs {
    /// Time horizon of the expert incentive, seconds.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

impl ExpertArgs {
    fn config(&self) -> Result<ExpertConfig> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("--alpha must be > 0, got {}", self.alpha)));
        }
        Ok(ExpertConfig { alpha: self.alpha })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    pub tasks_scale: usize,
    #[arg(long, default_value_t = 1)]
    pub robots_scale: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fleet: FleetArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "big-mrta")]
    pub method: String,
    /// Policy params file, required for big-cam.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Reject scenarios with out-of-range values instead of warning.
    #[arg(long)]
    pub strict: bool,
    /// Prune edges whose robot cannot cover the task's remaining demand.
    #[arg(long)]
    pub strict_capacity_pruning: bool,
    /// Sample learned weights (ε-greedy) instead of taking greedy values.
    #[arg(long)]
    pub explore: bool,
    /// Result JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub expert: ExpertArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Start from these params instead of a fresh initialization.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 16)]
    pub population: usize,
    #[arg(long, default_value_t = 4)]
    pub elites: usize,
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,
    #[arg(long, default_value_t = 8)]
    pub scenarios_per_eval: usize,
    #[arg(long, default_value_t = 16)]
    pub heldout: usize,
    #[arg(long, default_value_t = 20)]
    pub tasks: usize,
    #[arg(long, default_value_t = 3)]
    pub robots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_antithetic: bool,
    /// Write a checkpoint every N generations (0 = never).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "big-mrta,feas-rnd")]
    pub method: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub tasks_scale: usize,
    #[arg(long, default_value_t = 1)]
    pub robots_scale: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub strict_capacity_pruning: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[command(flatten)]
    pub expert: ExpertArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Checkpoint params files, one comparison row each.
    #[arg(long, num_args = 1..)]
    pub params: Vec<PathBuf>,
    /// Number of sampled decision states.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// States taken from each sampling episode.
    #[arg(long, default_value_t = 20)]
    pub per_episode: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::analysis::sinkhorn::DEFAULT_REG)]
    pub sinkhorn_reg: f64,
    #[arg(long, default_value_t = crate::analysis::sinkhorn::DEFAULT_ITERS)]
    pub sinkhorn_iters: usize,
    /// Leave out the expert-vs-expert reference row.
    #[arg(long)]
    pub no_expert_row: bool,
    /// Comparison CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub expert: ExpertArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Serialize)]
struct Meta<'a, C: Serialize> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolved: Option<serde_json::Value>,
}

fn meta_json<C: Serialize>(command: &str, config: &C, resolved: Option<serde_json::Value>) -> serde_json::Value {
    serde_json::to_value(Meta {
        tool: TOOL,
        version: VERSION,
        command,
        config,
        resolved,
    })
    .expect("config serializes")
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    write(path, text + "\n")
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// `results.csv` -> `results.csv.meta.json`
fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => Err(Error::Config("--jobs must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn methods(names: &[String]) -> Result<Vec<Method>> {
    let list: Vec<Method> = names
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::Config("--method needs at least one method".into()));
    }
    Ok(list)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<Vec<PathBuf>> {
    if args.tasks_scale == 0 || args.robots_scale == 0 {
        return Err(Error::Config("scale factors must be >= 1".into()));
    }
    ensure_dir(&args.out)?;
    let batch = scaled_batch(
        args.tasks_scale,
        args.robots_scale,
        args.n,
        args.seed,
        args.fleet.fleet(0),
    );
    let mut entries = Vec::with_capacity(batch.len());
    let mut paths = Vec::with_capacity(batch.len());
    for (k, s) in batch.iter().enumerate() {
        let name = format!("scenario_{k:04}.json");
        let path = args.out.join(&name);
        s.save(&path)?;
        entries.push(serde_json::json!({
            "file": name,
            "seed": s.seed,
            "n_tasks": s.n_tasks(),
            "n_robots": s.n_robots(),
            "sha256": s.content_hash(),
        }));
        paths.push(path);
    }
    let manifest = serde_json::json!({
        "meta": meta_json("generate", args, None),
        "scenarios": entries,
    });
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(paths)
}

pub fn cmd_run(args: &RunArgs) -> Result<serde_json::Value> {
    let validation = if args.strict {
        Validation::Strict
    } else {
        Validation::Lenient
    };
    let loaded = Scenario::load(&args.scenario, validation)?;
    for w in &loaded.warnings {
        eprintln!("warning: {}: {w}", args.scenario.display());
    }
    let method: Method = args.method.parse()?;
    let mode = if args.explore {
        SampleMode::Train
    } else {
        SampleMode::Test
    };
    let sim = SimConfig {
        strict_capacity_pruning: args.strict_capacity_pruning,
    };
    let expert = args.expert.config()?;
    let policy = args.policy.config(mode)?;
    let allocator: Box<dyn Allocator> = match method {
        Method::BigCam => {
            let path = args
                .params
                .as_ref()
                .ok_or_else(|| Error::Config("big-cam needs --params".into()))?;
            let params = Arc::new(args.policy.load(path)?);
            Box::new(crate::matching::BigraphAllocator::new(BigCam::new(params, policy)))
        }
        other => BenchSetup {
            expert,
            ..BenchSetup::default()
        }
        .allocator(other)?,
    };
    let scenario = &loaded.scenario;
    let result = run_world(
        World::new(scenario, sim),
        allocator.as_ref(),
        &mut episode_rng(scenario),
        |_, _| {},
    )?;
    let resolved = serde_json::json!({
        "sim": sim,
        "expert": expert,
        "policy": policy,
        "scenario_seed": scenario.seed,
        "scenario_sha256": scenario.content_hash(),
    });
    let out = serde_json::json!({
        "meta": meta_json("run", args, Some(resolved)),
        "method": method,
        "result": result,
    });
    match &args.out {
        Some(path) => write_json(path, &out)?,
        None => println!("{}", serde_json::to_string_pretty(&out).expect("serializes")),
    }
    Ok(out)
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainLog> {
    let config = TrainConfig {
        population: args.population,
        elites: args.elites,
        noise: args.noise,
        generations: args.generations,
        scenarios_per_eval: args.scenarios_per_eval,
        heldout_scenarios: args.heldout,
        seed: args.seed,
        antithetic: !args.no_antithetic,
    };
    config.validate()?;
    if args.tasks == 0 || args.robots == 0 {
        return Err(Error::Config("--tasks and --robots must be >= 1".into()));
    }
    let initial = match &args.params {
        Some(path) => args.policy.load(path)?,
        None => PolicyParams::init(args.policy.hyper(), args.seed)?,
    };
    let setup = TrainSetup {
        config,
        policy: args.policy.config(SampleMode::Test)?,
        sim: SimConfig::default(),
        stream: ScenarioStream::new(args.tasks, args.fleet.fleet(args.robots), args.seed),
    };
    ensure_dir(&args.out)?;
    let checkpoints = args.out.join("checkpoints");
    if args.checkpoint_every > 0 {
        ensure_dir(&checkpoints)?;
    }
    let resolved = serde_json::json!({
        "train": config,
        "policy": setup.policy,
        "stream": setup.stream,
        "hyper": initial.hyper,
    });
    let meta = meta_json("train", args, Some(resolved));

    let log_path = args.out.join("train_log.csv");
    let mut log_text = String::from(TRAIN_LOG_HEADER);
    log_text.push('\n');
    write(&log_path, &log_text)?;
    let every = args.checkpoint_every;
    let (best, log) = with_jobs(args.jobs, || {
        train(initial, &setup, |record, current| {
            log_text.push_str(&TrainLog::csv_row(record));
            log_text.push('\n');
            write(&log_path, &log_text)?;
            if every > 0 && (record.generation + 1) % every == 0 {
                let path = checkpoints.join(format!("gen_{:05}.bin", record.generation + 1));
                current.save(&path)?;
            }
            Ok(())
        })
    })?;
    let params_path = args.out.join("params.bin");
    best.save(&params_path)?;
    write_json(&sidecar(&params_path), &meta)?;
    write_json(&sidecar(&log_path), &meta)?;
    write_json(
        &args.out.join("summary.json"),
        &serde_json::json!({
            "meta": meta,
            "initial_heldout": log.initial_heldout,
            "best_heldout": log.best_heldout,
            "generations": log.records.len(),
        }),
    )?;
    Ok(log)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let methods = methods(&args.method)?;
    let params = match (&args.params, methods.contains(&Method::BigCam)) {
        (Some(path), _) => Some(Arc::new(args.policy.load(path)?)),
        (None, true) => return Err(Error::Config("big-cam needs --params".into())),
        (None, false) => None,
    };
    let setup = BenchSetup {
        fleet: args.fleet.fleet(0),
        sim: SimConfig {
            strict_capacity_pruning: args.strict_capacity_pruning,
        },
        expert: args.expert.config()?,
        policy: args.policy.config(SampleMode::Test)?,
        params,
    };
    let results = with_jobs(args.jobs, || {
        bench(&methods, args.tasks_scale, args.robots_scale, args.n, args.seed, &setup)
    })?;
    let tests = pairwise_tests(&results)?;

    ensure_dir(&args.out)?;
    let resolved = serde_json::json!({
        "fleet": setup.fleet,
        "sim": setup.sim,
        "expert": setup.expert,
        "policy": setup.policy,
        "hyper": setup.params.as_ref().map(|p| p.hyper),
        "scenario_seeds": results[0].scenario_seeds,
        "scenario_sha256": results[0].scenario_hashes,
        "significance": SIGNIFICANCE,
    });
    let meta = meta_json("bench", args, Some(resolved));
    let results_path = args.out.join("results.csv");
    write(&results_path, results_csv(&results))?;
    write_json(&sidecar(&results_path), &meta)?;
    let tests_path = args.out.join("ttests.csv");
    write(&tests_path, pairwise_csv(&tests))?;
    write_json(&sidecar(&tests_path), &meta)?;

    for r in &results {
        println!(
            "{:<9} mean {:.4} median {:.4} std {:.4}  {:.3e} s/decision",
            r.method.name(),
            r.mean(),
            r.median(),
            r.std(),
            r.mean_decision_time()
        );
    }
    for t in &tests {
        println!(
            "{} vs {}: t = {:.4}, p = {:.4}{}",
            t.a,
            t.b,
            t.test.t,
            t.test.p,
            if t.test.significant(SIGNIFICANCE) { " (significant)" } else { "" }
        );
    }
    Ok(())
}

pub fn cmd_compare_weights(args: &CompareArgs) -> Result<()> {
    let cfg = SinkhornConfig {
        reg: args.sinkhorn_reg,
        iters: args.sinkhorn_iters,
    };
    if !(cfg.reg.is_finite() && cfg.reg > 0.0) {
        return Err(Error::Config(format!("--sinkhorn-reg must be > 0, got {}", cfg.reg)));
    }
    let policy = args.policy.config(SampleMode::Test)?;
    let expert = Expert::new(args.expert.config()?);
    let loaded: Vec<(String, BigCam)> = args
        .params
        .iter()
        .map(|p| {
            let params = Arc::new(args.policy.load(p)?);
            Ok((p.display().to_string(), BigCam::new(params, policy)))
        })
        .collect::<Result<_>>()?;
    if loaded.is_empty() && args.no_expert_row {
        return Err(Error::Config("nothing to compare: pass --params or keep the expert row".into()));
    }
    let mut sources: Vec<(String, &dyn Incentive)> = Vec::new();
    if !args.no_expert_row {
        sources.push(("expert".into(), &expert));
    }
    for (label, cam) in &loaded {
        sources.push((label.clone(), cam));
    }
    let states = sample_states(args.n, args.per_episode, args.seed)?;
    let rows = checkpoint_divergence(&sources, &expert, &states, &cfg)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write(&args.out, comparisons_csv(&rows))?;
    let resolved = serde_json::json!({
        "sinkhorn": cfg,
        "policy": policy,
        "expert": expert.config,
        "ground_cost": "0 on the same edge, 1 otherwise",
        "normalization": "L1 over feasible edges",
        "state_source": "feas-rnd episodes, 50 tasks / 6 robots",
    });
    write_json(&sidecar(&args.out), &meta_json("compare-weights", args, Some(resolved)))?;
    for r in &rows {
        println!("{:<40} {:.6}", r.label, r.mean);
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|_| ()),
        Command::Run(a) => cmd_run(a).map(|_| ()),
        Command::Train(a) => cmd_train(a).map(|_| ()),
        Command::Bench(a) => cmd_bench(a),
        Command::CompareWeights(a) => cmd_compare_weights(a),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
