use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fiddle::bench::DatasetSpec;
use fiddle::noise::NoiseModel;
use fiddle::pipeline::{
    gen_instance_files, route_instance, OracleMode, Pipeline, PipelineConfig, PipelineError, Router, Stage, StageStatus,
    Workspace,
};
use fiddle::rl::PolicyMode;
use fiddle::surrogate::KernelKind;
use serde::de::DeserializeOwned;

/// Fidelity-driven qubit routing pipeline.
#[derive(Parser)]
#[command(name = "fiddle", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Directory holding all stage artifacts.
    #[arg(long, global = true, default_value = "work")]
    workdir: PathBuf,
    /// Pipeline config (JSON). Without it a preset is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed; overrides the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the scaled-down preset instead of the full one.
    #[arg(long, global = true)]
    desk: bool,
    /// Rerun stages even when their outputs are current.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the resolved config as JSON.
    Config,
    /// Generate instances and the encoder circuit pool. With --spec, write standalone instance files.
    Gen {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure fidelities of sampled pool circuits.
    Label {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Noise model file, or a preset name.
        #[arg(long)]
        noise: Option<String>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<OracleMode>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Train the circuit autoencoder on the pool.
    TrainEncoder {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Encoder training config (JSON).
        #[arg(long)]
        cfg: Option<PathBuf>,
    },
    /// Hold out test labels and pick the surrogate training set.
    Select {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        ns: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Fit GP surrogates and keep the one with the lowest held-out error.
    TrainSurrogate {
        #[arg(long, value_delimiter = ',')]
        kernel: Vec<KernelKind>,
    },
    /// Train the actor-critic router against the surrogate.
    TrainRl {
        #[arg(long)]
        episodes: Option<usize>,
        /// RL config (JSON).
        #[arg(long)]
        cfg: Option<PathBuf>,
    },
    /// Route the test instances, or one instance file with --policy and --instance.
    Route {
        #[arg(long, requires = "instance")]
        policy: Option<PathBuf>,
        #[arg(long, requires = "policy")]
        instance: Option<PathBuf>,
        /// greedy, or sample:SEED
        #[arg(long, default_value = "greedy", value_parser = parse_policy_mode)]
        mode: PolicyMode,
        #[arg(long, value_delimiter = ',')]
        routers: Vec<Router>,
    },
    /// Score routed circuits with the fidelity oracle.
    Eval {
        #[arg(long, value_delimiter = ',')]
        routers: Vec<Router>,
    },
    /// Write plot-ready CSV files.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage in order.
    Run,
}

fn parse_mode(s: &str) -> Result<OracleMode, String> {
    match s {
        "exact" => Ok(OracleMode::Exact),
        "mc" => Ok(OracleMode::Mc),
        "auto" => Ok(OracleMode::Auto),
        _ => Err(format!("expected exact, mc or auto, got {s:?}")),
    }
}

fn parse_policy_mode(s: &str) -> Result<PolicyMode, String> {
    match s.split_once(':') {
        None if s == "greedy" => Ok(PolicyMode::Greedy),
        None if s == "sample" => Ok(PolicyMode::Sample(0)),
        Some(("sample", seed)) => seed.parse().map(PolicyMode::Sample).map_err(|e| format!("bad seed: {e}")),
        _ => Err(format!("expected greedy or sample[:SEED], got {s:?}")),
    }
}

fn config_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Config(e.to_string())
}

fn read_value(p: &Path) -> Result<serde_json::Value, PipelineError> {
    let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))
}

/// Parses a JSON file, inserting `seed` when given.
fn read_seeded<T: DeserializeOwned>(p: &Path, seed: Option<u64>) -> Result<T, PipelineError> {
    let mut v = read_value(p)?;
    if let (Some(s), Some(obj)) = (seed, v.as_object_mut()) {
        obj.insert("seed".into(), s.into());
    }
    serde_json::from_value(v).map_err(|e| config_err(format!("{}: {e}", p.display())))
}

fn resolve_config(g: &Global) -> Result<PipelineConfig, PipelineError> {
    match &g.config {
        Some(p) => read_seeded(p, g.seed),
        None => {
            let seed = g.seed.ok_or_else(|| config_err("a seed is required: pass --seed or a config with \"seed\""))?;
            Ok(if g.desk { PipelineConfig::desk(seed) } else { PipelineConfig::full(seed) })
        }
    }
}

fn load_noise(arg: &str) -> Result<NoiseModel, PipelineError> {
    let p = Path::new(arg);
    if p.exists() {
        let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{arg}: {e}")))?;
        NoiseModel::from_json(&text).map_err(|e| config_err(format!("{arg}: {e}")))
    } else {
        NoiseModel::preset(arg).map_err(|e| config_err(format!("{arg}: not a file, and {e}")))
    }
}

fn report(stage: Stage, status: StageStatus) {
    match status {
        StageStatus::Ran => eprintln!("{stage}: done"),
        StageStatus::UpToDate => eprintln!("{stage}: up to date"),
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let g = &cli.global;
    if let Command::Gen { spec: Some(spec), out } = &cli.command {
        let spec: DatasetSpec = read_seeded(spec, g.seed)?;
        let out = out.clone().unwrap_or_else(|| g.workdir.clone());
        report(Stage::Gen, gen_instance_files(&spec, &out, g.force)?);
        return Ok(());
    }
    if let Command::Route { policy: Some(policy), instance: Some(instance), mode, .. } = &cli.command {
        let rec = route_instance(policy, instance, *mode)?;
        println!("{}", serde_json::to_string_pretty(&rec).expect("route record serializes"));
        return Ok(());
    }

    let mut cfg = resolve_config(g)?;
    let mut ws = Workspace::new(&g.workdir);
    let stage = match cli.command {
        Command::Config => {
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
            return Ok(());
        }
        Command::Gen { out, .. } => {
            if let Some(d) = out {
                ws.dataset = d;
            }
            Some(Stage::Gen)
        }
        Command::Label { dataset, noise, mode, samples } => {
            if let Some(d) = dataset {
                ws.dataset = d;
            }
            if let Some(n) = noise {
                cfg.oracle.noise = load_noise(&n)?;
            }
            if let Some(m) = mode {
                cfg.oracle.mode = m;
            }
            if let Some(k) = samples {
                cfg.oracle.samples = k;
            }
            Some(Stage::Label)
        }
        Command::TrainEncoder { dataset, cfg: embed } => {
            if let Some(d) = dataset {
                ws.dataset = d;
            }
            if let Some(p) = embed {
                cfg.embed = read_seeded(&p, None)?;
            }
            Some(Stage::TrainEncoder)
        }
        Command::Select { pool, ns, eps } => {
            if let Some(p) = pool {
                ws.labels = p;
            }
            if let Some(n) = ns {
                cfg.select.n_select = n;
            }
            if let Some(e) = eps {
                cfg.select.epsilon = e;
            }
            Some(Stage::Select)
        }
        Command::TrainSurrogate { kernel } => {
            if !kernel.is_empty() {
                cfg.surrogate.kernels = kernel;
            }
            Some(Stage::TrainSurrogate)
        }
        Command::TrainRl { episodes, cfg: rl } => {
            if let Some(p) = rl {
                cfg.rl = read_seeded(&p, None)?;
            }
            if let Some(e) = episodes {
                cfg.rl.episodes = e;
            }
            Some(Stage::TrainRl)
        }
        Command::Route { routers, .. } => {
            if !routers.is_empty() {
                cfg.eval.routers = routers;
            }
            Some(Stage::Route)
        }
        Command::Eval { routers } => {
            if !routers.is_empty() {
                cfg.eval.routers = routers;
            }
            Some(Stage::Eval)
        }
        Command::Report { out } => {
            if let Some(o) = out {
                ws.report = o;
            }
            Some(Stage::Report)
        }
        Command::Run => None,
    };
    let mut pipeline = Pipeline::new(ws, cfg)?;
    pipeline.force = g.force;
    match stage {
        Some(s) => report(s, pipeline.run(s)?),
        None => pipeline.run_all(report)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
