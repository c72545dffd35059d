use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{
    csv_bytes, json_bytes, jsonl_bytes, parse_json, read_csv, read_input, read_json, read_jsonl, record_timing, write_file,
};
use super::estimator::transform;
use super::{
    derive_seed, sha256_hex, Header, LatentSurrogate, Manifest, PipelineConfig, PipelineError, Stage, StageRecord,
    SurrogateArtifact, Workspace,
};
use crate::bench::{gen_instances, DatasetSpec};
use crate::circuit::{CircuitTable, Gate, HardwareGraph, ProblemInstance};
use crate::embed::{train_autoencoder, Autoencoder, EmbedRecord};
use crate::nn::Checkpoint;
use crate::noise::{circuit_fidelity, NoiseModel};
use crate::rl::{bootstrap_mean_ci, route_with_policy, train_rl, ActorNet, EpisodeRecord, PolicyMode};
use crate::route::{depth_greedy_route, random_feasible_route, random_route, ActionSpace, RouteOutcome};
use crate::surrogate::{
    fit_hyperparameters, latent_fidelity_correlation, rmse, select_training_set, Kernel, KernelKind, SelectionConfig,
    SurrogateError, SurrogateFile,
};

/// Random-route attempts per encoder circuit before the instance is declared unusable.
const CIRCUIT_ATTEMPTS: usize = 1000;

const ENCODER_INSTANCES: &str = "encoder_instances.jsonl";
const RL_TRAIN: &str = "rl_train.jsonl";
const RL_TEST: &str = "rl_test.jsonl";
const CIRCUITS: &str = "circuits.jsonl";
const ENCODER_CKPT: &str = "encoder/checkpoint.json";
const ENCODER_LOSS: &str = "encoder/loss.csv";
const POOL: &str = "surrogate/pool.jsonl";
const SPLIT: &str = "surrogate/split.json";
const SURROGATE: &str = "surrogate/model.json";
const FITS: &str = "surrogate/fits.json";
const RMSE: &str = "surrogate/rmse.csv";
const CORRELATION: &str = "surrogate/correlation.csv";
const ACTOR: &str = "rl/actor.json";
const CRITIC: &str = "rl/critic.json";
const TRAIN_LOG: &str = "rl/train_log.csv";
const EPISODES: &str = "rl/episodes.csv";
const PER_INSTANCE: &str = "eval/per_instance.csv";
const SUMMARY: &str = "eval/summary.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    /// Config and inputs match the manifest and the outputs are intact.
    UpToDate,
}

/// Runs `body` unless the manifest shows the same config and inputs already produced the
/// current outputs. `body` returns every output file; they are written, hashed and
/// recorded only after it succeeds.
pub fn run_stage<C: Serialize>(
    ws: &Workspace,
    name: &str,
    seed: u64,
    config: &C,
    inputs: &[(PathBuf, Stage)],
    force: bool,
    body: impl FnOnce(&Header) -> Result<Vec<(PathBuf, Vec<u8>)>, PipelineError>,
) -> Result<StageStatus, PipelineError> {
    let cfg_json = serde_json::json!({ "stage": name, "seed": seed, "config": config });
    let config_hash = sha256_hex(cfg_json.to_string().as_bytes());
    let mut input_hashes = BTreeMap::new();
    for (p, producer) in inputs {
        input_hashes.insert(ws.key(p), sha256_hex(&read_input(p, *producer)?));
    }
    let mut manifest = Manifest::load(ws)?;
    if !force && manifest.is_current(ws, name, &config_hash, &input_hashes) {
        return Ok(StageStatus::UpToDate);
    }
    let header = Header { stage: name.to_string(), config_hash: config_hash.clone(), seed };
    let start = Instant::now();
    let outputs = body(&header)?;
    let mut output_hashes = BTreeMap::new();
    for (p, bytes) in &outputs {
        write_file(p, bytes)?;
        output_hashes.insert(ws.key(p), sha256_hex(bytes));
    }
    manifest
        .stages
        .insert(name.to_string(), StageRecord { config_hash, seed, inputs: input_hashes, outputs: output_hashes });
    manifest.save(ws)?;
    record_timing(ws, name, start.elapsed().as_secs_f64())?;
    Ok(StageStatus::Ran)
}

/// One random route of an encoder instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub id: usize,
    pub instance: usize,
    pub seed: u64,
    pub swaps: usize,
    pub table: CircuitTable,
}

/// Measured fidelity of one circuit. `latent` is filled in once an encoder exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub circuit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<Vec<f64>>,
    pub fidelity: f64,
    pub std_error: Option<f64>,
    pub mode: String,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub noise: NoiseModel,
}

/// Circuit ids held out for testing and chosen for surrogate training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub test: Vec<usize>,
    pub train: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct KernelFit {
    kind: KernelKind,
    kernel: Kernel,
    gamma2: f64,
    log_marginal_likelihood: f64,
    rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RmseRow {
    kernel: String,
    rmse: f64,
    log_marginal_likelihood: f64,
    gamma2: f64,
    selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CorrelationRow {
    set: String,
    circuits: usize,
    /// Empty when every label has the same fidelity.
    pearson_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

/// One logging interval of RL training. Surrogate fidelities average over feasible
/// episodes only; `improvement` is relative to the random router's surrogate fidelity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub episode: usize,
    pub feasibility_rate: f64,
    pub mean_return: f64,
    pub mean_surrogate_fidelity: Option<f64>,
    pub random_surrogate_fidelity: f64,
    pub improvement: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Router {
    Fiddle,
    Random,
    DepthGreedy,
}

impl Router {
    pub const ALL: [Router; 3] = [Router::Fiddle, Router::Random, Router::DepthGreedy];

    pub fn name(self) -> &'static str {
        match self {
            Router::Fiddle => "fiddle",
            Router::Random => "random",
            Router::DepthGreedy => "depth_greedy",
        }
    }
}

impl std::str::FromStr for Router {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Router::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown router {s:?}; expected fiddle, random or depth_greedy")))
    }
}

/// A routed instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub instance: usize,
    pub router: Router,
    pub feasible: bool,
    pub swaps: usize,
    pub gates: Vec<Gate>,
    pub table: CircuitTable,
}

impl RouteRecord {
    fn new(instance: usize, router: Router, out: RouteOutcome) -> Self {
        RouteRecord { instance, router, feasible: out.feasible, swaps: out.swaps, gates: out.gates, table: out.table }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct EvalRow {
    instance: usize,
    router: Router,
    feasible: bool,
    swaps: usize,
    depth: usize,
    fidelity: f64,
    std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouterSummary {
    pub router: Router,
    pub instances: usize,
    pub feasibility_rate: f64,
    pub mean_fidelity: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_swaps: f64,
}

/// Paired per-instance fidelity difference `router - baseline`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub router: Router,
    pub baseline: Router,
    pub mean_difference: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Oracle-measured routing quality on the held-out instances. Infeasible routes score 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confidence: f64,
    pub routers: Vec<RouterSummary>,
    pub comparisons: Vec<Comparison>,
}

impl EvalReport {
    pub fn router(&self, r: Router) -> Option<&RouterSummary> {
        self.routers.iter().find(|s| s.router == r)
    }

    pub fn comparison(&self, r: Router, baseline: Router) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.router == r && c.baseline == baseline)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

/// Bootstrap interval widened, if needed, to contain the point estimate.
fn mean_ci(xs: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64, f64) {
    let m = mean(xs);
    let (lo, hi) = bootstrap_mean_ci(xs, resamples, level, seed);
    (m, lo.min(m), hi.max(m))
}

fn read_checkpoint(p: &Path, producer: Stage) -> Result<Checkpoint, PipelineError> {
    let bytes = read_input(p, producer)?;
    match parse_json::<Checkpoint>(p, &bytes) {
        Ok(env) => Ok(env.body),
        Err(_) => Checkpoint::from_json(&String::from_utf8_lossy(&bytes)).map_err(PipelineError::from),
    }
}

fn read_instance(p: &Path) -> Result<ProblemInstance, PipelineError> {
    let bytes = read_input(p, Stage::Gen)?;
    match parse_json::<ProblemInstance>(p, &bytes) {
        Ok(env) => Ok(env.body),
        Err(_) => serde_json::from_slice(&bytes)
            .map_err(|e| PipelineError::Format { path: p.display().to_string(), message: e.to_string() }),
    }
}

/// Writes `spec.count` instances as individual files under `out/instances`.
pub fn gen_instance_files(spec: &DatasetSpec, out: &Path, force: bool) -> Result<StageStatus, PipelineError> {
    spec.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    let ws = Workspace::new(out);
    run_stage(&ws, "gen", spec.seed, spec, &[], force, |h| {
        let insts = gen_instances(spec)?;
        Ok(insts
            .iter()
            .enumerate()
            .map(|(i, inst)| (ws.path(&format!("instances/instance_{i:04}.json")), json_bytes(h, inst)))
            .collect())
    })
}

/// Routes one instance file with a saved actor.
pub fn route_instance(policy: &Path, instance: &Path, mode: PolicyMode) -> Result<RouteRecord, PipelineError> {
    let actor = ActorNet::from_checkpoint(&read_checkpoint(policy, Stage::TrainRl)?)?;
    let inst = read_instance(instance)?;
    Ok(RouteRecord::new(0, Router::Fiddle, route_with_policy(&inst, &actor, mode)?))
}

/// A configured pipeline over one work directory.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub ws: Workspace,
    pub cfg: PipelineConfig,
    pub force: bool,
}

impl Pipeline {
    pub fn new(ws: Workspace, cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        Ok(Pipeline { ws, cfg, force: false })
    }

    pub fn run(&self, stage: Stage) -> Result<StageStatus, PipelineError> {
        match stage {
            Stage::Gen => self.gen(),
            Stage::Label => self.label(),
            Stage::TrainEncoder => self.train_encoder(),
            Stage::Select => self.select(),
            Stage::TrainSurrogate => self.train_surrogate(),
            Stage::TrainRl => self.train_rl(),
            Stage::Route => self.route(),
            Stage::Eval => self.eval(),
            Stage::Report => self.report(),
        }
    }

    /// Every stage in order; `progress` sees each result as it completes.
    pub fn run_all(&self, mut progress: impl FnMut(Stage, StageStatus)) -> Result<(), PipelineError> {
        for s in Stage::ALL {
            progress(s, self.run(s)?);
        }
        Ok(())
    }

    fn data(&self, file: &str) -> PathBuf {
        self.ws.dataset.join(file)
    }

    fn stage<C: Serialize>(
        &self,
        stage: Stage,
        config: &C,
        inputs: &[(PathBuf, Stage)],
        body: impl FnOnce(&Header) -> Result<Vec<(PathBuf, Vec<u8>)>, PipelineError>,
    ) -> Result<StageStatus, PipelineError> {
        run_stage(&self.ws, stage.name(), self.cfg.seed, config, inputs, self.force, body)
    }

    fn space(&self, hardware: &HardwareGraph) -> ActionSpace {
        ActionSpace::new(&self.cfg.dataset.gate_set(), hardware)
    }

    fn load_instances(&self, file: &str) -> Result<Vec<ProblemInstance>, PipelineError> {
        Ok(read_jsonl(&self.data(file), Stage::Gen)?.1)
    }

    fn load_encoder(&self) -> Result<Autoencoder, PipelineError> {
        Ok(Autoencoder::from_checkpoint(&read_checkpoint(&self.ws.path(ENCODER_CKPT), Stage::TrainEncoder)?)?)
    }

    fn gen(&self) -> Result<StageStatus, PipelineError> {
        let d = &self.cfg.dataset;
        let seed = self.cfg.seed;
        self.stage(Stage::Gen, d, &[], |h| {
            let draw = |count, tag| gen_instances(&d.spec(count, derive_seed(seed, tag, 0)));
            let enc = draw(d.encoder_instances, "gen.encoder")?;
            let train = draw(d.rl_train_instances, "gen.rl_train")?;
            let test = draw(d.rl_test_instances, "gen.rl_test")?;
            let space = self.space(&enc[0].hardware);
            let per = d.circuits_per_instance;
            let circuits = (0..enc.len() * per)
                .into_par_iter()
                .map(|id| {
                    let instance = id / per;
                    let s = derive_seed(seed, "gen.circuit", id as u64);
                    let out = random_feasible_route(&enc[instance], &space, s, CIRCUIT_ATTEMPTS)?.ok_or_else(|| {
                        PipelineError::Stage(format!(
                            "encoder instance {instance}: no feasible random route in {CIRCUIT_ATTEMPTS} attempts"
                        ))
                    })?;
                    Ok(CircuitRecord { id, instance, seed: s, swaps: out.swaps, table: out.table })
                })
                .collect::<Result<Vec<_>, PipelineError>>()?;
            Ok(vec![
                (self.data(ENCODER_INSTANCES), jsonl_bytes(h, &enc)),
                (self.data(RL_TRAIN), jsonl_bytes(h, &train)),
                (self.data(RL_TEST), jsonl_bytes(h, &test)),
                (self.data(CIRCUITS), jsonl_bytes(h, &circuits)),
            ])
        })
    }

    fn label(&self) -> Result<StageStatus, PipelineError> {
        let seed = self.cfg.seed;
        let oracle = &self.cfg.oracle;
        let count = self.cfg.label.count;
        let inputs = [(self.data(CIRCUITS), Stage::Gen)];
        self.stage(Stage::Label, &(count, oracle), &inputs, |h| {
            let (_, circuits): (_, Vec<CircuitRecord>) = read_jsonl(&self.data(CIRCUITS), Stage::Gen)?;
            if count > circuits.len() {
                return Err(PipelineError::Config(format!("{count} labels requested from {} circuits", circuits.len())));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "label.pick", 0));
            let mut picked = sample(&mut rng, circuits.len(), count).into_vec();
            picked.sort_unstable();
            let labels = picked
                .into_par_iter()
                .map(|i| {
                    let c = &circuits[i];
                    let mode = oracle.fidelity_mode(c.table.rows(), derive_seed(seed, "label", c.id as u64));
                    let f = circuit_fidelity(&c.table, &oracle.noise, mode)?;
                    Ok(LabelRecord {
                        circuit: c.id,
                        latent: None,
                        fidelity: f.value,
                        std_error: f.std_error,
                        mode: f.mode,
                        samples: f.samples,
                        seed: f.seed,
                        noise: oracle.noise.clone(),
                    })
                })
                .collect::<Result<Vec<_>, PipelineError>>()?;
            Ok(vec![(self.ws.labels.clone(), jsonl_bytes(h, &labels))])
        })
    }

    fn train_encoder(&self) -> Result<StageStatus, PipelineError> {
        let cfg = &self.cfg.embed;
        let inputs = [(self.data(CIRCUITS), Stage::Gen), (self.data(ENCODER_INSTANCES), Stage::Gen)];
        self.stage(Stage::TrainEncoder, cfg, &inputs, |h| {
            let (_, circuits): (_, Vec<CircuitRecord>) = read_jsonl(&self.data(CIRCUITS), Stage::Gen)?;
            let insts = self.load_instances(ENCODER_INSTANCES)?;
            let hw = &insts.first().ok_or_else(|| PipelineError::Stage("no encoder instances".into()))?.hardware;
            let data: Vec<EmbedRecord> = circuits.into_iter().map(|c| EmbedRecord::from_table(c.table)).collect();
            let (model, history) = train_autoencoder(&data, hw, cfg)?;
            let loss: Vec<LossRow> =
                history.epoch_loss.iter().enumerate().map(|(epoch, &loss)| LossRow { epoch, loss }).collect();
            Ok(vec![
                (self.ws.path(ENCODER_CKPT), json_bytes(h, &model.to_checkpoint())),
                (self.ws.path(ENCODER_LOSS), csv_bytes(h, &loss)),
            ])
        })
    }

    fn select(&self) -> Result<StageStatus, PipelineError> {
        let seed = self.cfg.seed;
        let sel = &self.cfg.select;
        let test_count = self.cfg.label.test_count;
        let inputs = [
            (self.ws.labels.clone(), Stage::Label),
            (self.data(CIRCUITS), Stage::Gen),
            (self.ws.path(ENCODER_CKPT), Stage::TrainEncoder),
        ];
        self.stage(Stage::Select, &(sel, test_count), &inputs, |h| {
            let (_, mut labels): (_, Vec<LabelRecord>) = read_jsonl(&self.ws.labels, Stage::Label)?;
            let (_, circuits): (_, Vec<CircuitRecord>) = read_jsonl(&self.data(CIRCUITS), Stage::Gen)?;
            let encoder = self.load_encoder()?;
            let by_id: BTreeMap<usize, &CircuitRecord> = circuits.iter().map(|c| (c.id, c)).collect();
            for l in labels.iter_mut() {
                let c = by_id
                    .get(&l.circuit)
                    .ok_or_else(|| PipelineError::Stage(format!("label refers to unknown circuit {}", l.circuit)))?;
                l.latent = Some(encoder.encode(&c.table)?);
            }
            if test_count >= labels.len() {
                return Err(PipelineError::Config(format!("test_count {test_count} leaves no training labels")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "select.split", 0));
            let mut test = sample(&mut rng, labels.len(), test_count).into_vec();
            test.sort_unstable();
            let rest: Vec<usize> = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
            let pool: Vec<Vec<f64>> = rest.iter().map(|&i| labels[i].latent.clone().expect("filled above")).collect();
            let cfg = SelectionConfig { n_select: sel.n_select, epsilon: sel.epsilon, seed: derive_seed(seed, "select", 0) };
            let chosen = select_training_set(&pool, &cfg, &Kernel::default_for(sel.kernel), sel.gamma2)?;
            let split = Split {
                test: test.iter().map(|&i| labels[i].circuit).collect(),
                train: chosen.iter().map(|&k| labels[rest[k]].circuit).collect(),
            };
            Ok(vec![(self.ws.path(POOL), jsonl_bytes(h, &labels)), (self.ws.path(SPLIT), json_bytes(h, &split))])
        })
    }

    fn train_surrogate(&self) -> Result<StageStatus, PipelineError> {
        let cfg = &self.cfg.surrogate;
        let inputs = [(self.ws.path(POOL), Stage::Select), (self.ws.path(SPLIT), Stage::Select)];
        self.stage(Stage::TrainSurrogate, cfg, &inputs, |h| {
            let (_, labels): (_, Vec<LabelRecord>) = read_jsonl(&self.ws.path(POOL), Stage::Select)?;
            let split: Split = read_json(&self.ws.path(SPLIT), Stage::Select)?.body;
            let by_id: BTreeMap<usize, &LabelRecord> = labels.iter().map(|l| (l.circuit, l)).collect();
            let fetch = |ids: &[usize]| -> Result<(Vec<Vec<f64>>, Vec<f64>), PipelineError> {
                ids.iter()
                    .map(|id| {
                        let l = by_id.get(id).ok_or_else(|| PipelineError::Stage(format!("split lists unknown circuit {id}")))?;
                        let z = l.latent.clone().ok_or_else(|| PipelineError::Stage(format!("circuit {id} has no latent")))?;
                        Ok((z, l.fidelity))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(|v| v.into_iter().unzip())
            };
            let (train_z, train_f) = fetch(&split.train)?;
            let (test_z, test_f) = fetch(&split.test)?;
            let (shift, scale) = if cfg.standardize_latents {
                SurrogateArtifact::standardizer(&train_z)
            } else {
                SurrogateArtifact::identity(train_z[0].len())
            };
            let train_x: Vec<Vec<f64>> = train_z.iter().map(|z| transform(z, &shift, &scale)).collect();
            let test_x: Vec<Vec<f64>> = test_z.iter().map(|z| transform(z, &shift, &scale)).collect();

            let mut fits = Vec::new();
            let mut best: Option<(f64, SurrogateFile)> = None;
            for &kind in &cfg.kernels {
                let (model, report) = fit_hyperparameters(&train_x, &train_f, kind, &cfg.grid)?;
                let pred = test_x.iter().map(|x| model.predict_mean(x)).collect::<Result<Vec<_>, _>>()?;
                let err = rmse(&pred, &test_f)?;
                if best.as_ref().is_none_or(|(b, _)| err < *b) {
                    best = Some((err, model.to_file()));
                }
                fits.push(KernelFit {
                    kind,
                    kernel: report.kernel,
                    gamma2: report.gamma2,
                    log_marginal_likelihood: report.log_marginal_likelihood,
                    rmse: err,
                });
            }
            let (best_rmse, gp) = best.expect("kernel list validated non-empty");
            let rows: Vec<RmseRow> = fits
                .iter()
                .map(|f| RmseRow {
                    kernel: f.kind.name().to_string(),
                    rmse: f.rmse,
                    log_marginal_likelihood: f.log_marginal_likelihood,
                    gamma2: f.gamma2,
                    selected: f.rmse == best_rmse && f.kind == gp.kernel.kind(),
                })
                .collect();

            let all_z: Vec<Vec<f64>> = labels.iter().filter_map(|l| l.latent.clone()).collect();
            let all_f: Vec<f64> = labels.iter().map(|l| l.fidelity).collect();
            let pearson_r = match latent_fidelity_correlation(&all_z, &all_f) {
                Ok(r) => Some(r),
                Err(SurrogateError::ZeroVariance(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let corr = vec![CorrelationRow { set: "labeled".into(), circuits: all_z.len(), pearson_r }];
            let artifact = SurrogateArtifact { gp, latent_shift: shift, latent_scale: scale };
            Ok(vec![
                (self.ws.path(SURROGATE), json_bytes(h, &artifact)),
                (self.ws.path(FITS), json_bytes(h, &fits)),
                (self.ws.path(RMSE), csv_bytes(h, &rows)),
                (self.ws.path(CORRELATION), csv_bytes(h, &corr)),
            ])
        })
    }

    fn train_rl(&self) -> Result<StageStatus, PipelineError> {
        let seed = self.cfg.seed;
        let rl = &self.cfg.rl;
        let attempts = self.cfg.eval.random_attempts;
        let inputs = [
            (self.data(RL_TRAIN), Stage::Gen),
            (self.ws.path(ENCODER_CKPT), Stage::TrainEncoder),
            (self.ws.path(SURROGATE), Stage::TrainSurrogate),
        ];
        self.stage(Stage::TrainRl, &(rl, attempts), &inputs, |h| {
            let insts = self.load_instances(RL_TRAIN)?;
            let first = insts.first().ok_or_else(|| PipelineError::Stage("no RL training instances".into()))?;
            let artifact: SurrogateArtifact = read_json(&self.ws.path(SURROGATE), Stage::TrainSurrogate)?.body;
            let est = LatentSurrogate::new(self.load_encoder()?, artifact)?;
            let space = self.space(&first.hardware);

            let baseline: Vec<f64> = insts
                .par_iter()
                .enumerate()
                .map(|(i, inst)| {
                    let out = random_feasible_route(inst, &space, derive_seed(seed, "rl.baseline", i as u64), attempts)?;
                    out.map(|o| est.predict(&o.table)).transpose().map_err(PipelineError::from)
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .flatten()
                .collect();
            let random_fid = mean(&baseline);

            let (actor, critic, report) = train_rl(&insts, &space, &est, rl)?;
            let log: Vec<TrainLogRow> = report
                .episodes
                .chunks(rl.log_interval)
                .map(|chunk| {
                    let feasible: Vec<&EpisodeRecord> = chunk.iter().filter(|e| e.feasible).collect();
                    let est_mean = (!feasible.is_empty())
                        .then(|| feasible.iter().map(|e| e.estimate).sum::<f64>() / feasible.len() as f64);
                    TrainLogRow {
                        episode: chunk.last().map_or(0, |e| e.episode + 1),
                        feasibility_rate: feasible.len() as f64 / chunk.len() as f64,
                        mean_return: mean(&chunk.iter().map(|e| e.episode_return).collect::<Vec<_>>()),
                        mean_surrogate_fidelity: est_mean,
                        random_surrogate_fidelity: random_fid,
                        improvement: est_mean.filter(|_| random_fid > 0.0).map(|m| m / random_fid - 1.0),
                    }
                })
                .collect();
            Ok(vec![
                (self.ws.path(ACTOR), json_bytes(h, &actor.to_checkpoint())),
                (self.ws.path(CRITIC), json_bytes(h, &critic.to_checkpoint())),
                (self.ws.path(TRAIN_LOG), csv_bytes(h, &log)),
                (self.ws.path(EPISODES), csv_bytes(h, &report.episodes)),
            ])
        })
    }

    fn routes_path(&self, r: Router) -> PathBuf {
        self.ws.path(&format!("routes/{}.jsonl", r.name()))
    }

    fn route(&self) -> Result<StageStatus, PipelineError> {
        let seed = self.cfg.seed;
        let routers = &self.cfg.eval.routers;
        let attempts = self.cfg.eval.random_attempts;
        let mut inputs = vec![(self.data(RL_TEST), Stage::Gen)];
        if routers.contains(&Router::Fiddle) {
            inputs.push((self.ws.path(ACTOR), Stage::TrainRl));
        }
        self.stage(Stage::Route, &(routers, attempts), &inputs, |h| {
            let insts = self.load_instances(RL_TEST)?;
            let first = insts.first().ok_or_else(|| PipelineError::Stage("no test instances".into()))?;
            let space = self.space(&first.hardware);
            let actor = if routers.contains(&Router::Fiddle) {
                Some(ActorNet::from_checkpoint(&read_checkpoint(&self.ws.path(ACTOR), Stage::TrainRl)?)?)
            } else {
                None
            };
            let mut outputs = Vec::new();
            for &r in routers {
                let records = insts
                    .par_iter()
                    .enumerate()
                    .map(|(i, inst)| {
                        let out = match r {
                            Router::Fiddle => {
                                route_with_policy(inst, actor.as_ref().expect("loaded above"), PolicyMode::Greedy)?
                            }
                            Router::DepthGreedy => depth_greedy_route(inst, &space)?,
                            Router::Random => {
                                let s = derive_seed(seed, "route.random", i as u64);
                                match random_feasible_route(inst, &space, s, attempts)? {
                                    Some(o) => o,
                                    None => random_route(inst, &space, &mut ChaCha8Rng::seed_from_u64(s))?,
                                }
                            }
                        };
                        Ok(RouteRecord::new(i, r, out))
                    })
                    .collect::<Result<Vec<_>, PipelineError>>()?;
                outputs.push((self.routes_path(r), jsonl_bytes(h, &records)));
            }
            Ok(outputs)
        })
    }

    fn eval(&self) -> Result<StageStatus, PipelineError> {
        let seed = self.cfg.seed;
        let (oracle, ev) = (&self.cfg.oracle, &self.cfg.eval);
        let inputs: Vec<_> = ev.routers.iter().map(|&r| (self.routes_path(r), Stage::Route)).collect();
        self.stage(Stage::Eval, &(oracle, ev), &inputs, |h| {
            let mut rows = Vec::new();
            let mut per_router: Vec<(Router, Vec<f64>)> = Vec::new();
            for (k, &r) in ev.routers.iter().enumerate() {
                let (_, routes): (_, Vec<RouteRecord>) = read_jsonl(&self.routes_path(r), Stage::Route)?;
                let scored = routes
                    .par_iter()
                    .map(|rec| {
                        if !rec.feasible {
                            return Ok((0.0, None));
                        }
                        let task = (k * routes.len() + rec.instance) as u64;
                        let mode = oracle.fidelity_mode(rec.table.rows(), derive_seed(seed, "eval", task));
                        let f = circuit_fidelity(&rec.table, &oracle.noise, mode)?;
                        Ok((f.value.clamp(0.0, 1.0), f.std_error))
                    })
                    .collect::<Result<Vec<_>, PipelineError>>()?;
                for (rec, &(fidelity, std_error)) in routes.iter().zip(&scored) {
                    rows.push(EvalRow {
                        instance: rec.instance,
                        router: r,
                        feasible: rec.feasible,
                        swaps: rec.swaps,
                        depth: rec.table.depth(),
                        fidelity,
                        std_error,
                    });
                }
                per_router.push((r, scored.iter().map(|s| s.0).collect()));
            }
            let mut report = EvalReport { confidence: ev.confidence, routers: Vec::new(), comparisons: Vec::new() };
            for (k, (r, fids)) in per_router.iter().enumerate() {
                let mine: Vec<&EvalRow> = rows.iter().filter(|row| row.router == *r).collect();
                let (m, lo, hi) = mean_ci(fids, ev.bootstrap_resamples, ev.confidence, derive_seed(seed, "eval.ci", k as u64));
                report.routers.push(RouterSummary {
                    router: *r,
                    instances: fids.len(),
                    feasibility_rate: mine.iter().filter(|row| row.feasible).count() as f64 / mine.len().max(1) as f64,
                    mean_fidelity: m,
                    ci_lo: lo,
                    ci_hi: hi,
                    mean_swaps: mean(&mine.iter().map(|row| row.swaps as f64).collect::<Vec<_>>()),
                });
            }
            if let Some((_, ours)) = per_router.iter().find(|(r, _)| *r == Router::Fiddle) {
                for (k, (b, theirs)) in per_router.iter().enumerate().filter(|(_, (r, _))| *r != Router::Fiddle) {
                    if theirs.len() != ours.len() {
                        return Err(PipelineError::Stage(format!("{} and fiddle routed different instance sets", b.name())));
                    }
                    let diff: Vec<f64> = ours.iter().zip(theirs).map(|(a, b)| a - b).collect();
                    let (m, lo, hi) =
                        mean_ci(&diff, ev.bootstrap_resamples, ev.confidence, derive_seed(seed, "eval.paired", k as u64));
                    report.comparisons.push(Comparison {
                        router: Router::Fiddle,
                        baseline: *b,
                        mean_difference: m,
                        ci_lo: lo,
                        ci_hi: hi,
                    });
                }
            }
            Ok(vec![(self.ws.path(PER_INSTANCE), csv_bytes(h, &rows)), (self.ws.path(SUMMARY), json_bytes(h, &report))])
        })
    }

    fn report(&self) -> Result<StageStatus, PipelineError> {
        let inputs = [
            (self.ws.path(TRAIN_LOG), Stage::TrainRl),
            (self.ws.path(RMSE), Stage::TrainSurrogate),
            (self.ws.path(CORRELATION), Stage::TrainSurrogate),
            (self.ws.path(SUMMARY), Stage::Eval),
        ];
        self.stage(Stage::Report, &(), &inputs, |h| {
            let log: Vec<TrainLogRow> = read_csv(&self.ws.path(TRAIN_LOG), Stage::TrainRl)?;
            let rmse_rows: Vec<RmseRow> = read_csv(&self.ws.path(RMSE), Stage::TrainSurrogate)?;
            let corr: Vec<CorrelationRow> = read_csv(&self.ws.path(CORRELATION), Stage::TrainSurrogate)?;
            let summary: EvalReport = read_json(&self.ws.path(SUMMARY), Stage::Eval)?.body;

            #[derive(Serialize)]
            struct Feasibility {
                episode: usize,
                feasibility_rate: f64,
            }
            #[derive(Serialize)]
            struct Improvement {
                episode: usize,
                mean_surrogate_fidelity: Option<f64>,
                random_surrogate_fidelity: f64,
                improvement: Option<f64>,
            }
            #[derive(Serialize)]
            struct KernelRmse {
                kernel: String,
                rmse: f64,
            }
            let feas: Vec<_> =
                log.iter().map(|r| Feasibility { episode: r.episode, feasibility_rate: r.feasibility_rate }).collect();
            let imp: Vec<_> = log
                .iter()
                .map(|r| Improvement {
                    episode: r.episode,
                    mean_surrogate_fidelity: r.mean_surrogate_fidelity,
                    random_surrogate_fidelity: r.random_surrogate_fidelity,
                    improvement: r.improvement,
                })
                .collect();
            let kr: Vec<_> = rmse_rows.iter().map(|r| KernelRmse { kernel: r.kernel.clone(), rmse: r.rmse }).collect();
            let out = |f: &str| self.ws.report.join(f);
            Ok(vec![
                (out("feasibility.csv"), csv_bytes(h, &feas)),
                (out("improvement.csv"), csv_bytes(h, &imp)),
                (out("correlation.csv"), csv_bytes(h, &corr)),
                (out("surrogate_rmse.csv"), csv_bytes(h, &kr)),
                (out("eval_summary.csv"), csv_bytes(h, &summary.routers)),
                (out("eval_comparisons.csv"), csv_bytes(h, &summary.comparisons)),
            ])
        })
    }
}
