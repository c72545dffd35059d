use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Observation, Observer, RlError};
use crate::circuit::HardwareGraph;
use crate::embed::{gcn_dense, normalize_adjacency, Tgcn};
use crate::nn::{Affine, Checkpoint, NnError, ParamId, ParamStore, Tape, Tensor, Var};
use crate::route::ActionSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Width of both graph branches.
    pub d_h: usize,
    /// Width of the hidden layer in the head.
    pub hidden: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig { d_h: 8, hidden: 32 }
    }
}

#[derive(Serialize, Deserialize)]
struct Extra {
    kind: String,
    space: ActionSpace,
    hardware: HardwareGraph,
    config: NetConfig,
}

/// Physical TGCN branch, logical GCN branch and a two-layer head.
#[derive(Clone, Debug)]
struct Net {
    store: ParamStore,
    phys: Tgcn,
    logic0: ParamId,
    logic1: ParamId,
    hidden: Affine,
    out: Affine,
    hw_adj: Tensor,
    observer: Observer,
    space: ActionSpace,
    hardware: HardwareGraph,
    config: NetConfig,
}

impl Net {
    fn new(space: &ActionSpace, hardware: &HardwareGraph, config: NetConfig, outputs: usize, seed: u64) -> Result<Self, RlError> {
        if config.d_h == 0 || config.hidden == 0 {
            return Err(RlError::InvalidConfig("network widths must be positive".into()));
        }
        let observer = Observer::new(space, hardware);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let phys = Tgcn::new(&mut store, "phys", observer.encoding().width(), config.d_h, &mut rng)?;
        let logic0 = store.xavier("logic.gcn0", observer.logical_width(), config.d_h, &mut rng)?;
        let logic1 = store.xavier("logic.gcn1", config.d_h, config.d_h, &mut rng)?;
        let head_in = hardware.n_qubits() * config.d_h + config.d_h + observer.routing_width();
        let hidden = Affine::new(&mut store, "head.hidden", head_in, config.hidden, &mut rng)?;
        let out = Affine::new(&mut store, "head.out", config.hidden, outputs, &mut rng)?;
        Ok(Net {
            store,
            phys,
            logic0,
            logic1,
            hidden,
            out,
            hw_adj: normalize_adjacency(hardware),
            observer,
            space: space.clone(),
            hardware: hardware.clone(),
            config,
        })
    }

    fn forward(&self, tape: &mut Tape, store: &ParamStore, obs: &Observation) -> Result<Var, RlError> {
        let adj = tape.constant(self.hw_adj.clone());
        let h = self.phys.forward(tape, store, adj, &obs.columns)?;
        let phys = tape.flatten(h);

        let n_targets = obs.logical.rows();
        let logical = if n_targets == 0 {
            tape.constant(Tensor::zeros(1, self.config.d_h))
        } else {
            let feats = tape.constant(obs.logical.clone());
            let dep = tape.constant(obs.dep_adj.clone());
            let w0 = tape.param(store, self.logic0);
            let w1 = tape.param(store, self.logic1);
            let g = gcn_dense(tape, dep, feats, w0, w1)?;
            let pool = tape.constant(Tensor::filled(1, n_targets, 1.0 / n_targets as f64));
            tape.matmul(pool, g)?
        };
        let routing = tape.constant(Tensor::row(obs.routing.clone()));
        let x = tape.concat_cols(phys, logical)?;
        let x = tape.concat_cols(x, routing)?;
        let a = self.hidden.apply(tape, store, x)?;
        let a = tape.relu(a);
        Ok(self.out.apply(tape, store, a)?)
    }

    fn to_checkpoint(&self, kind: &str) -> Checkpoint {
        let extra = Extra { kind: kind.into(), space: self.space.clone(), hardware: self.hardware.clone(), config: self.config };
        self.store.to_checkpoint(serde_json::to_value(extra).expect("extra serializes"))
    }

    fn from_checkpoint(ckpt: &Checkpoint, kind: &str) -> Result<Self, RlError> {
        let extra: Extra = serde_json::from_value(ckpt.extra.clone()).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        if extra.kind != kind {
            return Err(RlError::Checkpoint(format!("expected {kind}, found {}", extra.kind)));
        }
        let store = ParamStore::from_checkpoint(ckpt)?;
        let get = |s: &str| store.id(s).ok_or_else(|| NnError::UnknownParam(s.into()));
        Ok(Net {
            phys: Tgcn::lookup(&store, "phys")?,
            logic0: get("logic.gcn0")?,
            logic1: get("logic.gcn1")?,
            hidden: Affine::lookup(&store, "head.hidden")?,
            out: Affine::lookup(&store, "head.out")?,
            hw_adj: normalize_adjacency(&extra.hardware),
            observer: Observer::new(&extra.space, &extra.hardware),
            store,
            space: extra.space,
            hardware: extra.hardware,
            config: extra.config,
        })
    }
}

/// Policy network: one logit per action, softmax over legal actions only.
#[derive(Clone, Debug)]
pub struct ActorNet(Net);

impl ActorNet {
    pub fn new(space: &ActionSpace, hardware: &HardwareGraph, config: NetConfig, seed: u64) -> Result<Self, RlError> {
        Ok(ActorNet(Net::new(space, hardware, config, space.len(), seed)?))
    }

    pub fn store(&self) -> &ParamStore {
        &self.0.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.0.store
    }

    pub fn observer(&self) -> &Observer {
        &self.0.observer
    }

    pub fn space(&self) -> &ActionSpace {
        &self.0.space
    }

    pub fn logits(&self, tape: &mut Tape, store: &ParamStore, obs: &Observation) -> Result<Var, RlError> {
        self.0.forward(tape, store, obs)
    }

    /// Log-probabilities under `store`; masked entries read 0.
    pub fn log_probs(&self, tape: &mut Tape, store: &ParamStore, obs: &Observation) -> Result<Var, RlError> {
        let logits = self.logits(tape, store, obs)?;
        Ok(tape.masked_log_softmax(logits, &obs.mask)?)
    }

    /// Action probabilities: exactly 0 on masked actions, summing to 1 over legal ones.
    pub fn probabilities(&self, obs: &Observation) -> Result<Vec<f64>, RlError> {
        let mut tape = Tape::new();
        let lp = self.log_probs(&mut tape, &self.0.store, obs)?;
        Ok(tape.value(lp).data().iter().zip(&obs.mask).map(|(&l, &m)| if m { l.exp() } else { 0.0 }).collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        self.0.to_checkpoint("actor")
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, RlError> {
        Ok(ActorNet(Net::from_checkpoint(ckpt, "actor")?))
    }
}

/// State-value network.
#[derive(Clone, Debug)]
pub struct CriticNet(Net);

impl CriticNet {
    pub fn new(space: &ActionSpace, hardware: &HardwareGraph, config: NetConfig, seed: u64) -> Result<Self, RlError> {
        Ok(CriticNet(Net::new(space, hardware, config, 1, seed)?))
    }

    pub fn store(&self) -> &ParamStore {
        &self.0.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.0.store
    }

    pub fn observer(&self) -> &Observer {
        &self.0.observer
    }

    pub fn value_var(&self, tape: &mut Tape, store: &ParamStore, obs: &Observation) -> Result<Var, RlError> {
        self.0.forward(tape, store, obs)
    }

    pub fn value(&self, obs: &Observation) -> Result<f64, RlError> {
        let mut tape = Tape::new();
        let v = self.value_var(&mut tape, &self.0.store, obs)?;
        Ok(tape.value(v).item())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        self.0.to_checkpoint("critic")
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, RlError> {
        Ok(CriticNet(Net::from_checkpoint(ckpt, "critic")?))
    }
}
