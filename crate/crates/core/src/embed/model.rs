use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{normalize_adjacency, EmbedError, FeatureEncoding, Tgcn};
use crate::circuit::{trait_vector, CircuitTable, HardwareGraph, TraitVector};
use crate::nn::{sgd_step, Affine, Checkpoint, ParamStore, Tape, Tensor, Var};

const TRAITS: usize = 4;

/// One line of an embedding dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRecord {
    pub circuit_table: CircuitTable,
    pub trait_vector: TraitVector,
}

impl EmbedRecord {
    pub fn from_table(table: CircuitTable) -> Self {
        let trait_vector = trait_vector(&table);
        EmbedRecord { circuit_table: table, trait_vector }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedTrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub d_z: usize,
    pub d_h: usize,
}

impl EmbedTrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        EmbedTrainConfig { lr: 0.01, epochs: 300, batch_size: 16, seed, d_z: 16, d_h: 16 }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::InvalidConfig(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.d_z == 0 || self.d_h == 0 {
            return bad("widths must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean per-sample loss of each epoch, in standardized trait units.
    pub epoch_loss: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Extra {
    kind: String,
    vocabulary: FeatureEncoding,
    hardware: HardwareGraph,
    trait_mean: [f64; TRAITS],
    trait_std: [f64; TRAITS],
    d_z: usize,
    d_h: usize,
}

/// Encoder (graph-recurrent net plus projection) and two-layer decoder sharing one
/// parameter store, bound to a hardware graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Autoencoder {
    store: ParamStore,
    tgcn: Tgcn,
    project: Affine,
    dec_hidden: Affine,
    dec_out: Affine,
    encoding: FeatureEncoding,
    hardware: HardwareGraph,
    adj: Tensor,
    trait_mean: [f64; TRAITS],
    trait_std: [f64; TRAITS],
    d_z: usize,
}

impl Autoencoder {
    pub fn new(hardware: &HardwareGraph, d_h: usize, d_z: usize, seed: u64) -> Result<Self, EmbedError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init(hardware, d_h, d_z, &mut rng)
    }

    fn init(hardware: &HardwareGraph, d_h: usize, d_z: usize, rng: &mut ChaCha8Rng) -> Result<Self, EmbedError> {
        let encoding = FeatureEncoding::for_hardware(hardware);
        let n = hardware.n_qubits();
        let mut store = ParamStore::new();
        let tgcn = Tgcn::new(&mut store, "enc.tgcn", encoding.width(), d_h, rng)?;
        let project = Affine::new(&mut store, "enc.project", n * d_h, d_z, rng)?;
        let dec_hidden = Affine::new(&mut store, "dec.hidden", d_z, d_h, rng)?;
        let dec_out = Affine::new(&mut store, "dec.out", d_h, TRAITS, rng)?;
        Ok(Autoencoder {
            store,
            tgcn,
            project,
            dec_hidden,
            dec_out,
            encoding,
            adj: normalize_adjacency(hardware),
            hardware: hardware.clone(),
            trait_mean: [0.0; TRAITS],
            trait_std: [1.0; TRAITS],
            d_z,
        })
    }

    pub fn latent_width(&self) -> usize {
        self.d_z
    }

    pub fn hidden_width(&self) -> usize {
        self.tgcn.hidden_width()
    }

    pub fn hardware(&self) -> &HardwareGraph {
        &self.hardware
    }

    pub fn encoding(&self) -> &FeatureEncoding {
        &self.encoding
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn trait_stats(&self) -> ([f64; TRAITS], [f64; TRAITS]) {
        (self.trait_mean, self.trait_std)
    }

    pub fn columns(&self, table: &CircuitTable) -> Result<Vec<Vec<usize>>, EmbedError> {
        if table.rows() != self.hardware.n_qubits() {
            return Err(EmbedError::RowMismatch { table: table.rows(), hardware: self.hardware.n_qubits() });
        }
        self.encoding.columns(table)
    }

    /// Final recurrent state, `n x d_h`.
    pub fn hidden_state(&self, table: &CircuitTable) -> Result<Tensor, EmbedError> {
        let cols = self.columns(table)?;
        let mut t = Tape::new();
        let adj = t.constant(self.adj.clone());
        let h = self.tgcn.forward(&mut t, &self.store, adj, &cols)?;
        Ok(t.value(h).clone())
    }

    fn encode_cols(&self, t: &mut Tape, cols: &[Vec<usize>]) -> Result<Var, EmbedError> {
        let adj = t.constant(self.adj.clone());
        let h = self.tgcn.forward(t, &self.store, adj, cols)?;
        let flat = t.flatten(h);
        let z = self.project.apply(t, &self.store, flat)?;
        Ok(t.relu(z))
    }

    fn decode_var(&self, t: &mut Tape, z: Var) -> Result<Var, EmbedError> {
        let a = self.dec_hidden.apply(t, &self.store, z)?;
        let a = t.relu(a);
        Ok(self.dec_out.apply(t, &self.store, a)?)
    }

    /// Latent vector of `table`; every component is non-negative.
    pub fn encode(&self, table: &CircuitTable) -> Result<Vec<f64>, EmbedError> {
        let cols = self.columns(table)?;
        let mut t = Tape::new();
        let z = self.encode_cols(&mut t, &cols)?;
        Ok(t.value(z).data().to_vec())
    }

    /// Raw decoder output in standardized trait units.
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>, EmbedError> {
        let mut t = Tape::new();
        let zv = t.constant(Tensor::row(z.to_vec()));
        let y = self.decode_var(&mut t, zv)?;
        Ok(t.value(y).data().to_vec())
    }

    /// Decoded traits mapped back to `[depth, CX, RZ, RX]` units.
    pub fn reconstruct(&self, table: &CircuitTable) -> Result<[f64; TRAITS], EmbedError> {
        let y = self.decode(&self.encode(table)?)?;
        Ok(std::array::from_fn(|i| y[i] * self.trait_std[i] + self.trait_mean[i]))
    }

    pub fn standardize(&self, tv: &TraitVector) -> [f64; TRAITS] {
        let raw = tv.to_array();
        std::array::from_fn(|i| (raw[i] - self.trait_mean[i]) / self.trait_std[i])
    }

    /// Builds the reconstruction loss for one sample; `target` is in standardized units.
    pub fn loss_tape(&self, cols: &[Vec<usize>], target: &[f64; TRAITS]) -> Result<(Tape, Var), EmbedError> {
        let mut t = Tape::new();
        let z = self.encode_cols(&mut t, cols)?;
        let y = self.decode_var(&mut t, z)?;
        let target = t.constant(Tensor::row(target.to_vec()));
        let loss = t.mse(y, target)?;
        Ok((t, loss))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let extra = Extra {
            kind: "autoencoder".into(),
            vocabulary: self.encoding.clone(),
            hardware: self.hardware.clone(),
            trait_mean: self.trait_mean,
            trait_std: self.trait_std,
            d_z: self.d_z,
            d_h: self.tgcn.hidden_width(),
        };
        self.store.to_checkpoint(serde_json::to_value(extra).expect("extra serializes"))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, EmbedError> {
        let extra: Extra = serde_json::from_value(ckpt.extra.clone()).map_err(|e| EmbedError::Checkpoint(e.to_string()))?;
        if extra.kind != "autoencoder" {
            return Err(EmbedError::Checkpoint(format!("expected an autoencoder, found {}", extra.kind)));
        }
        if extra.vocabulary != FeatureEncoding::for_hardware(&extra.hardware) {
            return Err(EmbedError::Checkpoint("vocabulary does not match the hardware graph".into()));
        }
        let store = ParamStore::from_checkpoint(ckpt)?;
        Ok(Autoencoder {
            tgcn: Tgcn::lookup(&store, "enc.tgcn")?,
            project: Affine::lookup(&store, "enc.project")?,
            dec_hidden: Affine::lookup(&store, "dec.hidden")?,
            dec_out: Affine::lookup(&store, "dec.out")?,
            store,
            encoding: extra.vocabulary,
            adj: normalize_adjacency(&extra.hardware),
            hardware: extra.hardware,
            trait_mean: extra.trait_mean,
            trait_std: extra.trait_std,
            d_z: extra.d_z,
        })
    }
}

fn trait_stats(data: &[EmbedRecord]) -> ([f64; TRAITS], [f64; TRAITS]) {
    let n = data.len() as f64;
    let rows: Vec<[f64; TRAITS]> = data.iter().map(|r| r.trait_vector.to_array()).collect();
    let mean: [f64; TRAITS] = std::array::from_fn(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n);
    let std = std::array::from_fn(|i| {
        let var = rows.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / n;
        if var > 1e-12 {
            var.sqrt()
        } else {
            1.0
        }
    });
    (mean, std)
}

/// Mini-batch SGD on the mean squared reconstruction error of standardized traits.
pub fn train_autoencoder(
    data: &[EmbedRecord],
    hardware: &HardwareGraph,
    cfg: &EmbedTrainConfig,
) -> Result<(Autoencoder, TrainHistory), EmbedError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(EmbedError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Autoencoder::init(hardware, cfg.d_h, cfg.d_z, &mut rng)?;
    (model.trait_mean, model.trait_std) = trait_stats(data);

    let prepared = data
        .iter()
        .map(|r| Ok((model.columns(&r.circuit_table)?, model.standardize(&r.trait_vector))))
        .collect::<Result<Vec<_>, EmbedError>>()?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = TrainHistory::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for &i in batch {
                let (cols, target) = &prepared[i];
                let (tape, loss) = model.loss_tape(cols, target)?;
                let value = tape.value(loss).item();
                if !value.is_finite() {
                    return Err(EmbedError::NonFiniteLoss { epoch, sample: i, loss: value });
                }
                total += value;
                tape.backward(loss, &mut model.store)?;
            }
            model.store.scale_grads(1.0 / batch.len() as f64);
            sgd_step(&mut model.store, cfg.lr)?;
        }
        history.epoch_loss.push(total / data.len() as f64);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::NativeGate;

    fn toy_table() -> CircuitTable {
        let mut t = CircuitTable::new(3, 6);
        t.place(0, NativeGate::cx(0, 1)).unwrap();
        t.place(1, NativeGate::rz(0.4, 1)).unwrap();
        t.place(2, NativeGate::cx(0, 1)).unwrap();
        t.place(2, NativeGate::rx(0.1, 2)).unwrap();
        t
    }

    #[test]
    fn latents_are_non_negative_and_deterministic() {
        let m = Autoencoder::new(&HardwareGraph::path(3), 8, 6, 3).unwrap();
        let z = m.encode(&toy_table()).unwrap();
        assert_eq!(z.len(), 6);
        assert!(z.iter().all(|&v| v >= 0.0));
        assert_eq!(z, m.encode(&toy_table()).unwrap());
    }

    #[test]
    fn zero_decoder_returns_output_bias() {
        let mut m = Autoencoder::new(&HardwareGraph::path(3), 8, 6, 3).unwrap();
        let ids: Vec<_> = m.store.ids().filter(|&id| m.store.name(id).starts_with("dec.")).collect();
        for id in ids {
            m.store.value_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let b = m.dec_out.b;
        m.store.value_mut(b).data_mut().copy_from_slice(&[1.0, -2.0, 0.5, 3.0]);
        assert_eq!(m.decode(&[0.7; 6]).unwrap(), vec![1.0, -2.0, 0.5, 3.0]);
    }

    #[test]
    fn wrong_row_count_is_rejected() {
        let m = Autoencoder::new(&HardwareGraph::path(4), 4, 4, 0).unwrap();
        assert!(matches!(m.encode(&toy_table()), Err(EmbedError::RowMismatch { .. })));
    }
}
