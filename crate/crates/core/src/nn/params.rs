use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NnError, Tensor};

const FORMAT: &str = "fiddle-params";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable tensors with their accumulated gradients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    grads: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<ParamId, NnError> {
        if self.id(name).is_some() {
            return Err(NnError::Checkpoint(format!("duplicate parameter {name}")));
        }
        self.names.push(name.to_string());
        self.grads.push(Tensor::zeros(value.rows(), value.cols()));
        self.values.push(value);
        Ok(ParamId(self.values.len() - 1))
    }

    /// Uniform in `±sqrt(6 / (rows + cols))`.
    pub fn xavier<R: Rng + ?Sized>(&mut self, name: &str, rows: usize, cols: usize, rng: &mut R) -> Result<ParamId, NnError> {
        let bound = (6.0 / (rows + cols).max(1) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect();
        self.insert(name, Tensor::new(rows, cols, data)?)
    }

    pub fn zeros(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId, NnError> {
        self.insert(name, Tensor::zeros(rows, cols))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, g: &Tensor) {
        self.grads[id.0].add_assign(g);
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Multiplies every stored gradient by `k`.
    pub fn scale_grads(&mut self, k: f64) {
        for g in &mut self.grads {
            g.data_mut().iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    pub fn to_checkpoint(&self, extra: serde_json::Value) -> Checkpoint {
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            params: self
                .names
                .iter()
                .zip(&self.values)
                .map(|(n, v)| ParamEntry { id: n.clone(), shape: [v.rows(), v.cols()], values: v.data().to_vec() })
                .collect(),
            extra,
        }
    }

    /// Overwrites values from `ckpt`. Every parameter must be present with a matching shape.
    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<(), NnError> {
        ckpt.check_header()?;
        for (i, name) in self.names.iter().enumerate() {
            let entry = ckpt
                .params
                .iter()
                .find(|e| &e.id == name)
                .ok_or_else(|| NnError::UnknownParam(name.clone()))?;
            let t = Tensor::new(entry.shape[0], entry.shape[1], entry.values.clone())?;
            if t.shape() != self.values[i].shape() {
                return Err(NnError::Shape { op: "load_checkpoint", left: self.values[i].shape(), right: t.shape() });
            }
            self.values[i] = t;
        }
        self.zero_grad();
        Ok(())
    }

    /// Rebuilds a store holding exactly the checkpoint's parameters.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, NnError> {
        ckpt.check_header()?;
        let mut store = ParamStore::new();
        for e in &ckpt.params {
            store.insert(&e.id, Tensor::new(e.shape[0], e.shape[1], e.values.clone())?)?;
        }
        Ok(store)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub id: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

/// Serialized parameter set. `extra` carries model-specific settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: Vec<ParamEntry>,
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl Checkpoint {
    fn check_header(&self) -> Result<(), NnError> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(NnError::Checkpoint(format!("unsupported format {} v{}", self.format, self.version)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, NnError> {
        let c: Checkpoint = serde_json::from_str(s).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        c.check_header()?;
        Ok(c)
    }
}

/// `value -= lr * grad` for every parameter, then clears gradients. Refuses to touch
/// anything if a gradient is non-finite.
pub fn sgd_step(store: &mut ParamStore, lr: f64) -> Result<(), NnError> {
    if let Some(i) = store.grads.iter().position(|g| !g.is_finite()) {
        return Err(NnError::NonFiniteGradient(store.names[i].clone()));
    }
    for (v, g) in store.values.iter_mut().zip(&store.grads) {
        v.data_mut().iter_mut().zip(g.data()).for_each(|(x, d)| *x -= lr * d);
    }
    store.zero_grad();
    Ok(())
}
