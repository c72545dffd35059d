use rand::Rng;

use super::EmbedError;
use crate::circuit::HardwareGraph;
use crate::nn::{Affine, NnError, ParamId, ParamStore, Tape, Tensor, Var};

/// `D^-1/2 (A + I) D^-1/2` for the hardware graph.
pub fn normalize_adjacency(gh: &HardwareGraph) -> Tensor {
    normalize_edges(gh.n_qubits(), gh.edges())
}

/// Same normalization for an arbitrary edge list, read as undirected.
pub fn normalize_edges(n: usize, edges: &[(usize, usize)]) -> Tensor {
    let mut a = vec![0.0; n * n];
    for &(u, v) in edges {
        a[u * n + v] = 1.0;
        a[v * n + u] = 1.0;
    }
    for i in 0..n {
        a[i * n + i] += 1.0;
    }
    let scale: Vec<f64> = (0..n).map(|i| a[i * n..(i + 1) * n].iter().sum::<f64>().sqrt().recip()).collect();
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] *= scale[i] * scale[j];
        }
    }
    Tensor::new(n, n, a).expect("square")
}

/// `sigmoid(adj * relu(adj * x * w0) * w1)` on the tape.
pub fn gcn_dense(tape: &mut Tape, adj: Var, x: Var, w0: Var, w1: Var) -> Result<Var, NnError> {
    let xw = tape.matmul(x, w0)?;
    gcn_tail(tape, adj, xw, w1)
}

/// Same as [`gcn_dense`] for one-hot rows given by their active slot.
pub fn gcn_onehot(tape: &mut Tape, adj: Var, slots: &[usize], w0: Var, w1: Var) -> Result<Var, NnError> {
    let xw = tape.gather_rows(w0, slots)?;
    gcn_tail(tape, adj, xw, w1)
}

fn gcn_tail(tape: &mut Tape, adj: Var, xw: Var, w1: Var) -> Result<Var, NnError> {
    let a = tape.matmul(adj, xw)?;
    let r = tape.relu(a);
    let b = tape.matmul(adj, r)?;
    let c = tape.matmul(b, w1)?;
    Ok(tape.sigmoid(c))
}

/// Two-layer graph convolution evaluated outside of training.
pub fn gcn_forward(features: &Tensor, adj: &Tensor, w0: &Tensor, w1: &Tensor) -> Result<Tensor, NnError> {
    let mut t = Tape::new();
    let vars = [features, adj, w0, w1].map(|m| t.constant(m.clone()));
    let out = gcn_dense(&mut t, vars[1], vars[0], vars[2], vars[3])?;
    Ok(t.value(out).clone())
}

/// Graph convolution per circuit layer feeding a gated recurrent state, one row per qubit.
/// Recurrent weights are shared across layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Tgcn {
    gcn0: ParamId,
    gcn1: ParamId,
    update: Affine,
    reset: Affine,
    candidate: Affine,
    d_f: usize,
    d_h: usize,
}

impl Tgcn {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, prefix: &str, d_f: usize, d_h: usize, rng: &mut R) -> Result<Self, NnError> {
        let gcn0 = store.xavier(&format!("{prefix}.gcn0"), d_f, d_h, rng)?;
        let gcn1 = store.xavier(&format!("{prefix}.gcn1"), d_h, d_h, rng)?;
        let update = Affine::new(store, &format!("{prefix}.update"), 2 * d_h, d_h, rng)?;
        let reset = Affine::new(store, &format!("{prefix}.reset"), 2 * d_h, d_h, rng)?;
        let candidate = Affine::new(store, &format!("{prefix}.candidate"), 2 * d_h, d_h, rng)?;
        Ok(Tgcn { gcn0, gcn1, update, reset, candidate, d_f, d_h })
    }

    /// Rebinds to parameters already present in `store` (after loading a checkpoint).
    pub fn lookup(store: &ParamStore, prefix: &str) -> Result<Self, NnError> {
        let get = |s: &str| store.id(&format!("{prefix}.{s}")).ok_or_else(|| NnError::UnknownParam(format!("{prefix}.{s}")));
        let gcn0 = get("gcn0")?;
        let gcn1 = get("gcn1")?;
        let (d_f, d_h) = store.value(gcn0).shape();
        Ok(Tgcn {
            gcn0,
            gcn1,
            update: Affine::lookup(store, &format!("{prefix}.update"))?,
            reset: Affine::lookup(store, &format!("{prefix}.reset"))?,
            candidate: Affine::lookup(store, &format!("{prefix}.candidate"))?,
            d_f,
            d_h,
        })
    }

    pub fn feature_width(&self) -> usize {
        self.d_f
    }

    pub fn hidden_width(&self) -> usize {
        self.d_h
    }

    /// Runs the recurrence over `columns` (active slot per row) from a zero state and
    /// returns the final `n x d_h` state.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, adj: Var, columns: &[Vec<usize>]) -> Result<Var, EmbedError> {
        let n = tape.value(adj).rows();
        let mut h = tape.constant(Tensor::zeros(n, self.d_h));
        if columns.is_empty() {
            return Ok(h);
        }
        let w0 = tape.param(store, self.gcn0);
        let w1 = tape.param(store, self.gcn1);
        for slots in columns {
            if slots.len() != n {
                return Err(NnError::Shape { op: "tgcn", left: (n, self.d_f), right: (slots.len(), self.d_f) }.into());
            }
            if let Some(&bad) = slots.iter().find(|&&s| s >= self.d_f) {
                return Err(NnError::Index { index: bad, len: self.d_f }.into());
            }
            let g = gcn_onehot(tape, adj, slots, w0, w1)?;
            h = self.step(tape, store, g, h)?;
        }
        Ok(h)
    }

    fn step(&self, tape: &mut Tape, store: &ParamStore, g: Var, h: Var) -> Result<Var, NnError> {
        let gh = tape.concat_cols(g, h)?;
        let u = self.update.apply(tape, store, gh)?;
        let e1 = tape.sigmoid(u);
        let r = self.reset.apply(tape, store, gh)?;
        let e2 = tape.sigmoid(r);
        let gated = tape.mul(e2, h)?;
        let gc = tape.concat_cols(g, gated)?;
        let c = self.candidate.apply(tape, store, gc)?;
        let e3 = tape.tanh(c);
        let keep = tape.mul(e1, h)?;
        let fresh = tape.one_minus(e1);
        let fresh = tape.mul(fresh, e3)?;
        tape.add(keep, fresh)
    }
}
