use super::{NnError, ParamId, ParamStore, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    OneMinus(Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    MaskedLogSoftmax(Var, Vec<bool>),
    ConcatCols(Var, Var),
    Flatten(Var),
    GatherRows(Var, Vec<usize>),
    Pick(Var, usize, usize),
    Sum(Var),
    Mse(Var, Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    trainable: bool,
}

/// Records a forward computation so that [`Tape::backward`] can push gradients into a
/// [`ParamStore`]. One tape serves one forward/backward pass.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), NnError> {
    if a.shape() == b.shape() {
        Ok(())
    } else {
        Err(NnError::Shape { op, left: a.shape(), right: b.shape() })
    }
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.rows(), a.cols(), data).expect("shapes checked")
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, trainable: bool) -> Var {
        self.nodes.push(Node { value, op, trainable });
        Var(self.nodes.len() - 1)
    }

    fn t(&self, v: Var) -> bool {
        self.nodes[v.0].trainable
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id), true)
    }

    /// Same value, cut off from the gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let value = self.value(a).matmul(self.value(b))?;
        let tr = self.t(a) || self.t(b);
        Ok(self.push(value, Op::MatMul(a, b), tr))
    }

    /// Elementwise sum; a `1 x cols` right operand is broadcast over rows.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let (x, y) = (self.value(a), self.value(b));
        let tr = self.t(a) || self.t(b);
        if x.shape() == y.shape() {
            let value = zip(x, y, |p, q| p + q);
            return Ok(self.push(value, Op::Add(a, b), tr));
        }
        if y.rows() == 1 && y.cols() == x.cols() {
            let mut value = x.clone();
            let cols = x.cols();
            for (i, v) in value.data_mut().iter_mut().enumerate() {
                *v += y.data()[i % cols];
            }
            return Ok(self.push(value, Op::AddRow(a, b), tr));
        }
        Err(NnError::Shape { op: "add", left: x.shape(), right: y.shape() })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        same_shape("sub", self.value(a), self.value(b))?;
        let value = zip(self.value(a), self.value(b), |p, q| p - q);
        let tr = self.t(a) || self.t(b);
        Ok(self.push(value, Op::Sub(a, b), tr))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        same_shape("mul", self.value(a), self.value(b))?;
        let value = zip(self.value(a), self.value(b), |p, q| p * q);
        let tr = self.t(a) || self.t(b);
        Ok(self.push(value, Op::Mul(a, b), tr))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let value = self.value(a).map(|x| x * k);
        let tr = self.t(a);
        self.push(value, Op::Scale(a, k), tr)
    }

    /// `1 - a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| 1.0 - x);
        let tr = self.t(a);
        self.push(value, Op::OneMinus(a), tr)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let tr = self.t(a);
        self.push(value, Op::Relu(a), tr)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let tr = self.t(a);
        self.push(value, Op::Sigmoid(a), tr)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        let tr = self.t(a);
        self.push(value, Op::Tanh(a), tr)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut value = x.clone();
        for row in value.data_mut().chunks_exact_mut(x.cols()) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.iter_mut().for_each(|v| *v = (*v - m).exp());
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        let tr = self.t(a);
        self.push(value, Op::SoftmaxRows(a), tr)
    }

    /// Row-wise log-softmax over entries where `mask` is true; masked entries read 0
    /// and receive no gradient.
    pub fn masked_log_softmax(&mut self, a: Var, mask: &[bool]) -> Result<Var, NnError> {
        let x = self.value(a);
        if mask.len() != x.cols() {
            return Err(NnError::Shape { op: "masked_log_softmax", left: x.shape(), right: (1, mask.len()) });
        }
        if !mask.iter().any(|&m| m) {
            return Err(NnError::EmptyMask);
        }
        let mut value = Tensor::zeros(x.rows(), x.cols());
        for (out, row) in value.data_mut().chunks_exact_mut(x.cols()).zip(x.data().chunks_exact(x.cols())) {
            let m = row.iter().zip(mask).filter(|(_, &k)| k).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().zip(mask).filter(|(_, &k)| k).map(|(v, _)| (v - m).exp()).sum::<f64>().ln();
            for ((o, v), &k) in out.iter_mut().zip(row).zip(mask) {
                *o = if k { v - lse } else { 0.0 };
            }
        }
        let tr = self.t(a);
        Ok(self.push(value, Op::MaskedLogSoftmax(a, mask.to_vec()), tr))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.rows() != y.rows() {
            return Err(NnError::Shape { op: "concat_cols", left: x.shape(), right: y.shape() });
        }
        let mut data = Vec::with_capacity(x.len() + y.len());
        for r in 0..x.rows() {
            data.extend_from_slice(&x.data()[r * x.cols()..(r + 1) * x.cols()]);
            data.extend_from_slice(&y.data()[r * y.cols()..(r + 1) * y.cols()]);
        }
        let value = Tensor::new(x.rows(), x.cols() + y.cols(), data)?;
        let tr = self.t(a) || self.t(b);
        Ok(self.push(value, Op::ConcatCols(a, b), tr))
    }

    /// Row-major reshape to `1 x (rows * cols)`.
    pub fn flatten(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let value = Tensor::row(x.data().to_vec());
        let tr = self.t(a);
        self.push(value, Op::Flatten(a), tr)
    }

    /// Stacks the listed rows of `a`; indices may repeat.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var, NnError> {
        let x = self.value(a);
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx {
            if i >= x.rows() {
                return Err(NnError::Index { index: i, len: x.rows() });
            }
            data.extend_from_slice(&x.data()[i * x.cols()..(i + 1) * x.cols()]);
        }
        let value = Tensor::new(idx.len(), x.cols(), data)?;
        let tr = self.t(a);
        Ok(self.push(value, Op::GatherRows(a, idx.to_vec()), tr))
    }

    pub fn pick(&mut self, a: Var, r: usize, c: usize) -> Result<Var, NnError> {
        let x = self.value(a);
        if r >= x.rows() || c >= x.cols() {
            return Err(NnError::Index { index: r * x.cols() + c, len: x.len() });
        }
        let value = Tensor::scalar(x.get(r, c));
        let tr = self.t(a);
        Ok(self.push(value, Op::Pick(a, r, c), tr))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        let tr = self.t(a);
        self.push(value, Op::Sum(a), tr)
    }

    /// Mean squared difference over all entries.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var, NnError> {
        same_shape("mse", self.value(a), self.value(b))?;
        let (x, y) = (self.value(a), self.value(b));
        let n = x.len().max(1) as f64;
        let value = Tensor::scalar(x.data().iter().zip(y.data()).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / n);
        let tr = self.t(a) || self.t(b);
        Ok(self.push(value, Op::Mse(a, b), tr))
    }

    /// Accumulates `d loss / d param` into `store` for every parameter on the tape.
    pub fn backward(self, loss: Var, store: &mut ParamStore) -> Result<(), NnError> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(NnError::NonScalarLoss(shape));
        }
        if !self.nodes[loss.0].trainable {
            return Err(NnError::Detached);
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let nodes = self.nodes;

        fn acc(grads: &mut [Option<Tensor>], nodes: &[Node], v: Var, g: Tensor) {
            if !nodes[v.0].trainable {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &nodes[i];
            let out = &node.value;
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => store.accumulate(*id, &g),
                Op::MatMul(a, b) => {
                    let (x, y) = (&nodes[a.0].value, &nodes[b.0].value);
                    if nodes[a.0].trainable {
                        acc(&mut grads, &nodes, *a, g.matmul(&y.transpose())?);
                    }
                    if nodes[b.0].trainable {
                        acc(&mut grads, &nodes, *b, x.transpose().matmul(&g)?);
                    }
                }
                Op::Add(a, b) => {
                    acc(&mut grads, &nodes, *a, g.clone());
                    acc(&mut grads, &nodes, *b, g);
                }
                Op::AddRow(a, b) => {
                    let cols = g.cols();
                    let mut rowsum = Tensor::zeros(1, cols);
                    for (j, v) in g.data().iter().enumerate() {
                        rowsum.data_mut()[j % cols] += v;
                    }
                    acc(&mut grads, &nodes, *a, g);
                    acc(&mut grads, &nodes, *b, rowsum);
                }
                Op::Sub(a, b) => {
                    let neg = g.map(|x| -x);
                    acc(&mut grads, &nodes, *a, g);
                    acc(&mut grads, &nodes, *b, neg);
                }
                Op::Mul(a, b) => {
                    let (x, y) = (&nodes[a.0].value, &nodes[b.0].value);
                    let ga = zip(&g, y, |p, q| p * q);
                    let gb = zip(&g, x, |p, q| p * q);
                    acc(&mut grads, &nodes, *a, ga);
                    acc(&mut grads, &nodes, *b, gb);
                }
                Op::Scale(a, k) => acc(&mut grads, &nodes, *a, g.map(|x| x * k)),
                Op::OneMinus(a) => acc(&mut grads, &nodes, *a, g.map(|x| -x)),
                Op::Relu(a) => {
                    let ga = zip(&g, &nodes[a.0].value, |p, x| if x > 0.0 { p } else { 0.0 });
                    acc(&mut grads, &nodes, *a, ga);
                }
                Op::Sigmoid(a) => acc(&mut grads, &nodes, *a, zip(&g, out, |p, s| p * s * (1.0 - s))),
                Op::Tanh(a) => acc(&mut grads, &nodes, *a, zip(&g, out, |p, t| p * (1.0 - t * t))),
                Op::SoftmaxRows(a) => {
                    let cols = out.cols();
                    let mut ga = Tensor::zeros(out.rows(), cols);
                    for r in 0..out.rows() {
                        let s = &out.data()[r * cols..(r + 1) * cols];
                        let gr = &g.data()[r * cols..(r + 1) * cols];
                        let dot: f64 = s.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for c in 0..cols {
                            ga.set(r, c, s[c] * (gr[c] - dot));
                        }
                    }
                    acc(&mut grads, &nodes, *a, ga);
                }
                Op::MaskedLogSoftmax(a, mask) => {
                    let cols = out.cols();
                    let mut ga = Tensor::zeros(out.rows(), cols);
                    for r in 0..out.rows() {
                        let gsum: f64 = (0..cols).filter(|&c| mask[c]).map(|c| g.get(r, c)).sum();
                        for c in (0..cols).filter(|&c| mask[c]) {
                            ga.set(r, c, g.get(r, c) - out.get(r, c).exp() * gsum);
                        }
                    }
                    acc(&mut grads, &nodes, *a, ga);
                }
                Op::ConcatCols(a, b) => {
                    let ca = nodes[a.0].value.cols();
                    let cb = nodes[b.0].value.cols();
                    let mut ga = Vec::with_capacity(g.rows() * ca);
                    let mut gb = Vec::with_capacity(g.rows() * cb);
                    for row in g.data().chunks_exact(ca + cb) {
                        ga.extend_from_slice(&row[..ca]);
                        gb.extend_from_slice(&row[ca..]);
                    }
                    acc(&mut grads, &nodes, *a, Tensor::new(g.rows(), ca, ga)?);
                    acc(&mut grads, &nodes, *b, Tensor::new(g.rows(), cb, gb)?);
                }
                Op::Flatten(a) => {
                    let (r, c) = nodes[a.0].value.shape();
                    acc(&mut grads, &nodes, *a, Tensor::new(r, c, g.into_data())?);
                }
                Op::GatherRows(a, idx) => {
                    let (r, c) = nodes[a.0].value.shape();
                    let mut ga = Tensor::zeros(r, c);
                    for (k, &i) in idx.iter().enumerate() {
                        for j in 0..c {
                            ga.data_mut()[i * c + j] += g.get(k, j);
                        }
                    }
                    acc(&mut grads, &nodes, *a, ga);
                }
                Op::Pick(a, r, c) => {
                    let (rows, cols) = nodes[a.0].value.shape();
                    let mut ga = Tensor::zeros(rows, cols);
                    ga.set(*r, *c, g.item());
                    acc(&mut grads, &nodes, *a, ga);
                }
                Op::Sum(a) => {
                    let (rows, cols) = nodes[a.0].value.shape();
                    acc(&mut grads, &nodes, *a, Tensor::filled(rows, cols, g.item()));
                }
                Op::Mse(a, b) => {
                    let (x, y) = (&nodes[a.0].value, &nodes[b.0].value);
                    let k = 2.0 * g.item() / x.len().max(1) as f64;
                    let ga = zip(x, y, |p, q| k * (p - q));
                    let gb = ga.map(|v| -v);
                    acc(&mut grads, &nodes, *a, ga);
                    acc(&mut grads, &nodes, *b, gb);
                }
            }
        }
        Ok(())
    }
}
