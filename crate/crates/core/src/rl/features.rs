use crate::circuit::{GateKind, HardwareGraph};
use crate::embed::{normalize_edges, EmbedError, FeatureEncoding};
use crate::nn::Tensor;
use crate::route::{ActionSpace, RoutingEnv};

/// Everything the networks read from one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Active feature slot per hardware qubit for each occupied table column.
    pub columns: Vec<Vec<usize>>,
    /// One row per target: kind one-hot, placed, ready, hardware distance / N.
    pub logical: Tensor,
    /// Normalized dependency adjacency over targets.
    pub dep_adj: Tensor,
    /// Per-edge SWAP distance gains, then progress scalars.
    pub routing: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Turns routing states into [`Observation`]s for one action space.
#[derive(Clone, Debug, PartialEq)]
pub struct Observer {
    encoding: FeatureEncoding,
    kinds: Vec<GateKind>,
    edges: Vec<(usize, usize)>,
    n_qubits: usize,
}

impl Observer {
    pub fn new(space: &ActionSpace, hardware: &HardwareGraph) -> Self {
        Observer {
            encoding: FeatureEncoding::for_hardware(hardware),
            kinds: space.gate_set().to_vec(),
            edges: space.edges().to_vec(),
            n_qubits: space.n_qubits(),
        }
    }

    pub fn encoding(&self) -> &FeatureEncoding {
        &self.encoding
    }

    pub fn logical_width(&self) -> usize {
        self.kinds.len() + 3
    }

    pub fn routing_width(&self) -> usize {
        2 * self.edges.len() + 3
    }

    pub fn observe(&self, env: &RoutingEnv<'_>) -> Result<Observation, EmbedError> {
        let inst = env.instance();
        let hw = &inst.hardware;
        let n = self.n_qubits as f64;
        let n_targets = inst.targets.len();

        let mut logical = Tensor::zeros(n_targets, self.logical_width());
        // (hu, hv, ready) for unplaced two-qubit targets
        let mut pairs = Vec::new();
        for (i, g) in inst.targets.iter().enumerate() {
            if let Some(k) = self.kinds.iter().position(|&k| k == g.kind) {
                logical.set(i, k, 1.0);
            }
            let placed = env.placed()[i];
            let ready = env.is_ready(i);
            logical.set(i, self.kinds.len(), f64::from(u8::from(placed)));
            logical.set(i, self.kinds.len() + 1, f64::from(u8::from(ready)));
            if let (hu, Some(hv)) = env.target_position(i) {
                logical.set(i, self.kinds.len() + 2, hw.distance(hu, hv) as f64 / n);
                if !placed {
                    pairs.push((hu, hv, ready));
                }
            }
        }

        let mut ready_gain = Vec::with_capacity(self.edges.len());
        let mut all_gain = Vec::with_capacity(self.edges.len());
        for &(a, b) in &self.edges {
            let moved = |q: usize| if q == a { b } else if q == b { a } else { q };
            let (mut r, mut t) = (0.0, 0.0);
            for &(u, v, ready) in &pairs {
                let d = hw.distance(u, v) as f64 - hw.distance(moved(u), moved(v)) as f64;
                t += d;
                if ready {
                    r += d;
                }
            }
            ready_gain.push(r);
            all_gain.push(t);
        }
        let mask = env.legal_mask();
        let target_legal = mask.iter().enumerate().any(|(i, &m)| m && !env.space().is_swap(i));
        let mut routing = ready_gain;
        routing.extend(all_gain);
        routing.push(env.placed_count() as f64 / n_targets.max(1) as f64);
        routing.push(env.t() as f64 / inst.gate_limit.max(1) as f64);
        routing.push(f64::from(u8::from(target_legal)));

        Ok(Observation {
            columns: self.encoding.columns(env.table())?,
            logical,
            dep_adj: normalize_edges(n_targets, inst.deps.edges()),
            routing,
            mask,
        })
    }
}
