use super::{decompose, match_targets, Assignment, CircuitError, CircuitTable, Gate, GateSequence, ProblemInstance};

/// Incremental layer placement of routed gates into a [`CircuitTable`].
///
/// Layers are counted from 1; layer `l` is table column `l - 1`.
#[derive(Clone, Debug)]
pub struct Translator<'a> {
    inst: &'a ProblemInstance,
    phi: Assignment,
    table: CircuitTable,
    qubit_layer: Vec<usize>,
    target_layer: Vec<Option<usize>>,
    last_layer: usize,
    placed: usize,
}

impl<'a> Translator<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        let n = inst.n_qubits();
        Translator {
            inst,
            phi: inst.phi0.clone(),
            table: CircuitTable::new(n, inst.depth_limit),
            qubit_layer: vec![0; n],
            target_layer: vec![None; inst.targets.len()],
            last_layer: 0,
            placed: 0,
        }
    }

    pub fn assignment(&self) -> &Assignment {
        &self.phi
    }

    pub fn table(&self) -> &CircuitTable {
        &self.table
    }

    pub fn into_table(self) -> CircuitTable {
        self.table
    }

    pub fn is_placed(&self, target: usize) -> bool {
        self.target_layer[target].is_some()
    }

    pub fn placed_count(&self) -> usize {
        self.placed
    }

    /// Last layer occupied on hardware qubit `q` (0 if none).
    pub fn qubit_layer(&self, q: usize) -> usize {
        self.qubit_layer[q]
    }

    /// Whether every prerequisite of `target` is already placed.
    pub fn is_ready(&self, target: usize) -> bool {
        !self.is_placed(target) && self.inst.deps.parents(target).iter().all(|&p| self.is_placed(p))
    }

    /// First layer the gate's natives would occupy, without placing it.
    pub fn chosen_layer(&self, gate: &Gate, target: Option<usize>) -> usize {
        let mut layer = gate.qubits().map(|q| self.qubit_layer[self.phi.hardware(q)]).max().unwrap_or(0) + 1;
        if let Some(t) = target {
            for &a in self.inst.deps.ancestors(t) {
                if let Some(l) = self.target_layer[a] {
                    layer = layer.max(l + 1);
                }
            }
        }
        if gate.is_swap() {
            layer = layer.max(self.last_layer + 1);
        }
        layer
    }

    /// Places `gate`, which must be target `target` or a SWAP when `target` is `None`.
    pub fn push(&mut self, gate: &Gate, target: Option<usize>) -> Result<(), CircuitError> {
        let index = self.placed;
        let reject = |reason: String| CircuitError::InvalidSequence { index, reason };
        gate.check(self.phi.len())?;
        match target {
            None if !gate.is_swap() => return Err(reject("non-SWAP gate without a target".into())),
            Some(_) if gate.is_swap() => return Err(reject("SWAP cannot be a target".into())),
            Some(t) => {
                let expected = self.inst.targets.get(t).ok_or_else(|| reject(format!("no target {t}")))?;
                if !expected.same_gate(gate) {
                    return Err(reject(format!("gate does not match target {t}")));
                }
                if self.is_placed(t) {
                    return Err(reject(format!("target {t} placed twice")));
                }
                if let Some(p) = self.inst.deps.parents(t).iter().find(|&&p| !self.is_placed(p)) {
                    return Err(reject(format!("prerequisite {p} of target {t} not placed")));
                }
            }
            None => {}
        }
        if let Some(qv) = gate.qv {
            let (hu, hv) = (self.phi.hardware(gate.qu), self.phi.hardware(qv));
            if !self.inst.hardware.adjacent(hu, hv) {
                return Err(reject(format!("hardware qubits {hu} and {hv} are not coupled")));
            }
        }

        let natives = decompose(gate)?;
        let first = self.chosen_layer(gate, target);
        let last = first + natives.len() - 1;
        if last > self.inst.depth_limit {
            return Err(CircuitError::DepthOverflow { needed: last, limit: self.inst.depth_limit });
        }
        for (j, native) in natives.iter().enumerate() {
            let placed = native.map_qubits(|q| self.phi.hardware(q));
            self.table.place(first + j - 1, placed)?;
        }
        for q in gate.qubits() {
            self.qubit_layer[self.phi.hardware(q)] = last;
        }
        if let Some(t) = target {
            self.target_layer[t] = Some(last);
        }
        self.last_layer = self.last_layer.max(last);
        if let (true, Some(qv)) = (gate.is_swap(), gate.qv) {
            self.phi.swap_in_place(gate.qu, qv)?;
        }
        self.placed += 1;
        Ok(())
    }
}

/// Translates a routed sequence (or any valid prefix of one) into a circuit table.
///
/// Each gate is matched to its target, decomposed, and placed at the earliest layer after
/// both qubits, all placed ancestors, and for SWAP every earlier gate.
pub fn translate(seq: &GateSequence, inst: &ProblemInstance) -> Result<CircuitTable, CircuitError> {
    let (matched, extraneous) = match_targets(&seq.gates, &inst.targets, &inst.deps);
    if let Some(&index) = extraneous.first() {
        return Err(CircuitError::InvalidSequence { index, reason: "gate matches no target".into() });
    }
    let mut tr = Translator::new(inst);
    for (g, t) in seq.gates.iter().zip(matched) {
        tr.push(g, t)?;
    }
    Ok(tr.into_table())
}
