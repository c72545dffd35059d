use serde::{Deserialize, Serialize};

use super::CircuitError;

/// Logical gate kinds that appear in target sets and gate sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "RZZ")]
    Rzz,
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "CX")]
    Cx,
    #[serde(rename = "SWAP")]
    Swap,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::Rzz, GateKind::Rx, GateKind::Cx, GateKind::Swap];

    pub fn is_two_qubit(self) -> bool {
        !matches!(self, GateKind::Rx)
    }

    pub fn has_angle(self) -> bool {
        matches!(self, GateKind::Rzz | GateKind::Rx)
    }

    /// Kinds whose action does not depend on qubit order.
    pub fn is_symmetric(self) -> bool {
        matches!(self, GateKind::Rzz | GateKind::Swap)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rzz => "RZZ",
            GateKind::Rx => "RX",
            GateKind::Cx => "CX",
            GateKind::Swap => "SWAP",
        }
    }
}

impl std::str::FromStr for GateKind {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "RZZ" => Ok(GateKind::Rzz),
            "RX" => Ok(GateKind::Rx),
            "CX" => Ok(GateKind::Cx),
            "SWAP" => Ok(GateKind::Swap),
            other => Err(CircuitError::UnknownKind(other.to_string())),
        }
    }
}

/// Hardware-native gate kinds produced by decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NativeKind {
    #[serde(rename = "CX_N")]
    Cx,
    #[serde(rename = "RZ_N")]
    Rz,
    #[serde(rename = "RX_N")]
    Rx,
}

impl NativeKind {
    pub const ALL: [NativeKind; 3] = [NativeKind::Cx, NativeKind::Rz, NativeKind::Rx];

    pub fn is_two_qubit(self) -> bool {
        matches!(self, NativeKind::Cx)
    }
}

/// A logical gate `(kind, qu, qv)`; single-qubit kinds leave `qv` empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qu: usize,
    #[serde(default)]
    pub qv: Option<usize>,
    #[serde(default)]
    pub angle: Option<f64>,
}

impl Gate {
    pub fn rzz(angle: f64, qu: usize, qv: usize) -> Self {
        Gate { kind: GateKind::Rzz, qu, qv: Some(qv), angle: Some(angle) }
    }

    pub fn rx(angle: f64, qu: usize) -> Self {
        Gate { kind: GateKind::Rx, qu, qv: None, angle: Some(angle) }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate { kind: GateKind::Cx, qu: control, qv: Some(target), angle: None }
    }

    pub fn swap(qu: usize, qv: usize) -> Self {
        Gate { kind: GateKind::Swap, qu, qv: Some(qv), angle: None }
    }

    pub fn is_swap(&self) -> bool {
        self.kind == GateKind::Swap
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.qu).chain(self.qv)
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.qu == q || self.qv == Some(q)
    }

    pub fn shares_qubit(&self, other: &Gate) -> bool {
        other.qubits().any(|q| self.acts_on(q))
    }

    /// Checks arity, angle presence and qubit range against `n` logical qubits.
    pub fn check(&self, n: usize) -> Result<(), CircuitError> {
        let malformed = |reason: &str| CircuitError::MalformedGate {
            gate: format!("{self:?}"),
            reason: reason.to_string(),
        };
        match (self.kind.is_two_qubit(), self.qv) {
            (true, None) => return Err(malformed("two-qubit kind without second qubit")),
            (false, Some(_)) => return Err(malformed("single-qubit kind with second qubit")),
            (true, Some(qv)) if qv == self.qu => return Err(malformed("qubits coincide")),
            _ => {}
        }
        if self.kind.has_angle() != self.angle.is_some() {
            return Err(malformed("angle presence does not match kind"));
        }
        for q in self.qubits() {
            if q >= n {
                return Err(CircuitError::QubitOutOfRange { qubit: q, n });
            }
        }
        Ok(())
    }

    /// Whether `self` denotes the same target gate as `other`.
    ///
    /// Symmetric kinds ignore qubit order; angles must agree to 1e-12.
    pub fn same_gate(&self, other: &Gate) -> bool {
        if self.kind != other.kind {
            return false;
        }
        let qubits_match = if self.kind.is_symmetric() {
            (self.qu, self.qv) == (other.qu, other.qv)
                || (Some(self.qu) == other.qv && self.qv == Some(other.qu))
        } else {
            (self.qu, self.qv) == (other.qu, other.qv)
        };
        let angles_match = match (self.angle, other.angle) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
            (None, None) => true,
            _ => false,
        };
        qubits_match && angles_match
    }
}

/// A native gate acting on concrete qubits (logical before placement, hardware after).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NativeGate {
    pub kind: NativeKind,
    pub q0: usize,
    pub q1: Option<usize>,
    pub angle: Option<f64>,
}

impl NativeGate {
    pub fn cx(control: usize, target: usize) -> Self {
        NativeGate { kind: NativeKind::Cx, q0: control, q1: Some(target), angle: None }
    }

    pub fn rz(angle: f64, q: usize) -> Self {
        NativeGate { kind: NativeKind::Rz, q0: q, q1: None, angle: Some(angle) }
    }

    pub fn rx(angle: f64, q: usize) -> Self {
        NativeGate { kind: NativeKind::Rx, q0: q, q1: None, angle: Some(angle) }
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.q0).chain(self.q1)
    }

    pub fn map_qubits(&self, f: impl Fn(usize) -> usize) -> Self {
        NativeGate { q0: f(self.q0), q1: self.q1.map(f), ..*self }
    }
}

/// Fixed translation-stage decomposition of a logical gate into native gates.
///
/// `RZZ(θ; a, b)` becomes `CX(a,b) RZ(θ; b) CX(a,b)`; `SWAP(a, b)` becomes three CX
/// with alternating direction.
pub fn decompose(g: &Gate) -> Result<Vec<NativeGate>, CircuitError> {
    let angle = || {
        g.angle.ok_or_else(|| CircuitError::MalformedGate {
            gate: format!("{g:?}"),
            reason: "missing angle".into(),
        })
    };
    let second = || {
        g.qv.ok_or_else(|| CircuitError::MalformedGate {
            gate: format!("{g:?}"),
            reason: "missing second qubit".into(),
        })
    };
    Ok(match g.kind {
        GateKind::Rzz => {
            let (a, b, theta) = (g.qu, second()?, angle()?);
            vec![NativeGate::cx(a, b), NativeGate::rz(theta, b), NativeGate::cx(a, b)]
        }
        GateKind::Swap => {
            let (a, b) = (g.qu, second()?);
            vec![NativeGate::cx(a, b), NativeGate::cx(b, a), NativeGate::cx(a, b)]
        }
        GateKind::Cx => vec![NativeGate::cx(g.qu, second()?)],
        GateKind::Rx => vec![NativeGate::rx(angle()?, g.qu)],
    })
}
