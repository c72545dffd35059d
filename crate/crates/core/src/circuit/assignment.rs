use serde::{Deserialize, Serialize};

use super::CircuitError;

/// Bijection from logical to hardware qubits, with the inverse kept in step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Assignment {
    to_hw: Vec<usize>,
    to_logical: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Assignment {
    type Error = CircuitError;
    fn try_from(map: Vec<usize>) -> Result<Self, Self::Error> {
        Assignment::new(map)
    }
}

impl From<Assignment> for Vec<usize> {
    fn from(a: Assignment) -> Self {
        a.to_hw
    }
}

impl Assignment {
    /// `map[l]` is the hardware qubit holding logical qubit `l`.
    pub fn new(map: Vec<usize>) -> Result<Self, CircuitError> {
        let n = map.len();
        let mut to_logical = vec![usize::MAX; n];
        for (l, &h) in map.iter().enumerate() {
            if h >= n {
                return Err(CircuitError::NotBijective(format!("hardware qubit {h} out of range")));
            }
            if to_logical[h] != usize::MAX {
                return Err(CircuitError::NotBijective(format!("hardware qubit {h} used twice")));
            }
            to_logical[h] = l;
        }
        Ok(Assignment { to_hw: map, to_logical })
    }

    pub fn identity(n: usize) -> Self {
        Assignment { to_hw: (0..n).collect(), to_logical: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.to_hw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_hw.is_empty()
    }

    pub fn hardware(&self, logical: usize) -> usize {
        self.to_hw[logical]
    }

    pub fn logical(&self, hardware: usize) -> usize {
        self.to_logical[hardware]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.to_hw
    }

    /// Exchanges the hardware positions of two logical qubits.
    pub fn apply_swap(&self, qu: usize, qv: usize) -> Result<Self, CircuitError> {
        let mut next = self.clone();
        next.swap_in_place(qu, qv)?;
        Ok(next)
    }

    pub fn swap_in_place(&mut self, qu: usize, qv: usize) -> Result<(), CircuitError> {
        if qu == qv {
            return Err(CircuitError::SwapSameQubit(qu));
        }
        let n = self.len();
        for q in [qu, qv] {
            if q >= n {
                return Err(CircuitError::QubitOutOfRange { qubit: q, n });
            }
        }
        self.to_hw.swap(qu, qv);
        self.to_logical[self.to_hw[qu]] = qu;
        self.to_logical[self.to_hw[qv]] = qv;
        Ok(())
    }

    /// Checks that both directions agree.
    pub fn is_consistent(&self) -> bool {
        self.to_hw.len() == self.to_logical.len()
            && self.to_hw.iter().enumerate().all(|(l, &h)| h < self.len() && self.to_logical[h] == l)
    }
}
