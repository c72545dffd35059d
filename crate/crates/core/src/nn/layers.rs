use rand::Rng;

use super::{NnError, ParamId, ParamStore, Tape, Var};

/// `x * w + b` on row vectors. Weights are Xavier-initialized, biases start at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub w: ParamId,
    pub b: ParamId,
}

impl Affine {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut R) -> Result<Self, NnError> {
        let w = store.xavier(&format!("{name}.w"), fan_in, fan_out, rng)?;
        let b = store.zeros(&format!("{name}.b"), 1, fan_out)?;
        Ok(Affine { w, b })
    }

    /// Finds `{name}.w` and `{name}.b` in `store`.
    pub fn lookup(store: &ParamStore, name: &str) -> Result<Self, NnError> {
        let get = |s: &str| store.id(&format!("{name}.{s}")).ok_or_else(|| NnError::UnknownParam(format!("{name}.{s}")));
        Ok(Affine { w: get("w")?, b: get("b")? })
    }

    pub fn fan_out(&self, store: &ParamStore) -> usize {
        store.value(self.w).cols()
    }

    pub fn apply(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var, NnError> {
        let w = tape.param(store, self.w);
        let b = tape.param(store, self.b);
        let xw = tape.matmul(x, w)?;
        tape.add(xw, b)
    }
}
