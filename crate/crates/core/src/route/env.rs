use serde::{Deserialize, Serialize};

use super::{ActionSpace, RouteError};
use crate::circuit::{Assignment, CircuitError, CircuitTable, Gate, GateSequence, ProblemInstance, Translator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Penalty per unplaced target when the gate limit is exceeded.
    pub beta1: f64,
    /// Weight of the fidelity estimate on feasible completion.
    pub beta2: f64,
    /// Discount.
    pub gamma: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig { beta1: 1.0, beta2: 10.0, gamma: 0.99 }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RouteError> {
        if !(self.beta1 > 0.0 && self.beta2 > 0.0) {
            return Err(RouteError::InvalidConfig("beta1 and beta2 must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(RouteError::InvalidConfig("gamma must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Scores a finished circuit for the terminal reward.
pub trait FidelityEstimator {
    fn estimate(&self, table: &CircuitTable) -> Result<f64, RouteError>;
}

impl<F: Fn(&CircuitTable) -> f64> FidelityEstimator for F {
    fn estimate(&self, table: &CircuitTable) -> Result<f64, RouteError> {
        Ok(self(table))
    }
}

/// Estimator that always returns 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoBonus;

impl FidelityEstimator for NoBonus {
    fn estimate(&self, _: &CircuitTable) -> Result<f64, RouteError> {
        Ok(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
}

/// State of one routing episode. The partial sequence is translated as it grows.
#[derive(Clone, Debug)]
pub struct RoutingEnv<'a> {
    inst: &'a ProblemInstance,
    space: &'a ActionSpace,
    tr: Translator<'a>,
    gates: Vec<Gate>,
    placed: Vec<bool>,
    n_placed: usize,
    swaps: usize,
    done: bool,
    feasible: bool,
    overflowed: bool,
}

impl<'a> RoutingEnv<'a> {
    pub fn new(inst: &'a ProblemInstance, space: &'a ActionSpace) -> Result<Self, RouteError> {
        space.check_fits(inst)?;
        let done = inst.targets.is_empty();
        Ok(RoutingEnv {
            inst,
            space,
            tr: Translator::new(inst),
            gates: Vec::new(),
            placed: vec![false; inst.targets.len()],
            n_placed: 0,
            swaps: 0,
            done,
            feasible: done,
            overflowed: false,
        })
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.inst
    }

    pub fn space(&self) -> &'a ActionSpace {
        self.space
    }

    /// Number of gates chosen so far.
    pub fn t(&self) -> usize {
        self.gates.len()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// Whether the depth limit cut the episode short.
    pub fn overflowed(&self) -> bool {
        self.overflowed
    }

    pub fn swaps(&self) -> usize {
        self.swaps
    }

    pub fn placed(&self) -> &[bool] {
        &self.placed
    }

    pub fn placed_count(&self) -> usize {
        self.n_placed
    }

    pub fn unplaced_count(&self) -> usize {
        self.placed.len() - self.n_placed
    }

    pub fn assignment(&self) -> &Assignment {
        self.tr.assignment()
    }

    pub fn table(&self) -> &CircuitTable {
        self.tr.table()
    }

    pub fn translator(&self) -> &Translator<'a> {
        &self.tr
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn sequence(&self) -> GateSequence {
        GateSequence::new(self.gates.clone(), self.inst.gate_limit)
    }

    pub fn is_ready(&self, target: usize) -> bool {
        !self.placed[target] && self.inst.deps.parents(target).iter().all(|&p| self.placed[p])
    }

    /// Hardware position of a target gate under the current assignment.
    pub fn target_position(&self, target: usize) -> (usize, Option<usize>) {
        let g = &self.inst.targets[target];
        let phi = self.tr.assignment();
        (phi.hardware(g.qu), g.qv.map(|q| phi.hardware(q)))
    }

    /// The logical gate and matched target an action would append, if the action is legal.
    pub fn induced(&self, action: usize) -> Option<(Gate, Option<usize>)> {
        if action >= self.space.len() {
            return None;
        }
        let a = self.space.action(action);
        let phi = self.tr.assignment();
        if self.space.is_swap(action) {
            let hv = a.hv?;
            return Some((Gate::swap(phi.logical(a.hu), phi.logical(hv)), None));
        }
        (0..self.inst.targets.len())
            .find(|&i| {
                let g = &self.inst.targets[i];
                g.kind == a.kind && self.is_ready(i) && self.space.index_of(g.kind, self.target_position(i).0, self.target_position(i).1) == Some(action)
            })
            .map(|i| (self.inst.targets[i], Some(i)))
    }

    /// Legal actions as a mask over the action space. SWAPs are always legal.
    pub fn legal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.space.len()];
        for (i, m) in mask.iter_mut().enumerate() {
            *m = self.space.is_swap(i);
        }
        for i in (0..self.inst.targets.len()).filter(|&i| self.is_ready(i)) {
            let (hu, hv) = self.target_position(i);
            if let Some(a) = self.space.index_of(self.inst.targets[i].kind, hu, hv) {
                mask[a] = true;
            }
        }
        mask
    }

    pub fn legal_actions(&self) -> Vec<usize> {
        self.legal_mask().iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    /// Applies `action` and returns the reward, including the terminal term when the
    /// episode ends.
    pub fn step(&mut self, action: usize, estimator: &dyn FidelityEstimator, cfg: &RewardConfig) -> Result<StepOutcome, RouteError> {
        if self.done {
            return Err(RouteError::EpisodeOver);
        }
        let (gate, target) = self.induced(action).ok_or(RouteError::IllegalAction(action))?;
        match self.tr.push(&gate, target) {
            Ok(()) => {}
            Err(CircuitError::DepthOverflow { .. }) => self.overflowed = true,
            Err(e) => return Err(e.into()),
        }
        self.gates.push(gate);
        let mut reward = 0.0;
        if !self.overflowed {
            match target {
                Some(i) => {
                    self.placed[i] = true;
                    self.n_placed += 1;
                    reward += 1.0;
                }
                None => {
                    self.swaps += 1;
                    reward -= 1.0;
                }
            }
        }
        let all_placed = self.n_placed == self.placed.len();
        let over = self.t() > self.inst.gate_limit;
        if all_placed && !over && !self.overflowed {
            self.done = true;
            self.feasible = true;
            reward += cfg.beta2 * estimator.estimate(self.tr.table())?;
        } else if all_placed || over || self.overflowed {
            self.done = true;
            reward -= cfg.beta1 * self.unplaced_count() as f64;
        }
        Ok(StepOutcome { reward, done: self.done })
    }
}
