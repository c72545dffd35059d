use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{feasibility_rate, ActorNet, CriticNet, NetConfig, Observation, RlError};
use crate::circuit::ProblemInstance;
use crate::nn::{sgd_step, Tape, Tensor};
use crate::route::{ActionSpace, FidelityEstimator, NoBonus, RewardConfig, RouteOutcome, RoutingEnv};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: usize,
    pub reward: f64,
    /// `None` once the episode has ended.
    pub next: Option<Observation>,
    pub done: bool,
}

/// Bounded FIFO of transitions; the oldest entry is dropped when full.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer { items: VecDeque::with_capacity(capacity.min(4096)), capacity: capacity.max(1) }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub transitions: usize,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_advantage: f64,
}

/// One actor-critic step on every transition in `buffer`, then clears it.
///
/// The critic regresses on the TD(0) target `r + gamma * V(o') * (1 - done)`. The actor
/// ascends `A * log pi(a | o)` with the advantage `A` held constant. Gradients are summed
/// over transitions and divided by the number of finished episodes in the buffer.
pub fn update_networks(
    buffer: &mut ReplayBuffer,
    actor: &mut ActorNet,
    critic: &mut CriticNet,
    lr_actor: f64,
    lr_critic: f64,
    gamma: f64,
) -> Result<UpdateStats, RlError> {
    if buffer.is_empty() {
        return Err(RlError::EmptyBuffer);
    }
    let episodes = buffer.iter().filter(|t| t.done).count().max(1);
    let mut stats = UpdateStats { transitions: buffer.len(), actor_loss: 0.0, critic_loss: 0.0, mean_advantage: 0.0 };
    actor.store_mut().zero_grad();
    critic.store_mut().zero_grad();
    for tr in buffer.iter() {
        let next_value = match (&tr.next, tr.done) {
            (Some(next), false) => critic.value(next)?,
            _ => 0.0,
        };
        let target = tr.reward + gamma * next_value;

        let mut tape = Tape::new();
        let v = critic.value_var(&mut tape, critic.store(), &tr.obs)?;
        let value = tape.value(v).item();
        let y = tape.constant(Tensor::scalar(target));
        let loss = tape.mse(v, y)?;
        stats.critic_loss += tape.value(loss).item();
        tape.backward(loss, critic.store_mut())?;

        let advantage = target - value;
        stats.mean_advantage += advantage;
        let mut tape = Tape::new();
        let lp = actor.log_probs(&mut tape, actor.store(), &tr.obs)?;
        let picked = tape.pick(lp, 0, tr.action)?;
        stats.actor_loss -= advantage * tape.value(picked).item();
        let loss = tape.scale(picked, -advantage);
        tape.backward(loss, actor.store_mut())?;
    }
    let n = buffer.len() as f64;
    stats.mean_advantage /= n;
    stats.actor_loss /= episodes as f64;
    stats.critic_loss /= episodes as f64;
    for (what, value) in [("actor", stats.actor_loss), ("critic", stats.critic_loss)] {
        if !value.is_finite() {
            return Err(RlError::NonFiniteLoss { what, value, episodes });
        }
    }
    let scale = 1.0 / episodes as f64;
    actor.store_mut().scale_grads(scale);
    critic.store_mut().scale_grads(scale);
    sgd_step(actor.store_mut(), lr_actor)?;
    sgd_step(critic.store_mut(), lr_critic)?;
    buffer.clear();
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlConfig {
    pub episodes: usize,
    pub update_every: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub reward: RewardConfig,
    pub net: NetConfig,
    pub seed: u64,
    pub log_interval: usize,
    pub buffer_capacity: usize,
}

impl RlConfig {
    pub fn with_seed(seed: u64) -> Self {
        RlConfig {
            episodes: 5000,
            update_every: 8,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            reward: RewardConfig::default(),
            net: NetConfig::default(),
            seed,
            log_interval: 200,
            buffer_capacity: 100_000,
        }
    }

    pub fn validate(&self) -> Result<(), RlError> {
        self.reward.validate()?;
        if self.update_every == 0 || self.log_interval == 0 {
            return Err(RlError::InvalidConfig("update_every and log_interval must be positive".into()));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return Err(RlError::InvalidConfig("learning rates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub instance: usize,
    pub feasible: bool,
    pub episode_return: f64,
    /// Fidelity estimate of the finished circuit; 0 when infeasible.
    pub estimate: f64,
    pub swaps: usize,
    pub steps: usize,
}

/// Aggregates over the episodes of one logging interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    /// Count of episodes finished at the end of the interval.
    pub episode: usize,
    pub feasibility_rate: f64,
    pub mean_return: f64,
    pub mean_estimate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeRecord>,
    pub intervals: Vec<IntervalStats>,
    pub updates: Vec<UpdateStats>,
}

fn interval(records: &[EpisodeRecord]) -> IntervalStats {
    let n = records.len().max(1) as f64;
    let feasible: Vec<bool> = records.iter().map(|r| r.feasible).collect();
    IntervalStats {
        episode: records.last().map_or(0, |r| r.episode + 1),
        feasibility_rate: feasibility_rate(&feasible),
        mean_return: records.iter().map(|r| r.episode_return).sum::<f64>() / n,
        mean_estimate: records.iter().map(|r| r.estimate).sum::<f64>() / n,
    }
}

fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize, RlError> {
    let dist = WeightedIndex::new(probs).map_err(|e| RlError::InvalidConfig(format!("policy distribution: {e}")))?;
    Ok(dist.sample(rng))
}

/// Trains fresh actor and critic networks on episodes drawn uniformly from `instances`.
pub fn train_rl(
    instances: &[ProblemInstance],
    space: &ActionSpace,
    estimator: &dyn FidelityEstimator,
    cfg: &RlConfig,
) -> Result<(ActorNet, CriticNet, TrainReport), RlError> {
    cfg.validate()?;
    let first = instances.first().ok_or(RlError::NoInstances)?;
    for inst in instances {
        space.check_fits(inst)?;
    }
    let mut actor = ActorNet::new(space, &first.hardware, cfg.net, cfg.seed)?;
    let mut critic = CriticNet::new(space, &first.hardware, cfg.net, cfg.seed.wrapping_add(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut report = TrainReport::default();
    let observer = actor.observer().clone();

    for episode in 0..cfg.episodes {
        let idx = rng.random_range(0..instances.len());
        let inst = &instances[idx];
        let mut env = RoutingEnv::new(inst, space)?;
        let mut ret = 0.0;
        if !env.is_done() {
            let mut obs = observer.observe(&env)?;
            loop {
                let action = sample_action(&actor.probabilities(&obs)?, &mut rng)?;
                let out = env.step(action, estimator, &cfg.reward)?;
                ret += out.reward;
                let next = if out.done { None } else { Some(observer.observe(&env)?) };
                buffer.push(Transition { obs, action, reward: out.reward, next: next.clone(), done: out.done });
                match next {
                    Some(n) => obs = n,
                    None => break,
                }
            }
        }
        let estimate = if env.is_feasible() { estimator.estimate(env.table())? } else { 0.0 };
        report.episodes.push(EpisodeRecord {
            episode,
            instance: idx,
            feasible: env.is_feasible(),
            episode_return: ret,
            estimate,
            swaps: env.swaps(),
            steps: env.t(),
        });
        if (episode + 1) % cfg.update_every == 0 && !buffer.is_empty() {
            let stats = update_networks(&mut buffer, &mut actor, &mut critic, cfg.lr_actor, cfg.lr_critic, cfg.reward.gamma)?;
            report.updates.push(stats);
        }
        if (episode + 1) % cfg.log_interval == 0 {
            let start = episode + 1 - cfg.log_interval;
            report.intervals.push(interval(&report.episodes[start..]));
        }
    }
    if !buffer.is_empty() {
        let stats = update_networks(&mut buffer, &mut actor, &mut critic, cfg.lr_actor, cfg.lr_critic, cfg.reward.gamma)?;
        report.updates.push(stats);
    }
    let tail = cfg.episodes % cfg.log_interval;
    if tail > 0 {
        report.intervals.push(interval(&report.episodes[cfg.episodes - tail..]));
    }
    Ok((actor, critic, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// Most probable legal action, lowest index on ties.
    Greedy,
    Sample(u64),
}

/// Routes `inst` with the actor. Running past the gate limit yields an infeasible outcome.
pub fn route_with_policy(inst: &ProblemInstance, actor: &ActorNet, mode: PolicyMode) -> Result<RouteOutcome, RlError> {
    let space = actor.space();
    let mut env = RoutingEnv::new(inst, space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(match mode {
        PolicyMode::Sample(seed) => seed,
        PolicyMode::Greedy => 0,
    });
    let cfg = RewardConfig::default();
    while !env.is_done() {
        let obs = actor.observer().observe(&env)?;
        let probs = actor.probabilities(&obs)?;
        let action = match mode {
            PolicyMode::Greedy => {
                let mut best = None;
                for (i, &p) in probs.iter().enumerate().filter(|&(i, _)| obs.mask[i]) {
                    if best.is_none_or(|(_, q)| p > q) {
                        best = Some((i, p));
                    }
                }
                best.expect("mask is never empty").0
            }
            PolicyMode::Sample(_) => sample_action(&probs, &mut rng)?,
        };
        env.step(action, &NoBonus, &cfg)?;
    }
    Ok(RouteOutcome::from_env(&env))
}
