//! Proximal policy optimization for the dispatching environment.
//!
//! One trainer update collects a fixed-length rollout (episodes run
//! back-to-back over freshly generated instances), computes plain
//! discounted returns with no bootstrapping at rollout truncation, and
//! takes several clipped-surrogate epochs over shuffled minibatches.
//! Returns and advantages are deliberately kept free of estimator choices
//! (no GAE, no value bootstrap) so their reference implementations in the
//! test suite are exact rather than approximate.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{Env, EnvError, StateVector, ACTION_COUNT};
use crate::instance::{generate_instance, GenerateParams, InstanceError, ProblemInstance};
use crate::nn::{log_softmax, softmax, Adam, NnError, PolicyValueNet, ADAM_LR};
use crate::seeds::mix_seed;
use crate::sim::SimConfig;

pub const GAMMA: f64 = 0.9999;
pub const CLIP_EPSILON: f64 = 0.2;
pub const ROLLOUT_STEPS: usize = 1025;
pub const EPOCHS_PER_UPDATE: usize = 4;
pub const MINIBATCH_SIZE: usize = 64;
pub const VALUE_LOSS_COEF: f64 = 0.5;
pub const ENTROPY_COEF: f64 = 0.01;
/// Bail-out bound for evaluation episodes; a policy that only ever picks
/// infeasible actions would otherwise spin forever.
pub const MAX_EVAL_EPISODE_STEPS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub clip_epsilon: f64,
    pub rollout_steps: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub value_loss_coef: f64,
    pub entropy_coef: f64,
    pub learning_rate: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: GAMMA,
            clip_epsilon: CLIP_EPSILON,
            rollout_steps: ROLLOUT_STEPS,
            epochs: EPOCHS_PER_UPDATE,
            minibatch_size: MINIBATCH_SIZE,
            value_loss_coef: VALUE_LOSS_COEF,
            entropy_coef: ENTROPY_COEF,
            learning_rate: ADAM_LR,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if self.clip_epsilon <= 0.0 || !self.clip_epsilon.is_finite() {
            return Err(format!("clip epsilon must be positive, got {}", self.clip_epsilon));
        }
        if self.rollout_steps == 0 || self.epochs == 0 || self.minibatch_size == 0 {
            return Err("rollout steps, epochs and minibatch size must be positive".to_string());
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.value_loss_coef < 0.0 || self.entropy_coef < 0.0 {
            return Err("loss coefficients must be non-negative".to_string());
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum PpoError {
    BadConfig(String),
    Instance(InstanceError),
    Env(EnvError),
    Nn(NnError),
    StalledEpisode { steps: u64 },
}

impl fmt::Display for PpoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PpoError::BadConfig(m) => write!(f, "bad trainer configuration: {m}"),
            PpoError::Instance(e) => write!(f, "instance generation failed: {e}"),
            PpoError::Env(e) => write!(f, "environment error: {e}"),
            PpoError::Nn(e) => write!(f, "network error: {e}"),
            PpoError::StalledEpisode { steps } => {
                write!(f, "episode did not terminate within {steps} steps")
            }
        }
    }
}

impl std::error::Error for PpoError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            PpoError::Instance(e) => Some(e),
            PpoError::Env(e) => Some(e),
            PpoError::Nn(e) => Some(e),
            _ => None,
        }
    }
}

impl From<InstanceError> for PpoError {
    fn from(e: InstanceError) -> Self {
        PpoError::Instance(e)
    }
}

impl From<EnvError> for PpoError {
    fn from(e: EnvError) -> Self {
        PpoError::Env(e)
    }
}

impl From<NnError> for PpoError {
    fn from(e: NnError) -> Self {
        PpoError::Nn(e)
    }
}

/// One environment step as stored in the rollout buffer.
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
    /// Behavior-policy log probability of the action at collection time.
    pub log_prob: f64,
    /// Critic estimate at collection time.
    pub value: f64,
}

/// A fixed-length slice of experience, possibly spanning episodes.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub transitions: Vec<Transition>,
    /// Total rewards of the episodes that finished inside this rollout.
    pub episode_returns: Vec<f64>,
    /// Critic estimate of the state after the last transition, seeding the
    /// return recursion when the buffer cuts an episode short. Zero when
    /// the last transition ended its episode.
    pub tail_value: f64,
}

/// Discounted returns, reset across episode boundaries. `tail_value`
/// stands in for everything beyond the end of the buffer; it is ignored
/// whenever the final transition is terminal.
pub fn compute_returns_with_tail(
    rewards: &[f64],
    dones: &[bool],
    gamma: f64,
    tail_value: f64,
) -> Vec<f64> {
    assert_eq!(rewards.len(), dones.len());
    let mut returns = vec![0.0; rewards.len()];
    let mut g = tail_value;
    for i in (0..rewards.len()).rev() {
        if dones[i] {
            g = 0.0;
        }
        g = rewards[i] + gamma * g;
        returns[i] = g;
    }
    returns
}

/// Returns with a zero tail: truncation at the end of the buffer is
/// treated as if nothing followed.
pub fn compute_returns(rewards: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    compute_returns_with_tail(rewards, dones, gamma, 0.0)
}

/// Shifts to zero mean and, unless the spread is degenerate, scales to
/// unit variance.
pub fn standardize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    for v in values.iter_mut() {
        *v -= mean;
    }
    let std = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if std > 1e-12 {
        for v in values.iter_mut() {
            *v /= std;
        }
    }
}

/// Clipped surrogate objective and its derivative in the probability
/// ratio. The derivative is the advantage while the unclipped branch is
/// active (including the tie at the clip boundary) and exactly zero once
/// the clipped branch takes over.
pub fn clip_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> (f64, f64) {
    let clipped_ratio = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    let unclipped = ratio * advantage;
    let clipped = clipped_ratio * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// One sample of a PPO minibatch.
#[derive(Clone, Copy, Debug)]
pub struct BatchSample {
    pub state: StateVector,
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PpoLossTerms {
    /// Mean negated clipped surrogate.
    pub policy: f64,
    /// Mean squared value error (before its coefficient).
    pub value: f64,
    /// Mean policy entropy.
    pub entropy: f64,
    /// The minimized objective: policy + c1 * value - c2 * entropy.
    pub total: f64,
    /// Fraction of samples on the clipped branch.
    pub clip_fraction: f64,
}

/// Minibatch loss and its exact parameter gradient.
pub fn ppo_loss_and_grad(
    net: &PolicyValueNet,
    batch: &[BatchSample],
    cfg: &PpoConfig,
) -> (PpoLossTerms, Vec<f64>) {
    assert!(!batch.is_empty());
    let n = batch.len() as f64;
    let mut grad = vec![0.0; net.param_count()];
    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;
    let mut clipped = 0usize;
    let mut dlogits = vec![0.0; net.actions];
    for s in batch {
        let (logits, value, cache) = net.forward_cached(&s.state);
        let logp = log_softmax(&logits);
        let probs = softmax(&logits);
        let ratio = (logp[s.action] - s.old_log_prob).exp();
        let (surr, dsurr_dratio) = clip_surrogate(ratio, s.advantage, cfg.clip_epsilon);
        let entropy: f64 =
            probs.iter().zip(&logp).filter(|(p, _)| **p > 0.0).map(|(p, l)| -p * l).sum();
        let verr = value - s.ret;

        policy_sum -= surr;
        value_sum += verr * verr;
        entropy_sum += entropy;
        if dsurr_dratio == 0.0 {
            clipped += 1;
        }

        // d(-surr)/dlogit_j = -dsurr_dratio * ratio * (1[j=a] - p_j)
        let dlp_a = -dsurr_dratio * ratio / n;
        for (j, d) in dlogits.iter_mut().enumerate() {
            let indicator = if j == s.action { 1.0 } else { 0.0 };
            *d = dlp_a * (indicator - probs[j]);
            if probs[j] > 0.0 {
                // d(-c2 * entropy)/dlogit_j = c2 * p_j * (log p_j + entropy)
                *d += cfg.entropy_coef * probs[j] * (logp[j] + entropy) / n;
            }
        }
        let dvalue = 2.0 * cfg.value_loss_coef * verr / n;
        net.backward(&cache, &dlogits, dvalue, &mut grad);
    }
    let terms = PpoLossTerms {
        policy: policy_sum / n,
        value: value_sum / n,
        entropy: entropy_sum / n,
        total: policy_sum / n + cfg.value_loss_coef * value_sum / n
            - cfg.entropy_coef * entropy_sum / n,
        clip_fraction: clipped as f64 / n,
    };
    (terms, grad)
}

/// Scalar minibatch loss, for finite-difference comparisons against
/// [`ppo_loss_and_grad`].
pub fn ppo_loss(net: &PolicyValueNet, batch: &[BatchSample], cfg: &PpoConfig) -> f64 {
    let n = batch.len() as f64;
    let mut total = 0.0;
    for s in batch {
        let (logits, value) = net.forward(&s.state);
        let logp = log_softmax(&logits);
        let probs = softmax(&logits);
        let ratio = (logp[s.action] - s.old_log_prob).exp();
        let (surr, _) = clip_surrogate(ratio, s.advantage, cfg.clip_epsilon);
        let entropy: f64 =
            probs.iter().zip(&logp).filter(|(p, _)| **p > 0.0).map(|(p, l)| -p * l).sum();
        let verr = value - s.ret;
        total += -surr + cfg.value_loss_coef * verr * verr - cfg.entropy_coef * entropy;
    }
    total / n
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Highest-logit action among the feasible ones, lowest index on ties.
pub fn greedy_action(logits: &[f64], mask: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, (&l, &ok)) in logits.iter().zip(mask).enumerate() {
        if !ok {
            continue;
        }
        match best {
            Some(b) if logits[b] >= l => {}
            _ => best = Some(i),
        }
    }
    best.expect("some action is always feasible")
}

/// Generates a fresh seeded instance per episode of one experimental
/// setting.
#[derive(Clone, Debug)]
pub struct EpisodeSource {
    params: GenerateParams,
    sim_cfg: SimConfig,
    next_episode: u64,
}

impl EpisodeSource {
    /// `params.seed` acts as the root: episode `i` is generated from
    /// `mix_seed(root, i)` with every other generation knob unchanged.
    pub fn new(params: GenerateParams, sim_cfg: SimConfig) -> EpisodeSource {
        EpisodeSource { params, sim_cfg, next_episode: 0 }
    }

    pub fn next_env(&mut self) -> Result<Env, PpoError> {
        let mut params = self.params.clone();
        params.seed = mix_seed(self.params.seed, self.next_episode);
        self.next_episode += 1;
        let instance = generate_instance(&params)?;
        Ok(Env::new(&instance, self.sim_cfg).map_err(EnvError::Sim)?)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub minibatches: u32,
}

/// One line of the training log, emitted per update.
#[derive(Clone, Copy, Debug)]
pub struct TrainRow {
    pub update: u32,
    pub env_steps: u64,
    pub episodes_completed: u64,
    /// Mean total reward of the episodes finished during this update's
    /// rollout; NaN when none finished.
    pub mean_episode_return: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Actor-critic trainer. Owns the network, the optimizer and the episode
/// currently being played (episodes span rollout boundaries).
pub struct Trainer {
    pub cfg: PpoConfig,
    pub net: PolicyValueNet,
    pub adam: Adam,
    rng: ChaCha8Rng,
    episode: Option<Env>,
    episode_return: f64,
    pub env_steps: u64,
    pub episodes_completed: u64,
}

impl Trainer {
    pub fn new(net: PolicyValueNet, cfg: PpoConfig, seed: u64) -> Result<Trainer, PpoError> {
        cfg.validate().map_err(PpoError::BadConfig)?;
        let adam = Adam::new(net.param_count(), cfg.learning_rate);
        Ok(Trainer {
            cfg,
            net,
            adam,
            rng: ChaCha8Rng::seed_from_u64(seed),
            episode: None,
            episode_return: 0.0,
            env_steps: 0,
            episodes_completed: 0,
        })
    }

    /// Resumes from a checkpointed network and optimizer.
    pub fn resume(
        net: PolicyValueNet,
        adam: Adam,
        cfg: PpoConfig,
        seed: u64,
    ) -> Result<Trainer, PpoError> {
        let mut t = Trainer::new(net, cfg, seed)?;
        t.adam = adam;
        Ok(t)
    }

    /// Plays the behavior policy for one buffer worth of steps, starting
    /// fresh episodes as needed.
    pub fn collect_rollout(&mut self, source: &mut EpisodeSource) -> Result<Rollout, PpoError> {
        let mut transitions = Vec::with_capacity(self.cfg.rollout_steps);
        let mut episode_returns = Vec::new();
        for _ in 0..self.cfg.rollout_steps {
            if self.episode.as_ref().map_or(true, |e| e.is_terminal()) {
                self.episode = Some(source.next_env()?);
                self.episode_return = 0.0;
            }
            let env = self.episode.as_mut().expect("episode exists");
            let state = env.state();
            let (logits, value) = self.net.forward(&state);
            let logp = log_softmax(&logits);
            let probs = softmax(&logits);
            let action = sample_categorical(&mut self.rng, &probs);
            let out = env.step(action)?;
            self.episode_return += out.reward;
            self.env_steps += 1;
            transitions.push(Transition {
                state,
                action,
                reward: out.reward,
                done: out.done,
                log_prob: logp[action],
                value,
            });
            if out.done {
                episode_returns.push(self.episode_return);
                self.episodes_completed += 1;
            }
        }
        let tail_value = match transitions.last() {
            Some(last) if !last.done => {
                let env = self.episode.as_ref().expect("episode exists");
                self.net.forward(&env.state()).1
            }
            _ => 0.0,
        };
        Ok(Rollout { transitions, episode_returns, tail_value })
    }

    /// Several clipped-surrogate epochs over the rollout.
    pub fn update(&mut self, rollout: &Rollout) -> Result<UpdateStats, PpoError> {
        let t = &rollout.transitions;
        assert!(!t.is_empty());
        let rewards: Vec<f64> = t.iter().map(|x| x.reward).collect();
        let dones: Vec<bool> = t.iter().map(|x| x.done).collect();
        let returns =
            compute_returns_with_tail(&rewards, &dones, self.cfg.gamma, rollout.tail_value);
        let mut advantages: Vec<f64> =
            returns.iter().zip(t).map(|(g, x)| g - x.value).collect();
        standardize(&mut advantages);

        let mut indices: Vec<usize> = (0..t.len()).collect();
        let mut stats = UpdateStats::default();
        for _ in 0..self.cfg.epochs {
            indices.shuffle(&mut self.rng);
            for chunk in indices.chunks(self.cfg.minibatch_size) {
                let batch: Vec<BatchSample> = chunk
                    .iter()
                    .map(|&i| BatchSample {
                        state: t[i].state,
                        action: t[i].action,
                        old_log_prob: t[i].log_prob,
                        advantage: advantages[i],
                        ret: returns[i],
                    })
                    .collect();
                let (terms, grad) = ppo_loss_and_grad(&self.net, &batch, &self.cfg);
                self.adam.apply(&mut self.net.params, &grad)?;
                stats.policy_loss += terms.policy;
                stats.value_loss += terms.value;
                stats.entropy += terms.entropy;
                stats.clip_fraction += terms.clip_fraction;
                stats.minibatches += 1;
            }
        }
        let k = f64::from(stats.minibatches);
        stats.policy_loss /= k;
        stats.value_loss /= k;
        stats.entropy /= k;
        stats.clip_fraction /= k;
        Ok(stats)
    }

    /// Alternates rollouts and updates until at least `total_env_steps`
    /// environment steps have been consumed, invoking `on_update` with each
    /// log row.
    pub fn train(
        &mut self,
        source: &mut EpisodeSource,
        total_env_steps: u64,
        mut on_update: impl FnMut(&TrainRow),
    ) -> Result<Vec<TrainRow>, PpoError> {
        let mut rows = Vec::new();
        while self.env_steps < total_env_steps {
            let rollout = self.collect_rollout(source)?;
            let stats = self.update(&rollout)?;
            let mean_episode_return = if rollout.episode_returns.is_empty() {
                f64::NAN
            } else {
                rollout.episode_returns.iter().sum::<f64>() / rollout.episode_returns.len() as f64
            };
            let row = TrainRow {
                update: rows.len() as u32 + 1,
                env_steps: self.env_steps,
                episodes_completed: self.episodes_completed,
                mean_episode_return,
                policy_loss: stats.policy_loss,
                value_loss: stats.value_loss,
                entropy: stats.entropy,
                clip_fraction: stats.clip_fraction,
            };
            on_update(&row);
            rows.push(row);
        }
        Ok(rows)
    }
}

/// How evaluation selects actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyMode {
    /// Draw from the full action distribution, penalties and all — the
    /// same behavior as training.
    Sampled,
    /// Highest-probability feasible action.
    Greedy,
}

#[derive(Clone, Copy, Debug)]
pub struct EpisodeStats {
    pub instance_seed: u64,
    pub total_reward: f64,
    pub steps: u64,
    pub tardy: u32,
    pub unprocessed: u32,
    pub n_total: u32,
    /// Percentage of orders tardy or written off.
    pub tardy_pct: f64,
    /// Terminal episode score.
    pub score: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeStats>,
}

impl EvalReport {
    pub fn mean_return(&self) -> f64 {
        self.episodes.iter().map(|e| e.total_reward).sum::<f64>() / self.episodes.len() as f64
    }

    pub fn mean_tardy_pct(&self) -> f64 {
        self.episodes.iter().map(|e| e.tardy_pct).sum::<f64>() / self.episodes.len() as f64
    }

    pub fn mean_score(&self) -> f64 {
        self.episodes.iter().map(|e| e.score).sum::<f64>() / self.episodes.len() as f64
    }
}

fn finish_episode(env: &Env, instance_seed: u64, total_reward: f64, steps: u64) -> EpisodeStats {
    let failed = env.failed_orders();
    let n = env.n_total();
    EpisodeStats {
        instance_seed,
        total_reward,
        steps,
        tardy: env.sim().n_tardy(),
        unprocessed: env.sim().n_unprocessed(),
        n_total: n,
        tardy_pct: 100.0 * f64::from(failed) / f64::from(n),
        score: crate::env::terminal_value(failed, n),
    }
}

/// Runs one episode per instance under the given policy. Episode `i` uses
/// a deterministic RNG derived from `seed` and `i`.
pub fn evaluate_policy(
    net: &PolicyValueNet,
    instances: &[ProblemInstance],
    sim_cfg: SimConfig,
    mode: PolicyMode,
    seed: u64,
) -> Result<EvalReport, PpoError> {
    let mut report = EvalReport::default();
    for (idx, instance) in instances.iter().enumerate() {
        let mut env = Env::new(instance, sim_cfg).map_err(EnvError::Sim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, idx as u64));
        let mut state = env.reset();
        let mut total_reward = 0.0;
        let mut steps = 0u64;
        loop {
            let (logits, _) = net.forward(&state);
            let action = match mode {
                PolicyMode::Sampled => sample_categorical(&mut rng, &softmax(&logits)),
                PolicyMode::Greedy => greedy_action(&logits, &env.feasible_mask()),
            };
            let out = env.step(action)?;
            total_reward += out.reward;
            steps += 1;
            state = out.state;
            if out.done {
                break;
            }
            if steps >= MAX_EVAL_EPISODE_STEPS {
                return Err(PpoError::StalledEpisode { steps });
            }
        }
        report.episodes.push(finish_episode(&env, instance.seed, total_reward, steps));
    }
    Ok(report)
}

/// Baseline that picks uniformly among the feasible actions.
pub fn evaluate_random_feasible(
    instances: &[ProblemInstance],
    sim_cfg: SimConfig,
    seed: u64,
) -> Result<EvalReport, PpoError> {
    let mut report = EvalReport::default();
    for (idx, instance) in instances.iter().enumerate() {
        let mut env = Env::new(instance, sim_cfg).map_err(EnvError::Sim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, idx as u64));
        env.reset();
        let mut total_reward = 0.0;
        let mut steps = 0u64;
        loop {
            let mask = env.feasible_mask();
            let feasible: Vec<usize> =
                (0..ACTION_COUNT).filter(|&i| mask[i]).collect();
            let action = feasible[rng.gen_range(0..feasible.len())];
            let out = env.step(action)?;
            total_reward += out.reward;
            steps += 1;
            if out.done {
                break;
            }
            if steps >= MAX_EVAL_EPISODE_STEPS {
                return Err(PpoError::StalledEpisode { steps });
            }
        }
        report.episodes.push(finish_episode(&env, instance.seed, total_reward, steps));
    }
    Ok(report)
}
