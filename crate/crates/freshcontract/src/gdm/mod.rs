//! Generative-diffusion contract designer.
//!
//! The policy is a conditional denoiser: starting from Gaussian noise, a
//! generation network iteratively removes noise — conditioned on the market
//! state and the step index — until a raw contract action remains. Training
//! follows the off-policy actor-critic pattern: two critics regress the
//! penalized market reward (their minimum counters overestimation), and the
//! generation network ascends the critic value with gradients flowing
//! through every step of the denoising chain. Target copies of all three
//! networks are pulled toward the online ones by Polyak averaging after each
//! update.

mod replay;
mod schedule;

pub use replay::{ReplayBuffer, Transition};
pub use schedule::{build_schedule, DiffusionSchedule};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config, numeric, structure, Result};
use crate::market::Environment;
use crate::nn::{soft_update, Activation, AdamConfig, AdamState, DenseNet, NetGrads, Trace};

/// Which state-action pair the critic target bootstraps on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticBootstrap {
    /// Standard actor-critic target: the target policy's action at the next
    /// state, `y = r + gamma * min q'(s', a'(s'))`.
    NextState,
    /// Bootstrap on the stored state-action pair itself,
    /// `y = r + gamma * min q'(s, a)`.
    SameStateAction,
}

/// Architecture and sampler hyperparameters of the diffusion agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdmConfig {
    /// Hidden layer widths shared by the generation network and the critics.
    pub hidden_sizes: Vec<usize>,
    /// Width of the sinusoidal step embedding appended to the generation
    /// network input.
    pub time_embed_dim: usize,
    /// Number of denoising steps `T`.
    pub denoise_steps: usize,
    /// Noise schedule endpoints, linearly interpolated over `T` steps.
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// Standard deviation of the Gaussian exploration noise added to the
    /// generated action before squashing.
    pub exploration_noise: f64,
    /// Discount factor. Zero treats each step as a one-shot decision, which
    /// is exact here because market states are independent across steps.
    pub discount: f64,
    pub bootstrap: CriticBootstrap,
}

impl Default for GdmConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![256, 256],
            time_embed_dim: 8,
            denoise_steps: 5,
            beta_lo: 1e-4,
            beta_hi: 0.02,
            exploration_noise: 0.01,
            discount: 0.0,
            bootstrap: CriticBootstrap::NextState,
        }
    }
}

impl GdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() || self.hidden_sizes.iter().any(|&w| w == 0) {
            return Err(config("hidden sizes must be non-empty and positive"));
        }
        if self.time_embed_dim == 0 {
            return Err(config("time embedding width must be positive"));
        }
        if self.denoise_steps == 0 {
            return Err(config("at least one denoising step is required"));
        }
        if !(0.0 < self.beta_lo && self.beta_lo <= self.beta_hi && self.beta_hi < 1.0) {
            return Err(config("noise schedule endpoints must satisfy 0 < lo <= hi < 1"));
        }
        if !(self.exploration_noise >= 0.0 && self.exploration_noise.is_finite()) {
            return Err(config("exploration noise must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(config("discount must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Sinusoidal embedding of a one-based step index.
pub fn time_embedding(step: usize, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    let t = step as f64;
    let mut j = 0;
    while 2 * j < dim {
        let freq = 10_000f64.powf(-2.0 * j as f64 / dim as f64);
        out[2 * j] = (t * freq).sin();
        if 2 * j + 1 < dim {
            out[2 * j + 1] = (t * freq).cos();
        }
        j += 1;
    }
    out
}

/// The diffusion contract designer: generation network, double critics, and
/// target copies of all three, plus the noise schedule they share.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdmAgent {
    pub(crate) generation: DenseNet,
    pub(crate) target_generation: DenseNet,
    pub(crate) critic_1: DenseNet,
    pub(crate) critic_2: DenseNet,
    pub(crate) target_critic_1: DenseNet,
    pub(crate) target_critic_2: DenseNet,
    pub(crate) schedule: DiffusionSchedule,
    state_dim: usize,
    action_dim: usize,
    time_embed_dim: usize,
    exploration_noise: f64,
    discount: f64,
    bootstrap: CriticBootstrap,
}

impl GdmAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        cfg: &GdmConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        if state_dim == 0 || action_dim == 0 {
            return Err(config("state and action dimensions must be positive"));
        }
        let mut gen_dims = vec![action_dim + state_dim + cfg.time_embed_dim];
        gen_dims.extend_from_slice(&cfg.hidden_sizes);
        gen_dims.push(action_dim);
        let generation = DenseNet::new(&gen_dims, Activation::Silu, Activation::Identity, rng)?;

        let mut critic_dims = vec![state_dim + action_dim];
        critic_dims.extend_from_slice(&cfg.hidden_sizes);
        critic_dims.push(1);
        let critic_1 = DenseNet::new(&critic_dims, Activation::Relu, Activation::Identity, rng)?;
        let critic_2 = DenseNet::new(&critic_dims, Activation::Relu, Activation::Identity, rng)?;

        Ok(Self {
            target_generation: generation.clone(),
            target_critic_1: critic_1.clone(),
            target_critic_2: critic_2.clone(),
            generation,
            critic_1,
            critic_2,
            schedule: build_schedule(cfg.denoise_steps, cfg.beta_lo, cfg.beta_hi)?,
            state_dim,
            action_dim,
            time_embed_dim: cfg.time_embed_dim,
            exploration_noise: cfg.exploration_noise,
            discount: cfg.discount,
            bootstrap: cfg.bootstrap,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn schedule(&self) -> &DiffusionSchedule {
        &self.schedule
    }

    pub fn generation_network(&self) -> &DenseNet {
        &self.generation
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.state_dim {
            return Err(structure(format!(
                "expected state of length {}, got {}",
                self.state_dim,
                state.len()
            )));
        }
        Ok(())
    }

    /// Generates a raw action in `[-1, 1]^action_dim` by denoising a fresh
    /// Gaussian sample conditioned on `state`. With exploration enabled,
    /// zero-mean Gaussian noise is added before the final squash.
    pub fn denoise_sample<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        rng: &mut R,
        with_exploration: bool,
    ) -> Result<Vec<f64>> {
        let initial: Vec<f64> =
            (0..self.action_dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        self.denoise_from(&initial, state, rng, with_exploration)
    }

    /// Like [`Self::denoise_sample`] but starting from a caller-supplied
    /// terminal sample instead of a fresh Gaussian draw.
    pub fn denoise_from<R: Rng + ?Sized>(
        &self,
        initial: &[f64],
        state: &[f64],
        rng: &mut R,
        with_exploration: bool,
    ) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let mut raw = denoise_chain(
            &self.generation,
            &self.schedule,
            self.time_embed_dim,
            initial,
            state,
            rng,
            None,
        )?;
        if with_exploration && self.exploration_noise > 0.0 {
            for a in &mut raw {
                *a += self.exploration_noise * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(raw.iter().map(|a| a.tanh()).collect())
    }

    fn denoise_target<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let initial: Vec<f64> =
            (0..self.action_dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let raw = denoise_chain(
            &self.target_generation,
            &self.schedule,
            self.time_embed_dim,
            &initial,
            state,
            rng,
            None,
        )?;
        Ok(raw.iter().map(|a| a.tanh()).collect())
    }

    fn critic_value(net: &DenseNet, state: &[f64], action: &[f64]) -> Result<f64> {
        let mut input = Vec::with_capacity(state.len() + action.len());
        input.extend_from_slice(state);
        input.extend_from_slice(action);
        Ok(net.forward(&input)?[0])
    }

    /// One double-critic regression step on a sampled batch. Targets are
    /// `y = scale * r + gamma * min(q1', q2')` evaluated per the configured
    /// bootstrap; both critics step toward `y` by squared error. Returns the
    /// mean squared error over the batch, averaged across the two critics.
    pub fn critic_update<R: Rng + ?Sized>(
        &mut self,
        batch: &[&Transition],
        opt_1: &mut AdamState,
        opt_2: &mut AdamState,
        rng: &mut R,
        reward_scale: f64,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(structure("critic update needs a non-empty batch"));
        }
        let n = batch.len() as f64;
        let mut grads_1 = NetGrads::zeros_like(&self.critic_1);
        let mut grads_2 = NetGrads::zeros_like(&self.critic_2);
        let mut trace = Trace::new(&self.critic_1);
        let mut loss_1 = 0.0;
        let mut loss_2 = 0.0;
        for tr in batch {
            let target = if self.discount == 0.0 {
                reward_scale * tr.reward
            } else {
                let (boot_state, boot_action): (&[f64], Vec<f64>) = match self.bootstrap {
                    CriticBootstrap::NextState => {
                        (&tr.next_state, self.denoise_target(&tr.next_state, rng)?)
                    }
                    CriticBootstrap::SameStateAction => (&tr.state, tr.action.clone()),
                };
                let q1 = Self::critic_value(&self.target_critic_1, boot_state, &boot_action)?;
                let q2 = Self::critic_value(&self.target_critic_2, boot_state, &boot_action)?;
                reward_scale * tr.reward + self.discount * q1.min(q2)
            };
            if !target.is_finite() {
                return Err(numeric(format!("non-finite critic target {target}")));
            }
            let mut input = Vec::with_capacity(self.state_dim + self.action_dim);
            input.extend_from_slice(&tr.state);
            input.extend_from_slice(&tr.action);
            for (net, grads, loss) in [
                (&self.critic_1, &mut grads_1, &mut loss_1),
                (&self.critic_2, &mut grads_2, &mut loss_2),
            ] {
                net.forward_trace(&input, &mut trace)?;
                let q = trace.output()[0];
                let err = q - target;
                *loss += err * err;
                net.backward_from_trace(&input, &trace, &[2.0 * err / n], grads)?;
            }
        }
        opt_1.step_net(&mut self.critic_1, &grads_1)?;
        opt_2.step_net(&mut self.critic_2, &grads_2)?;
        Ok((loss_1 / n + loss_2 / n) / 2.0)
    }

    /// One policy-gradient ascent step of the generation network on a batch
    /// of states: regenerate actions differentiably through the denoising
    /// chain, evaluate `min(q1, q2)`, and ascend its mean. Returns the mean
    /// critic value of the generated actions before the update.
    pub fn actor_update<R: Rng + ?Sized>(
        &mut self,
        states: &[&[f64]],
        opt: &mut AdamState,
        rng: &mut R,
    ) -> Result<f64> {
        let state_dim = self.state_dim;
        let critic_1 = &self.critic_1;
        let critic_2 = &self.critic_2;
        actor_step(
            &mut self.generation,
            &self.schedule,
            self.time_embed_dim,
            self.action_dim,
            states,
            opt,
            rng,
            |state, action| {
                let mut input = Vec::with_capacity(state.len() + action.len());
                input.extend_from_slice(state);
                input.extend_from_slice(action);
                let q1 = critic_1.forward(&input)?[0];
                let q2 = critic_2.forward(&input)?[0];
                let (value, chosen) = if q1 <= q2 { (q1, critic_1) } else { (q2, critic_2) };
                let input_grad = chosen.input_gradient(&input, &[1.0])?;
                Ok((value, input_grad[state_dim..].to_vec()))
            },
        )
    }

    /// Polyak-updates all three target networks toward their online copies.
    pub fn soft_update_targets(&mut self, eta: f64) -> Result<()> {
        soft_update(&mut self.target_generation, &self.generation, eta)?;
        soft_update(&mut self.target_critic_1, &self.critic_1, eta)?;
        soft_update(&mut self.target_critic_2, &self.critic_2, eta)
    }

    pub(crate) fn params_finite(&self) -> bool {
        self.generation.params_finite()
            && self.critic_1.params_finite()
            && self.critic_2.params_finite()
    }
}

/// One recorded step of a denoising chain, for backpropagation.
struct ChainStep {
    input: Vec<f64>,
    trace: Trace,
}

/// Runs the reverse chain `a^{t-1} = a^t / sqrt(chi_t)
/// - noise_t / sqrt(chi_t (1 - chi_bar_t)) * eps(a^t, s, t) + sqrt(noise_t) z`
/// from `t = T` down to `t = 1`, with `z = 0` at the terminal step. Returns
/// the pre-squash `a^0`. When `record` is given, stores each step's network
/// input and trace so gradients can flow back through the whole chain.
fn denoise_chain<R: Rng + ?Sized>(
    net: &DenseNet,
    schedule: &DiffusionSchedule,
    time_embed_dim: usize,
    initial: &[f64],
    state: &[f64],
    rng: &mut R,
    mut record: Option<&mut Vec<ChainStep>>,
) -> Result<Vec<f64>> {
    let action_dim = initial.len();
    let mut a = initial.to_vec();
    for t in (1..=schedule.steps()).rev() {
        let noise = schedule.noise(t);
        let chi = schedule.chi(t);
        let chi_bar = schedule.chi_bar(t);
        let eps_coef = noise / (chi * (1.0 - chi_bar)).sqrt();

        let mut input = Vec::with_capacity(action_dim + state.len() + time_embed_dim);
        input.extend_from_slice(&a);
        input.extend_from_slice(state);
        input.extend_from_slice(&time_embedding(t, time_embed_dim));

        let eps = match record.as_deref_mut() {
            Some(steps) => {
                let mut trace = Trace::new(net);
                net.forward_trace(&input, &mut trace)?;
                let eps = trace.output().to_vec();
                steps.push(ChainStep { input: input.clone(), trace });
                eps
            }
            None => net.forward(&input)?,
        };

        for (i, ai) in a.iter_mut().enumerate() {
            let z: f64 = if t > 1 { rng.sample(StandardNormal) } else { 0.0 };
            *ai = *ai / chi.sqrt() - eps_coef * eps[i] + noise.sqrt() * z;
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(numeric(format!("non-finite denoising iterate at step {t}: {a:?}")));
        }
    }
    Ok(a)
}

/// Backpropagates a gradient w.r.t. the squashed chain output through the
/// tanh squash and every recorded chain step, accumulating generation-network
/// parameter gradients into `grads`.
fn backprop_recorded_chain(
    net: &DenseNet,
    schedule: &DiffusionSchedule,
    steps: &[ChainStep],
    squashed: &[f64],
    dq_dsquashed: &[f64],
    grads: &mut NetGrads,
) -> Result<()> {
    // d objective / d raw a^0, through the tanh squash.
    let mut g: Vec<f64> = dq_dsquashed
        .iter()
        .zip(squashed)
        .map(|(d, s)| d * (1.0 - s * s))
        .collect();
    // Chain steps were recorded for t = T..1; walk them back from the final
    // step (t = 1) to the first (t = T).
    for (offset, step) in steps.iter().rev().enumerate() {
        let t = 1 + offset;
        let noise = schedule.noise(t);
        let chi = schedule.chi(t);
        let chi_bar = schedule.chi_bar(t);
        let eps_coef = noise / (chi * (1.0 - chi_bar)).sqrt();
        let upstream: Vec<f64> = g.iter().map(|gi| -eps_coef * gi).collect();
        let input_grad = net.backward_from_trace(&step.input, &step.trace, &upstream, grads)?;
        for (gi, ig) in g.iter_mut().zip(&input_grad) {
            *gi = *gi / chi.sqrt() + ig;
        }
    }
    Ok(())
}

/// Runs the reverse chain of an arbitrary generation network from a supplied
/// terminal sample and returns the pre-squash output.
pub fn run_denoise_chain<R: Rng + ?Sized>(
    net: &DenseNet,
    schedule: &DiffusionSchedule,
    time_embed_dim: usize,
    initial: &[f64],
    state: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    denoise_chain(net, schedule, time_embed_dim, initial, state, rng, None)
}

/// Differentiable chain sampling: runs the chain, squashes the output, and
/// accumulates `d(upstream . tanh(a^0)) / d(net params)` into `grads`.
/// Returns the squashed output.
pub fn denoise_chain_backward<R: Rng + ?Sized>(
    net: &DenseNet,
    schedule: &DiffusionSchedule,
    time_embed_dim: usize,
    initial: &[f64],
    state: &[f64],
    rng: &mut R,
    upstream: &[f64],
    grads: &mut NetGrads,
) -> Result<Vec<f64>> {
    let mut steps = Vec::with_capacity(schedule.steps());
    let raw = denoise_chain(
        net,
        schedule,
        time_embed_dim,
        initial,
        state,
        rng,
        Some(&mut steps),
    )?;
    let squashed: Vec<f64> = raw.iter().map(|a| a.tanh()).collect();
    backprop_recorded_chain(net, schedule, &steps, &squashed, upstream, grads)?;
    Ok(squashed)
}

/// Shared actor-ascent machinery: `q_fn(state, squashed_action)` returns the
/// objective value and its gradient w.r.t. the squashed action. Gradients
/// flow through the squash and every chain step into the generation network.
fn actor_step<R: Rng + ?Sized>(
    generation: &mut DenseNet,
    schedule: &DiffusionSchedule,
    time_embed_dim: usize,
    action_dim: usize,
    states: &[&[f64]],
    opt: &mut AdamState,
    rng: &mut R,
    mut q_fn: impl FnMut(&[f64], &[f64]) -> Result<(f64, Vec<f64>)>,
) -> Result<f64> {
    if states.is_empty() {
        return Err(structure("actor update needs a non-empty batch"));
    }
    let n = states.len() as f64;
    let mut grads = NetGrads::zeros_like(generation);
    let mut total_q = 0.0;
    let mut steps: Vec<ChainStep> = Vec::with_capacity(schedule.steps());
    for state in states {
        steps.clear();
        let initial: Vec<f64> =
            (0..action_dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let raw = denoise_chain(
            generation,
            schedule,
            time_embed_dim,
            &initial,
            state,
            rng,
            Some(&mut steps),
        )?;
        let squashed: Vec<f64> = raw.iter().map(|a| a.tanh()).collect();
        let (q, dq_dsquashed) = q_fn(state, &squashed)?;
        if !q.is_finite() {
            return Err(numeric(format!("non-finite critic value {q} in actor update")));
        }
        total_q += q;
        backprop_recorded_chain(generation, schedule, &steps, &squashed, &dq_dsquashed, &mut grads)?;
    }
    // Ascend the mean objective: minimize its negation.
    grads.scale(-1.0 / n);
    opt.step_net(generation, &grads)?;
    Ok(total_q / n)
}

/// Loop-scale training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Polyak mixing factor for the target networks.
    pub soft_update: f64,
    /// Rewards are multiplied by this factor inside critic targets so value
    /// magnitudes stay near unit scale; reported metrics are unscaled.
    pub reward_scale: f64,
    /// Number of environment steps collected before the first update. Zero
    /// means updates begin as soon as the buffer holds one batch.
    pub warmup_steps: usize,
    /// Episodes between deterministic evaluations; zero disables them.
    pub eval_every: usize,
    /// Number of states per deterministic evaluation.
    pub eval_states: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            steps_per_episode: 20,
            batch_size: 512,
            buffer_capacity: 1_000_000,
            actor_lr: 1e-6,
            critic_lr: 1e-6,
            soft_update: 0.005,
            reward_scale: 1.0,
            warmup_steps: 0,
            eval_every: 10,
            eval_states: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return Err(config("episodes and steps per episode must be positive"));
        }
        if self.batch_size == 0 {
            return Err(config("batch size must be positive"));
        }
        if self.batch_size > self.buffer_capacity {
            return Err(config("batch size cannot exceed the replay capacity"));
        }
        if self.warmup_steps > self.buffer_capacity {
            return Err(config("warmup cannot exceed the replay capacity"));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(config("learning rates must be positive"));
        }
        if !(0.0 < self.soft_update && self.soft_update <= 1.0) {
            return Err(config("soft update factor must lie in (0, 1]"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(config("reward scale must be positive"));
        }
        if self.eval_every > 0 && self.eval_states == 0 {
            return Err(config("evaluation needs at least one state"));
        }
        Ok(())
    }
}

/// One line of the training metrics series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Mean environment reward of the episode's training steps.
    pub train_reward: f64,
    /// Mean reward of a deterministic evaluation, when one ran this episode.
    pub eval_reward: Option<f64>,
}

fn eval_seed(train_seed: u64) -> u64 {
    train_seed ^ 0x5eed_0fe4_a100_0000u64
}

/// Mean reward of the agent over `n` states drawn from a freshly reseeded
/// evaluation environment, acting without exploration noise.
pub fn evaluate<E: Environment>(
    agent: &GdmAgent,
    eval_env: &mut E,
    n: usize,
    seed: u64,
) -> Result<f64> {
    eval_env.reseed(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n {
        let state = eval_env.sample_state_vec();
        let action = agent.denoise_sample(&state, &mut rng, false)?;
        total += eval_env.reward(&state, &action)?;
    }
    Ok(total / n as f64)
}

/// Trains a diffusion agent on the environment: per step, observe a state,
/// denoise an action with exploration, price it, store the transition, then
/// update critics, actor, and targets from a replay batch once the buffer
/// holds a batch. Returns the trained agent and the per-episode metrics.
pub fn train<E: Environment>(
    env: &mut E,
    eval_env: &mut E,
    gdm_cfg: &GdmConfig,
    train_cfg: &TrainConfig,
) -> Result<(GdmAgent, Vec<EpisodeRecord>)> {
    gdm_cfg.validate()?;
    train_cfg.validate()?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    init_rng.set_stream(0);
    let mut agent = GdmAgent::new(env.state_dim(), env.action_dim(), gdm_cfg, &mut init_rng)?;
    let mut step_rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    step_rng.set_stream(1);

    let mut opt_actor =
        AdamState::for_net(AdamConfig::with_lr(train_cfg.actor_lr), &agent.generation);
    let mut opt_c1 = AdamState::for_net(AdamConfig::with_lr(train_cfg.critic_lr), &agent.critic_1);
    let mut opt_c2 = AdamState::for_net(AdamConfig::with_lr(train_cfg.critic_lr), &agent.critic_2);
    let mut buffer = ReplayBuffer::new(train_cfg.buffer_capacity)?;

    let mut records = Vec::with_capacity(train_cfg.episodes);
    let mut current = env.sample_state_vec();
    for episode in 1..=train_cfg.episodes {
        let mut episode_reward = 0.0;
        for _ in 0..train_cfg.steps_per_episode {
            let action = agent.denoise_sample(&current, &mut step_rng, true)?;
            let reward = env.reward(&current, &action)?;
            let next = env.sample_state_vec();
            buffer.push(Transition {
                state: std::mem::replace(&mut current, next.clone()),
                action,
                reward,
                next_state: next,
            });
            episode_reward += reward;

            if buffer.len() >= train_cfg.batch_size.max(train_cfg.warmup_steps) {
                let indices = buffer.sample_indices(train_cfg.batch_size, &mut step_rng)?;
                let batch: Vec<&Transition> = indices.iter().map(|&i| buffer.get(i)).collect();
                agent.critic_update(
                    &batch,
                    &mut opt_c1,
                    &mut opt_c2,
                    &mut step_rng,
                    train_cfg.reward_scale,
                )?;
                let states: Vec<&[f64]> = batch.iter().map(|tr| tr.state.as_slice()).collect();
                agent.actor_update(&states, &mut opt_actor, &mut step_rng)?;
                agent.soft_update_targets(train_cfg.soft_update)?;
            }
        }
        let eval_reward = if train_cfg.eval_every > 0 && episode % train_cfg.eval_every == 0 {
            Some(evaluate(&agent, eval_env, train_cfg.eval_states, eval_seed(train_cfg.seed))?)
        } else {
            None
        };
        records.push(EpisodeRecord {
            episode,
            train_reward: episode_reward / train_cfg.steps_per_episode as f64,
            eval_reward,
        });
        if !agent.params_finite() {
            return Err(numeric(format!("non-finite parameters after episode {episode}")));
        }
    }
    Ok((agent, records))
}

/// Generates the contract menu an agent designs for one market state.
pub fn infer(
    agent: &GdmAgent,
    state: &crate::market::MarketState,
    env_cfg: &crate::market::EnvConfig,
    rng: &mut ChaCha8Rng,
) -> Result<crate::contract::ContractMenu> {
    let encoded = crate::market::encode_state(state, env_cfg)?;
    let raw = agent.denoise_sample(&encoded, rng, false)?;
    crate::market::decode_action(&raw, env_cfg)
}
