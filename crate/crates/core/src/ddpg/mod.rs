//! Deep Deterministic Policy Gradient.
//!
//! The critic `Q(s, a)` regresses toward the one-step target
//! `y = r + γ·Q'(s', μ'(s'))` computed with lagged target networks; the actor
//! `μ(s)` climbs the deterministic policy gradient `E[∇_a Q(s, a)·∇_θ μ(s)]`.
//! Targets trail the online networks by Polyak averaging.

mod checkpoint;
mod noise;
mod replay;
mod train;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use noise::OuNoise;
pub use replay::{ReplayBuffer, Transition};
pub use train::{metrics_csv, train, EpisodeMetrics, TrainingRun, METRICS_HEADER};

use std::fmt::Write as _;

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::neural::{adam_step, Activation, AdamState, Gradients, Mlp, NeuralError};
use crate::sensors::{normalize_state, SensorFrame, STATE_DIM};
use crate::Command;

pub const ACTION_DIM: usize = 2;
/// Bound of the uniform initialisation of both output layers.
pub const OUTPUT_INIT_BOUND: f64 = 3e-3;

#[derive(Debug, Error)]
pub enum DdpgError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,
    #[error("invalid trainer config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hidden-layer widths of actor and critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkProfile {
    /// 400 and 300 hidden units.
    Full,
    /// 32 and 32 hidden units, for fast experiments and tests.
    Tiny,
}

impl NetworkProfile {
    pub fn hidden(self) -> [usize; 2] {
        match self {
            NetworkProfile::Full => [400, 300],
            NetworkProfile::Tiny => [32, 32],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NetworkProfile::Full => "full",
            NetworkProfile::Tiny => "tiny",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "full" => Some(NetworkProfile::Full),
            "tiny" => Some(NetworkProfile::Tiny),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub batch: usize,
    pub tau_soft: f64,
    pub buffer_capacity: usize,
    /// Environment steps collected before updates start.
    pub warmup: usize,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    /// Time step of the noise recurrence.
    pub ou_dt: f64,
    pub total_steps: usize,
    pub max_episode_steps: usize,
    pub seed: u64,
    /// Speed in km/h is divided by this to form the reward.
    pub reward_scale: f64,
    pub profile: NetworkProfile,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            batch: 64,
            tau_soft: 0.001,
            buffer_capacity: 100_000,
            warmup: 1000,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            ou_dt: 1.0,
            total_steps: 50_000,
            max_episode_steps: 1000,
            seed: 0,
            reward_scale: 150.0,
            profile: NetworkProfile::Full,
        }
    }
}

impl TrainerConfig {
    /// The fast profile used for desk-scale runs.
    pub fn tiny() -> Self {
        Self { profile: NetworkProfile::Tiny, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DdpgError> {
        let bad = |m: &str| Err(DdpgError::InvalidConfig(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if !(self.tau_soft > 0.0 && self.tau_soft <= 1.0) {
            return bad("tau_soft must lie in (0, 1]");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity must be positive");
        }
        if self.max_episode_steps == 0 {
            return bad("max_episode_steps must be positive");
        }
        if !(self.ou_theta >= 0.0 && self.ou_sigma >= 0.0 && self.ou_dt > 0.0) {
            return bad("noise parameters must be non-negative with ou_dt > 0");
        }
        if !(self.reward_scale > 0.0) {
            return bad("reward_scale must be positive");
        }
        Ok(())
    }

    /// Canonical `key=value` rendering, used for hashing and sidecars.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "actor_lr={}", self.actor_lr);
        let _ = writeln!(s, "critic_lr={}", self.critic_lr);
        let _ = writeln!(s, "gamma={}", self.gamma);
        let _ = writeln!(s, "batch={}", self.batch);
        let _ = writeln!(s, "tau_soft={}", self.tau_soft);
        let _ = writeln!(s, "buffer_capacity={}", self.buffer_capacity);
        let _ = writeln!(s, "warmup={}", self.warmup);
        let _ = writeln!(s, "ou_theta={}", self.ou_theta);
        let _ = writeln!(s, "ou_sigma={}", self.ou_sigma);
        let _ = writeln!(s, "ou_dt={}", self.ou_dt);
        let _ = writeln!(s, "total_steps={}", self.total_steps);
        let _ = writeln!(s, "max_episode_steps={}", self.max_episode_steps);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "reward_scale={}", self.reward_scale);
        let _ = writeln!(s, "profile={}", self.profile.name());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`TrainerConfig::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-step reward: forward speed along the track axis in km/h over
/// `scale`, clamped to `[0, 2]`. Never negative.
pub fn reward(speed_mps: f64, delta_psi: f64, scale: f64) -> f64 {
    (speed_mps * 3.6 * delta_psi.cos() / scale).clamp(0.0, 2.0)
}

pub fn new_actor<R: Rng + ?Sized>(profile: NetworkProfile, rng: &mut R) -> Mlp {
    let [h1, h2] = profile.hidden();
    Mlp::init(&[STATE_DIM, h1, h2, ACTION_DIM], Activation::Relu, Activation::Tanh, OUTPUT_INIT_BOUND, rng)
}

/// Critic taking `[state, action]` concatenated at its first layer.
pub fn new_critic<R: Rng + ?Sized>(profile: NetworkProfile, rng: &mut R) -> Mlp {
    let [h1, h2] = profile.hidden();
    Mlp::init(&[STATE_DIM + ACTION_DIM, h1, h2, 1], Activation::Relu, Activation::Identity, OUTPUT_INIT_BOUND, rng)
}

fn critic_input(s: &[f64], a: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(s.len() + a.len());
    x.extend_from_slice(s);
    x.extend_from_slice(a);
    x
}

/// `Q(s, a)`.
pub fn q_value(critic: &Mlp, s: &[f64], a: &[f64]) -> Result<f64, DdpgError> {
    Ok(critic.predict(&critic_input(s, a))?[0])
}

/// Bootstrapped regression targets; terminal transitions use `y = r`.
pub fn td_targets(
    target_critic: &Mlp,
    target_actor: &Mlp,
    batch: &[&Transition],
    gamma: f64,
) -> Result<Vec<f64>, DdpgError> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.r);
            }
            let a_next = target_actor.predict(&t.s_next)?;
            Ok(t.r + gamma * q_value(target_critic, &t.s_next, &a_next)?)
        })
        .collect()
}

/// Loss and mean prediction of a critic minibatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticStats {
    /// `mean (y − Q(s, a))²` before the update.
    pub loss: f64,
    /// `mean Q(s, a)` before the update.
    pub mean_q: f64,
}

/// Mean squared error of `critic` against fixed `targets`, with its gradient.
pub fn regression_gradient(
    critic: &Mlp,
    batch: &[&Transition],
    targets: &[f64],
) -> Result<(CriticStats, Gradients), DdpgError> {
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(critic);
    let mut loss = 0.0;
    let mut q_sum = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        let (q, tape) = critic.forward(&critic_input(&t.s, &t.a))?;
        let err = q[0] - y;
        loss += err * err;
        q_sum += q[0];
        critic.accumulate_backward(&tape, &[2.0 * err / n], &mut grads)?;
    }
    let stats = CriticStats { loss: loss / n, mean_q: q_sum / n };
    if !stats.loss.is_finite() {
        return Err(DdpgError::NonFinite("critic loss"));
    }
    Ok((stats, grads))
}

/// One Adam step of the critic toward the TD targets. Target networks are
/// only read.
pub fn critic_update(
    critic: &mut Mlp,
    optimizer: &mut AdamState,
    target_critic: &Mlp,
    target_actor: &Mlp,
    batch: &[&Transition],
    gamma: f64,
    lr: f64,
) -> Result<CriticStats, DdpgError> {
    let targets = td_targets(target_critic, target_actor, batch, gamma)?;
    let (stats, grads) = regression_gradient(critic, batch, &targets)?;
    adam_step(critic, &grads, lr, optimizer)?;
    Ok(stats)
}

/// Gradient of `J = mean_i Q(s_i, μ(s_i))` with respect to the actor's
/// parameters, chaining the critic's action gradient through the actor.
pub fn actor_gradient(actor: &Mlp, critic: &Mlp, states: &[&[f64]]) -> Result<Gradients, DdpgError> {
    let n = states.len() as f64;
    let mut grads = Gradients::zeros_like(actor);
    for s in states {
        let (a, actor_tape) = actor.forward(s)?;
        let (_, critic_tape) = critic.forward(&critic_input(s, &a))?;
        let dq = critic.backward(&critic_tape, &[1.0])?;
        let dq_da: Vec<f64> = dq.input[s.len()..].iter().map(|g| g / n).collect();
        actor.accumulate_backward(&actor_tape, &dq_da, &mut grads)?;
    }
    if !grads.is_finite() {
        return Err(DdpgError::NonFinite("actor gradient"));
    }
    Ok(grads)
}

/// One Adam ascent step of the actor on `J`. The critic is only read.
pub fn actor_update(
    actor: &mut Mlp,
    optimizer: &mut AdamState,
    critic: &Mlp,
    batch: &[&Transition],
    lr: f64,
) -> Result<(), DdpgError> {
    let states: Vec<&[f64]> = batch.iter().map(|t| t.s.as_slice()).collect();
    let mut grads = actor_gradient(actor, critic, &states)?;
    grads.scale(-1.0);
    adam_step(actor, &grads, lr, optimizer)?;
    Ok(())
}

/// `target ← (1 − τ)·target + τ·online`, elementwise.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<(), DdpgError> {
    if !target.same_shape(online) {
        return Err(NeuralError::DimensionMismatch { expected: online.param_count(), got: target.param_count() }.into());
    }
    for (t, o) in target.params_mut().zip(online.params()) {
        *t = (1.0 - tau) * *t + tau * o;
    }
    Ok(())
}

/// `clamp(μ(s) + noise, −1, 1)`, advancing the noise process.
pub fn explore_action(actor: &Mlp, s: &[f64], noise: &mut OuNoise) -> Result<Vec<f64>, DdpgError> {
    let mut a = actor.predict(s)?;
    for (ai, n) in a.iter_mut().zip(noise.sample()) {
        *ai = (*ai + n).clamp(-1.0, 1.0);
    }
    Ok(a)
}

/// Frozen actor (and its critic, kept for checkpoints and diagnostics).
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl Policy {
    pub fn new(actor: Mlp, critic: Mlp) -> Self {
        Self { actor, critic }
    }

    /// Freshly initialised networks for `profile`, drawn in actor-then-critic
    /// order from `rng`.
    pub fn init<R: Rng + ?Sized>(profile: NetworkProfile, rng: &mut R) -> Self {
        let actor = new_actor(profile, rng);
        let critic = new_critic(profile, rng);
        Self { actor, critic }
    }

    /// Networks of `profile` with every weight and bias zero; the actor
    /// always outputs `(0, 0)`.
    pub fn zeros(profile: NetworkProfile) -> Self {
        let zero = |mut net: Mlp| {
            for layer in net.layers_mut() {
                layer.weights.fill(0.0);
                layer.bias.fill(0.0);
            }
            net
        };
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        Self { actor: zero(new_actor(profile, &mut rng)), critic: zero(new_critic(profile, &mut rng)) }
    }

    pub fn act_on_state(&self, s: &[f64]) -> Result<Command, DdpgError> {
        let a = self.actor.predict(s)?;
        Ok(Command::new(a[0], a[1]).clamped())
    }

    /// Deterministic `(steer, accel)` for a sensor frame; no exploration.
    pub fn act(&self, frame: &SensorFrame) -> Command {
        self.act_on_state(&normalize_state(frame)).expect("policy actor takes the normalized state width")
    }

    pub fn check_dims(&self) -> Result<(), DdpgError> {
        let ok = self.actor.input_dim() == STATE_DIM
            && self.actor.output_dim() == ACTION_DIM
            && self.critic.input_dim() == STATE_DIM + ACTION_DIM
            && self.critic.output_dim() == 1;
        if ok {
            Ok(())
        } else {
            Err(DdpgError::Checkpoint(format!(
                "network widths {}→{} / {}→{} do not match state width {STATE_DIM}",
                self.actor.input_dim(),
                self.actor.output_dim(),
                self.critic.input_dim(),
                self.critic.output_dim()
            )))
        }
    }
}
