use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    actor_update, critic_update, explore_action, reward, soft_update, DdpgError, OuNoise, Policy, ReplayBuffer,
    TrainerConfig, Transition, ACTION_DIM,
};
use crate::neural::{AdamConfig, AdamState};
use crate::sensors::{normalize_state, sensor_frame};
use crate::sig9;
use crate::world::{Simulator, WorldState};
use crate::Command;

pub const METRICS_HEADER: &str = "episode,steps,return,avg_q,loss";

/// Per-episode training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub steps: usize,
    /// Undiscounted sum of rewards.
    pub ret: f64,
    /// Mean over the episode's updates of the minibatch mean `Q(s, a)`;
    /// `None` while still warming up.
    pub avg_q: Option<f64>,
    /// Mean critic loss over the episode's updates.
    pub loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub policy: Policy,
    pub metrics: Vec<EpisodeMetrics>,
    pub steps: usize,
}

/// Metrics as CSV with [`METRICS_HEADER`]; missing values are written `nan`.
pub fn metrics_csv(metrics: &[EpisodeMetrics]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), sig9);
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&format!("{},{},{},{},{}\n", m.episode, m.steps, sig9(m.ret), opt(m.avg_q), opt(m.loss)));
    }
    out
}

/// Run DDPG on `sim`, starting each episode from `reset(episode, rng)`.
///
/// One critic update, one actor update and one soft update of both targets
/// follow every environment step once the buffer holds `warmup` transitions
/// (and at least one batch). Episodes end on leaving the track, colliding,
/// or after `max_episode_steps`; only the first two are terminal for
/// bootstrapping. All randomness derives from `cfg.seed`.
pub fn train<F>(cfg: &TrainerConfig, sim: &Simulator, mut reset: F) -> Result<TrainingRun, DdpgError>
where
    F: FnMut(usize, &mut ChaCha8Rng) -> WorldState,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut policy = Policy::init(cfg.profile, &mut rng);
    let mut target_actor = policy.actor.clone();
    let mut target_critic = policy.critic.clone();
    let mut actor_opt = AdamState::new(&policy.actor, AdamConfig::default());
    let mut critic_opt = AdamState::new(&policy.critic, AdamConfig::default());
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, rng.next_u64());
    let mut noise = OuNoise::new(ACTION_DIM, cfg.ou_theta, cfg.ou_sigma, cfg.ou_dt, rng.next_u64());
    let warmup = cfg.warmup.max(cfg.batch);

    let mut metrics = Vec::new();
    let mut steps = 0;
    let mut episode = 0;
    while steps < cfg.total_steps {
        let mut state = reset(episode, &mut rng);
        noise.reset();
        let mut s = normalize_state(&sensor_frame(&state, &sim.geometry)).to_vec();
        let mut record = EpisodeMetrics { episode, steps: 0, ret: 0.0, avg_q: None, loss: None };
        let (mut q_sum, mut loss_sum, mut updates) = (0.0, 0.0, 0usize);

        loop {
            let a = explore_action(&policy.actor, &s, &mut noise)?;
            let next = sim.step(&state, Command::new(a[0], a[1]));
            let status = sim.status(&next);
            let rel = sim.geometry.relative_pose(&next.ego);
            let r = reward(next.ego.speed, rel.delta_psi, cfg.reward_scale);
            let s_next = normalize_state(&sensor_frame(&next, &sim.geometry)).to_vec();
            buffer.push(Transition { s, a, r, s_next: s_next.clone(), terminal: status.is_failure() })?;
            steps += 1;
            record.steps += 1;
            record.ret += r;

            if buffer.len() >= warmup {
                let batch = buffer.sample(cfg.batch)?;
                let stats = critic_update(
                    &mut policy.critic,
                    &mut critic_opt,
                    &target_critic,
                    &target_actor,
                    &batch,
                    cfg.gamma,
                    cfg.critic_lr,
                )?;
                actor_update(&mut policy.actor, &mut actor_opt, &policy.critic, &batch, cfg.actor_lr)?;
                soft_update(&mut target_critic, &policy.critic, cfg.tau_soft)?;
                soft_update(&mut target_actor, &policy.actor, cfg.tau_soft)?;
                q_sum += stats.mean_q;
                loss_sum += stats.loss;
                updates += 1;
            }

            state = next;
            s = s_next;
            if status.is_terminal() || record.steps >= cfg.max_episode_steps || steps >= cfg.total_steps {
                break;
            }
        }
        if updates > 0 {
            record.avg_q = Some(q_sum / updates as f64);
            record.loss = Some(loss_sum / updates as f64);
        }
        log::debug!("episode {episode}: {} steps, return {:.3}", record.steps, record.ret);
        if (episode + 1) % 25 == 0 {
            log::info!("{steps}/{} steps, {} episodes", cfg.total_steps, episode + 1);
        }
        metrics.push(record);
        episode += 1;
    }

    Ok(TrainingRun { policy, metrics, steps })
}
