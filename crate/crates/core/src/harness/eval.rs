//! Noise-free policy rollouts.
//!
//! Episode `i` of `n` starts on the centerline at rest at arc length
//! `i·L/n`, so every run is a pure function of the policy and the track.
//! An episode completes when it finishes one lap and fails on leaving the
//! track, colliding, or running out of steps.

use super::{EvalController, HarnessError, HybridController, RunConfig};
use crate::ddpg::{reward, Policy};
use crate::sensors::sensor_frame;
use crate::track::TrackGeometry;
use crate::world::{EpisodeRules, EpisodeStatus, WorldState};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub episode: usize,
    pub start_s: f64,
    pub steps: usize,
    pub ret: f64,
    pub laps: u32,
    /// `lap`, `off_track`, `collided` or `timeout`.
    pub status: &'static str,
}

impl EpisodeOutcome {
    pub fn completed(&self) -> bool {
        self.status == "lap"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub track: String,
    pub controller: EvalController,
    pub outcomes: Vec<EpisodeOutcome>,
}

impl EvalSummary {
    pub fn episodes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn completed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.completed()).count()
    }

    pub fn completion_rate(&self) -> f64 {
        self.completed() as f64 / self.episodes().max(1) as f64
    }

    pub fn mean_return(&self) -> f64 {
        self.outcomes.iter().map(|o| o.ret).sum::<f64>() / self.episodes().max(1) as f64
    }

    pub fn count(&self, status: &str) -> usize {
        self.outcomes.iter().filter(|o| o.status == status).count()
    }
}

/// Roll out `policy` for `cfg.eval_episodes` episodes on `geom`.
pub fn eval_policy(
    policy: &Policy,
    cfg: &RunConfig,
    geom: &TrackGeometry,
    track_name: &str,
) -> Result<EvalSummary, HarnessError> {
    policy.check_dims()?;
    let mut sim = super::simulator(cfg, geom.clone());
    sim.rules = EpisodeRules { target_laps: Some(1), ..sim.rules };
    let ctl = HybridController::new(policy.clone(), cfg, geom.half_width());
    let n = cfg.eval_episodes;
    let mut outcomes = Vec::with_capacity(n);
    for episode in 0..n {
        let start_s = geom.total_length() * episode as f64 / n as f64;
        let mut state = WorldState::on_track(geom, start_s, 0.0, 0.0);
        let mut ret = 0.0;
        let mut status = EpisodeStatus::Running;
        let mut steps = 0;
        while steps < cfg.eval_max_steps {
            let frame = sensor_frame(&state, geom);
            let cmd = match cfg.eval_controller {
                EvalController::Learned => policy.act(&frame),
                EvalController::Blend => ctl.command(&frame),
            };
            state = sim.step(&state, cmd);
            steps += 1;
            let rel = geom.relative_pose(&state.ego);
            ret += reward(state.ego.speed, rel.delta_psi, cfg.trainer.reward_scale);
            status = sim.status(&state);
            if status.is_terminal() {
                break;
            }
        }
        outcomes.push(EpisodeOutcome {
            episode,
            start_s,
            steps,
            ret,
            laps: state.lap_count,
            status: match status {
                EpisodeStatus::LapDone(_) => "lap",
                EpisodeStatus::OffTrack => "off_track",
                EpisodeStatus::Collided => "collided",
                EpisodeStatus::Running => "timeout",
            },
        });
    }
    Ok(EvalSummary { track: track_name.to_string(), controller: cfg.eval_controller, outcomes })
}
