//! Configuration, scenarios, training and evaluation entry points, and CSV
//! export. The CLI is a thin layer over this module.

pub mod commands;
pub mod config;
pub mod eval;
pub mod export;
pub mod scenario;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{
    check_gradients, eval_cmd, load_policy, load_track, scenario_cmd, simulator, toy_checkpoint, train_cmd,
    GradientReport, TrainOutput, TOY_CHECKPOINT,
};
pub use config::{ConfigError, EvalController, RunConfig, OUT_DIR_ENV};
pub use eval::{eval_policy, EpisodeOutcome, EvalSummary};
pub use scenario::{run_scenario, Scenario, ScenarioId, ScenarioLog, StepRecord};

use crate::apf::{command_from_sectors, ApfConfig};
use crate::blend::{blend, BlendWeights, MethodCommands};
use crate::ddpg::{DdpgError, Policy};
use crate::scr::ScrError;
use crate::sensors::SensorFrame;
use crate::track::TrackError;
use crate::tracking::{tracking_command, TrackingConfig};
use crate::Command;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("no checkpoint at {}", .0.display())]
    MissingCheckpoint(PathBuf),
    #[error(transparent)]
    Ddpg(#[from] DdpgError),
    #[error(transparent)]
    Scr(#[from] ScrError),
    #[error("check failed: {0}")]
    Check(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    /// Process exit code: 1 for invalid input, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Track(_) | HarnessError::Scenario(_) => 1,
            _ => 2,
        }
    }
}

/// Smallest opponent distance handed to the potential field, meters.
const MIN_OBSTACLE_DISTANCE: f64 = 1e-3;

/// The three controllers and their blend, all fed from one sensor frame.
#[derive(Debug, Clone)]
pub struct HybridController {
    pub policy: Policy,
    pub apf: ApfConfig,
    pub tracking: TrackingConfig,
    pub weights: BlendWeights,
    /// Track half-width, used to turn `track_pos` back into meters.
    pub half_width: f64,
}

impl HybridController {
    pub fn new(policy: Policy, cfg: &RunConfig, half_width: f64) -> Self {
        Self { policy, apf: cfg.apf, tracking: cfg.tracking, weights: cfg.blend, half_width }
    }

    pub fn commands(&self, frame: &SensorFrame) -> MethodCommands {
        let sectors = frame.opponents.map(|d| d.max(MIN_OBSTACLE_DISTANCE));
        let apf = command_from_sectors(&sectors, &self.apf).expect("distances are positive");
        MethodCommands {
            learn: self.policy.act(frame),
            apf,
            track: tracking_command(frame.angle, frame.track_pos * self.half_width, frame.speed, &self.tracking),
        }
    }

    pub fn command(&self, frame: &SensorFrame) -> Command {
        blend(&self.commands(frame), &self.weights)
    }
}
