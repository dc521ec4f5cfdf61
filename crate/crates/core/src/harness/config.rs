//! Run configuration: flat `key = value` text with dotted section prefixes.
//!
//! ```text
//! # comment
//! apf.k_fx = 20
//! blend.alpha = 0.4
//! run.track = oval
//! ```
//!
//! Unspecified keys keep their defaults; later assignments win, so CLI
//! overrides are applied with [`RunConfig::set`] after the file.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::apf::ApfConfig;
use crate::blend::{validate_weights, BlendWeights};
use crate::ddpg::{NetworkProfile, TrainerConfig};
use crate::tracking::TrackingConfig;
use crate::world::{EpisodeRules, VehicleParams, DEFAULT_DT};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HYBRID_DRIVE_OUT";
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Which controller drives evaluation rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalController {
    /// The learned actor alone.
    Learned,
    /// The weighted blend of all three methods.
    Blend,
}

impl EvalController {
    pub fn name(self) -> &'static str {
        match self {
            EvalController::Learned => "learned",
            EvalController::Blend => "blend",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trainer: TrainerConfig,
    pub apf: ApfConfig,
    pub tracking: TrackingConfig,
    pub blend: BlendWeights,
    pub vehicle: VehicleParams,
    pub dt: f64,
    pub collision_radius: f64,
    /// Built-in track name or path to a track file.
    pub track: String,
    pub out_dir: PathBuf,
    /// Checkpoint directory read by `eval`, `scenario` and `drive-scr`.
    pub checkpoint: Option<PathBuf>,
    pub eval_episodes: usize,
    pub eval_max_steps: usize,
    pub eval_controller: EvalController,
    pub scr_timeout_ms: u64,
    pub scr_max_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trainer: TrainerConfig::tiny(),
            apf: ApfConfig::default(),
            tracking: TrackingConfig::default(),
            blend: BlendWeights::default(),
            vehicle: VehicleParams::default(),
            dt: DEFAULT_DT,
            collision_radius: EpisodeRules::default().collision_radius,
            track: "oval".to_string(),
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            checkpoint: None,
            eval_episodes: 10,
            eval_max_steps: 4000,
            eval_controller: EvalController::Learned,
            scr_timeout_ms: 1000,
            scr_max_steps: 1000,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { key: key.to_string(), value: value.to_string() })
}

impl RunConfig {
    /// Defaults with the output directory taken from [`OUT_DIR_ENV`] if set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            cfg.out_dir = PathBuf::from(dir);
        }
        cfg
    }

    /// Assign one dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let t = &mut self.trainer;
        match key.trim() {
            k @ "ddpg.actor_lr" => t.actor_lr = parse(k, v)?,
            k @ "ddpg.critic_lr" => t.critic_lr = parse(k, v)?,
            k @ "ddpg.gamma" => t.gamma = parse(k, v)?,
            k @ "ddpg.batch" => t.batch = parse(k, v)?,
            k @ "ddpg.tau_soft" => t.tau_soft = parse(k, v)?,
            k @ "ddpg.buffer_capacity" => t.buffer_capacity = parse(k, v)?,
            k @ "ddpg.warmup" => t.warmup = parse(k, v)?,
            k @ "ddpg.ou_theta" => t.ou_theta = parse(k, v)?,
            k @ "ddpg.ou_sigma" => t.ou_sigma = parse(k, v)?,
            k @ "ddpg.ou_dt" => t.ou_dt = parse(k, v)?,
            k @ "ddpg.total_steps" => t.total_steps = parse(k, v)?,
            k @ "ddpg.max_episode_steps" => t.max_episode_steps = parse(k, v)?,
            k @ "ddpg.reward_scale" => t.reward_scale = parse(k, v)?,
            k @ "ddpg.profile" => {
                t.profile = NetworkProfile::from_name(v)
                    .ok_or_else(|| ConfigError::BadValue { key: k.to_string(), value: v.to_string() })?
            }
            k @ ("run.seed" | "ddpg.seed") => t.seed = parse(k, v)?,
            k @ "apf.k_fx" => self.apf.k_fx = parse(k, v)?,
            k @ "apf.k_fy" => self.apf.k_fy = parse(k, v)?,
            k @ "apf.eta" => self.apf.eta = parse(k, v)?,
            k @ "apf.d_cut" => self.apf.d_cut = parse(k, v)?,
            k @ "tracking.eta1" => self.tracking.eta1 = parse(k, v)?,
            k @ "tracking.eta2" => self.tracking.eta2 = parse(k, v)?,
            k @ "tracking.v_ref" => self.tracking.v_ref = parse(k, v)?,
            k @ "tracking.v_min" => self.tracking.v_min = parse(k, v)?,
            k @ "tracking.k_slow" => self.tracking.k_slow = parse(k, v)?,
            k @ "tracking.k_speed" => self.tracking.k_speed = parse(k, v)?,
            k @ "blend.alpha" => self.blend.alpha = parse(k, v)?,
            k @ "blend.beta" => self.blend.beta = parse(k, v)?,
            k @ "blend.gamma" => self.blend.gamma = parse(k, v)?,
            k @ "vehicle.wheelbase" => self.vehicle.wheelbase = parse(k, v)?,
            k @ "vehicle.max_steer" => self.vehicle.max_steer = parse(k, v)?,
            k @ "vehicle.a_max" => self.vehicle.a_max = parse(k, v)?,
            k @ "vehicle.b_max" => self.vehicle.b_max = parse(k, v)?,
            k @ "vehicle.v_max" => self.vehicle.v_max = parse(k, v)?,
            k @ "sim.dt" => self.dt = parse(k, v)?,
            k @ "sim.collision_radius" => self.collision_radius = parse(k, v)?,
            "run.track" => self.track = v.to_string(),
            "run.out_dir" => self.out_dir = PathBuf::from(v),
            "run.checkpoint" => self.checkpoint = (!v.is_empty()).then(|| PathBuf::from(v)),
            k @ "eval.episodes" => self.eval_episodes = parse(k, v)?,
            k @ "eval.max_steps" => self.eval_max_steps = parse(k, v)?,
            k @ "eval.controller" => {
                self.eval_controller = match v {
                    "learned" => EvalController::Learned,
                    "blend" => EvalController::Blend,
                    _ => return Err(ConfigError::BadValue { key: k.to_string(), value: v.to_string() }),
                }
            }
            k @ "scr.timeout_ms" => self.scr_timeout_ms = parse(k, v)?,
            k @ "scr.max_steps" => self.scr_max_steps = parse(k, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Apply every assignment in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Apply a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::BadValue { key: assignment.to_string(), value: String::new() })?;
        self.set(key, value)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_env();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Every key with its current value, in a form [`RunConfig::apply_text`]
    /// reads back.
    pub fn to_text(&self) -> String {
        let t = &self.trainer;
        let lines = [
            ("run.seed", t.seed.to_string()),
            ("run.track", self.track.clone()),
            ("run.out_dir", self.out_dir.display().to_string()),
            ("run.checkpoint", self.checkpoint.as_ref().map_or(String::new(), |p| p.display().to_string())),
            ("ddpg.profile", t.profile.name().to_string()),
            ("ddpg.actor_lr", t.actor_lr.to_string()),
            ("ddpg.critic_lr", t.critic_lr.to_string()),
            ("ddpg.gamma", t.gamma.to_string()),
            ("ddpg.batch", t.batch.to_string()),
            ("ddpg.tau_soft", t.tau_soft.to_string()),
            ("ddpg.buffer_capacity", t.buffer_capacity.to_string()),
            ("ddpg.warmup", t.warmup.to_string()),
            ("ddpg.ou_theta", t.ou_theta.to_string()),
            ("ddpg.ou_sigma", t.ou_sigma.to_string()),
            ("ddpg.ou_dt", t.ou_dt.to_string()),
            ("ddpg.total_steps", t.total_steps.to_string()),
            ("ddpg.max_episode_steps", t.max_episode_steps.to_string()),
            ("ddpg.reward_scale", t.reward_scale.to_string()),
            ("apf.k_fx", self.apf.k_fx.to_string()),
            ("apf.k_fy", self.apf.k_fy.to_string()),
            ("apf.eta", self.apf.eta.to_string()),
            ("apf.d_cut", self.apf.d_cut.to_string()),
            ("tracking.eta1", self.tracking.eta1.to_string()),
            ("tracking.eta2", self.tracking.eta2.to_string()),
            ("tracking.v_ref", self.tracking.v_ref.to_string()),
            ("tracking.v_min", self.tracking.v_min.to_string()),
            ("tracking.k_slow", self.tracking.k_slow.to_string()),
            ("tracking.k_speed", self.tracking.k_speed.to_string()),
            ("blend.alpha", self.blend.alpha.to_string()),
            ("blend.beta", self.blend.beta.to_string()),
            ("blend.gamma", self.blend.gamma.to_string()),
            ("vehicle.wheelbase", self.vehicle.wheelbase.to_string()),
            ("vehicle.max_steer", self.vehicle.max_steer.to_string()),
            ("vehicle.a_max", self.vehicle.a_max.to_string()),
            ("vehicle.b_max", self.vehicle.b_max.to_string()),
            ("vehicle.v_max", self.vehicle.v_max.to_string()),
            ("sim.dt", self.dt.to_string()),
            ("sim.collision_radius", self.collision_radius.to_string()),
            ("eval.episodes", self.eval_episodes.to_string()),
            ("eval.max_steps", self.eval_max_steps.to_string()),
            ("eval.controller", self.eval_controller.name().to_string()),
            ("scr.timeout_ms", self.scr_timeout_ms.to_string()),
            ("scr.max_steps", self.scr_max_steps.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Cross-check every section.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.trainer.validate().map_err(|e| invalid(&e))?;
        self.apf.validate().map_err(|e| invalid(&e))?;
        self.tracking.validate().map_err(|e| invalid(&e))?;
        validate_weights(&self.blend).map_err(|e| invalid(&e))?;
        let v = &self.vehicle;
        if ![v.wheelbase, v.max_steer, v.a_max, v.b_max, v.v_max, self.dt, self.collision_radius]
            .iter()
            .all(|x| *x > 0.0 && x.is_finite())
        {
            return Err(ConfigError::Invalid(
                "vehicle constants, sim.dt and sim.collision_radius must be positive".into(),
            ));
        }
        if self.eval_episodes == 0 || self.eval_max_steps == 0 {
            return Err(ConfigError::Invalid("eval.episodes and eval.max_steps must be positive".into()));
        }
        if self.scr_timeout_ms == 0 {
            return Err(ConfigError::Invalid("scr.timeout_ms must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# header\napf.k_fx = 12.5  # inline\n\nrun.seed=7\nddpg.profile = full\n").unwrap();
        assert_eq!(cfg.apf.k_fx, 12.5);
        assert_eq!(cfg.trainer.seed, 7);
        assert_eq!(cfg.trainer.profile, NetworkProfile::Full);
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.apply_text("apf.k_fx"), Err(ConfigError::Syntax { line: 1 }));
        assert_eq!(cfg.set("apf.nope", "1"), Err(ConfigError::UnknownKey("apf.nope".into())));
        assert!(matches!(cfg.set("apf.k_fx", "abc"), Err(ConfigError::BadValue { .. })));
        assert!(cfg.apply_override("blend.alpha").is_err());
    }

    #[test]
    fn cross_validation() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("blend.alpha=0.5").unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
        let mut cfg = RunConfig::default();
        cfg.apply_override("tracking.eta1=-1").unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.apply_override("sim.dt=0").unwrap();
        assert!(cfg.validate().is_err());
    }
}
