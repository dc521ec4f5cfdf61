//! Centerline path tracking.
//!
//! Steering is proportional to heading error and lateral offset,
//! `steer = eta1 · delta_psi + eta2 · e`, saturated to `[-1, 1]`. With
//! `e > 0` right of center and `delta_psi > 0` pointing right, both terms turn
//! the car left, back toward the centerline. Acceleration tracks a cruise
//! speed that shrinks as the steering demand grows.

use thiserror::Error;

use crate::Command;

#[derive(Debug, Error, PartialEq)]
#[error("invalid tracking config: {0}")]
pub struct TrackingConfigError(&'static str);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingConfig {
    /// Gain on heading error, 1/rad.
    pub eta1: f64,
    /// Gain on lateral offset, 1/m.
    pub eta2: f64,
    /// Cruise speed on a straight, m/s.
    pub v_ref: f64,
    /// Floor of the target speed, m/s.
    pub v_min: f64,
    /// Fraction of `v_ref` shed at full steering.
    pub k_slow: f64,
    pub k_speed: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self { eta1: 3.18, eta2: 2.0, v_ref: 20.0, v_min: 5.0, k_slow: 0.6, k_speed: 2.0 }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<(), TrackingConfigError> {
        if !(self.eta1 > 0.0 && self.eta2 > 0.0) {
            return Err(TrackingConfigError("eta1 and eta2 must be positive"));
        }
        if !(self.v_ref > 0.0) {
            return Err(TrackingConfigError("v_ref must be positive"));
        }
        if !(self.v_min >= 0.0 && self.v_min <= self.v_ref) {
            return Err(TrackingConfigError("v_min must lie in [0, v_ref]"));
        }
        if !(self.k_slow >= 0.0 && self.k_speed > 0.0) {
            return Err(TrackingConfigError("k_slow must be >= 0 and k_speed > 0"));
        }
        Ok(())
    }
}

/// Unsaturated steering law.
pub fn raw_steer(delta_psi: f64, e: f64, cfg: &TrackingConfig) -> f64 {
    cfg.eta1 * delta_psi + cfg.eta2 * e
}

pub fn tracking_steer(delta_psi: f64, e: f64, cfg: &TrackingConfig) -> f64 {
    raw_steer(delta_psi, e, cfg).clamp(-1.0, 1.0)
}

/// Target speed given the current steering demand.
pub fn target_speed(steer: f64, cfg: &TrackingConfig) -> f64 {
    (cfg.v_ref * (1.0 - cfg.k_slow * steer.abs())).max(cfg.v_min)
}

pub fn tracking_accel(steer: f64, speed: f64, cfg: &TrackingConfig) -> f64 {
    (cfg.k_speed * (target_speed(steer, cfg) - speed) / cfg.v_ref).clamp(-1.0, 1.0)
}

/// Both tracking commands from heading error, lateral offset (m) and speed.
pub fn tracking_command(delta_psi: f64, e: f64, speed: f64, cfg: &TrackingConfig) -> Command {
    let steer = tracking_steer(delta_psi, e, cfg);
    Command::new(steer, tracking_accel(steer, speed, cfg))
}
