//! Fixed-weight fusion of the three controllers.
//!
//! `steer = α·steer_learn + β·steer_apf + γ·steer_track` and likewise for
//! acceleration, with the same weights on both channels and `α + β + γ = 1`.
//! Since every input lies in `[-1, 1]`, so does the blend.

use thiserror::Error;

use crate::Command;

/// Allowed deviation of the weight sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum BlendError {
    #[error("blend weights must sum to 1, got {sum}")]
    BadSum { sum: f64 },
    #[error("blend weight `{name}` is negative or not finite: {value}")]
    BadWeight { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendWeights {
    /// Learned policy.
    pub alpha: f64,
    /// Potential field.
    pub beta: f64,
    /// Path tracking.
    pub gamma: f64,
}

impl Default for BlendWeights {
    fn default() -> Self {
        Self { alpha: 0.4, beta: 0.3, gamma: 0.3 }
    }
}

impl BlendWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, BlendError> {
        let w = Self { alpha, beta, gamma };
        validate_weights(&w)?;
        Ok(w)
    }
}

pub fn validate_weights(w: &BlendWeights) -> Result<(), BlendError> {
    for (name, value) in [("alpha", w.alpha), ("beta", w.beta), ("gamma", w.gamma)] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(BlendError::BadWeight { name, value });
        }
    }
    let sum = w.alpha + w.beta + w.gamma;
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(BlendError::BadSum { sum });
    }
    Ok(())
}

/// Commands of the learned policy, potential field and path tracker.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MethodCommands {
    pub learn: Command,
    pub apf: Command,
    pub track: Command,
}

pub fn blend(cmds: &MethodCommands, w: &BlendWeights) -> Command {
    Command {
        steer: w.alpha * cmds.learn.steer + w.beta * cmds.apf.steer + w.gamma * cmds.track.steer,
        accel: w.alpha * cmds.learn.accel + w.beta * cmds.apf.accel + w.gamma * cmds.track.accel,
    }
}
