//! Repulsive potential-field collision avoidance.
//!
//! Each obstacle at distance `d` and bearing `theta` pushes with magnitude
//! `1/d^eta` away from itself. In the ego frame the lateral component `fx`
//! (positive left) maps to steering and the longitudinal component `fy`
//! (positive forward) maps to acceleration:
//!
//! ```text
//! fx = -Σ cos(theta_i) / d_i^eta      steer = k_fx · fx
//! fy = -Σ sin(theta_i) / d_i^eta      accel = k_fy · fy
//! ```
//!
//! Only the forward half-plane (`theta ∈ [0, π]`) and readings closer than
//! `d_cut` contribute. There is no attractive term.

use std::f64::consts::PI;

use thiserror::Error;

use crate::sensors::{sector_readings, ObstacleReading, OPPONENT_SECTOR_COUNT};
use crate::Command;

#[derive(Debug, Error, PartialEq)]
pub enum ApfError {
    #[error("obstacle distance {0} must be positive")]
    NonPositiveDistance(f64),
    #[error("invalid potential-field config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApfConfig {
    pub k_fx: f64,
    pub k_fy: f64,
    pub eta: f64,
    /// Readings at or beyond this range exert no force, meters.
    pub d_cut: f64,
}

impl Default for ApfConfig {
    fn default() -> Self {
        Self { k_fx: 20.0, k_fy: 10.0, eta: 1.5, d_cut: 50.0 }
    }
}

impl ApfConfig {
    pub fn validate(&self) -> Result<(), ApfError> {
        if !(self.k_fx > 0.0 && self.k_fy > 0.0) {
            return Err(ApfError::InvalidConfig("k_fx and k_fy must be positive"));
        }
        if !(self.eta > 0.0) {
            return Err(ApfError::InvalidConfig("eta must be positive"));
        }
        if !(self.d_cut > 0.0 && self.d_cut <= 200.0) {
            return Err(ApfError::InvalidConfig("d_cut must lie in (0, 200]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RepulsiveForce {
    /// Lateral, positive toward the left.
    pub fx: f64,
    /// Longitudinal, positive forward.
    pub fy: f64,
}

impl std::ops::Add for RepulsiveForce {
    type Output = RepulsiveForce;

    fn add(self, rhs: Self) -> Self {
        RepulsiveForce { fx: self.fx + rhs.fx, fy: self.fy + rhs.fy }
    }
}

fn contributes(r: &ObstacleReading, cfg: &ApfConfig) -> bool {
    r.d < cfg.d_cut && (0.0..=PI).contains(&r.theta)
}

pub fn repulsive_force(readings: &[ObstacleReading], cfg: &ApfConfig) -> Result<RepulsiveForce, ApfError> {
    let mut force = RepulsiveForce::default();
    for r in readings {
        if !(r.d > 0.0) {
            return Err(ApfError::NonPositiveDistance(r.d));
        }
        if !contributes(r, cfg) {
            continue;
        }
        let magnitude = r.d.powf(-cfg.eta);
        // cos(π/2) is not exactly zero in floating point.
        if r.theta != PI / 2.0 {
            force.fx -= r.theta.cos() * magnitude;
        }
        force.fy -= r.theta.sin() * magnitude;
    }
    Ok(force)
}

pub fn apf_command(force: RepulsiveForce, cfg: &ApfConfig) -> Command {
    Command::new(cfg.k_fx * force.fx, cfg.k_fy * force.fy).clamped()
}

/// Steering and acceleration from the 36 opponent sector distances.
pub fn command_from_sectors(sectors: &[f64; OPPONENT_SECTOR_COUNT], cfg: &ApfConfig) -> Result<Command, ApfError> {
    let force = repulsive_force(&sector_readings(sectors), cfg)?;
    Ok(apf_command(force, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn reading(d: f64, theta: f64) -> ObstacleReading {
        ObstacleReading { d, theta }
    }

    #[test]
    fn no_readings_no_force() {
        let f = repulsive_force(&[], &ApfConfig::default()).unwrap();
        assert_eq!(f, RepulsiveForce { fx: 0.0, fy: 0.0 });
        assert_eq!(apf_command(f, &ApfConfig::default()), Command::ZERO);
    }

    #[test]
    fn obstacle_ahead_only_brakes() {
        let cfg = ApfConfig::default();
        let f = repulsive_force(&[reading(10.0, PI / 2.0)], &cfg).unwrap();
        assert_eq!(f.fx, 0.0);
        assert!((f.fy + 10f64.powf(-1.5)).abs() < 1e-15);
        assert!((f.fy + 0.0316228).abs() < 1e-7);
        let cmd = apf_command(f, &cfg);
        assert_eq!(cmd.steer, 0.0);
        assert!((cmd.accel + 0.316228).abs() < 1e-6);
    }

    #[test]
    fn symmetric_pair_cancels_laterally() {
        let cfg = ApfConfig::default();
        let d: f64 = 8.0;
        let f = repulsive_force(&[reading(d, FRAC_PI_4), reading(d, 3.0 * FRAC_PI_4)], &cfg).unwrap();
        assert!(f.fx.abs() < 1e-15);
        let expected = -2.0 * FRAC_PI_4.sin() / d.powf(1.5);
        assert!((f.fy - expected).abs() < 1e-15);
    }

    #[test]
    fn obstacle_on_left_steers_right() {
        let cmd = apf_command(RepulsiveForce { fx: -0.1, fy: 0.0 }, &ApfConfig::default());
        assert_eq!(cmd, Command::new(-1.0, 0.0));
        let f = repulsive_force(&[reading(5.0, 0.3)], &ApfConfig::default()).unwrap();
        assert!(f.fx < 0.0);
    }

    #[test]
    fn rear_and_far_readings_ignored() {
        let cfg = ApfConfig::default();
        let f = repulsive_force(&[reading(5.0, 1.5 * PI), reading(50.0, PI / 2.0), reading(80.0, 1.0)], &cfg).unwrap();
        assert_eq!(f, RepulsiveForce::default());
    }

    #[test]
    fn non_positive_distance_rejected() {
        let cfg = ApfConfig::default();
        assert_eq!(repulsive_force(&[reading(0.0, 1.0)], &cfg), Err(ApfError::NonPositiveDistance(0.0)));
        assert!(repulsive_force(&[reading(-1.0, 1.0)], &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ApfConfig::default().validate().is_ok());
        assert!(ApfConfig { eta: 0.0, ..Default::default() }.validate().is_err());
        assert!(ApfConfig { k_fx: -1.0, ..Default::default() }.validate().is_err());
        assert!(ApfConfig { d_cut: 250.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn sectors_feed_the_field() {
        let mut sectors = [200.0; OPPONENT_SECTOR_COUNT];
        assert_eq!(command_from_sectors(&sectors, &ApfConfig::default()).unwrap(), Command::ZERO);
        sectors[9] = 10.0;
        let cmd = command_from_sectors(&sectors, &ApfConfig::default()).unwrap();
        assert!(cmd.accel < 0.0);
        // Sector 9 is centered at 95°, slightly right of ahead: steer left.
        assert!(cmd.steer > 0.0);
    }
}
