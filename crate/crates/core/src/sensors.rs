//! TORCS-style observations.
//!
//! Opponent bearings use the potential-field frame: `theta = 0` is due left,
//! `π/2` straight ahead, `π` due right, increasing clockwise seen from above.
//! Track rays are ordered left to right: ray `k` points `10·k − 90` degrees
//! clockwise from the heading.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::track::TrackGeometry;
use crate::world::{VehiclePose, WorldState};

pub const TRACK_RAY_COUNT: usize = 19;
pub const OPPONENT_SECTOR_COUNT: usize = 36;
/// Range of every distance sensor; a reading of exactly this means "nothing".
pub const SENSOR_RANGE: f64 = 200.0;
pub const SECTOR_WIDTH: f64 = TAU / OPPONENT_SECTOR_COUNT as f64;
/// Engine speed proxy, rpm per m/s.
pub const RPM_PER_MPS: f64 = 95.0;
pub const RPM_MAX: f64 = 9500.0;
/// Speed scale for state normalization; matches the default `v_max`.
pub const SPEED_SCALE: f64 = 83.3;
/// Width of the normalized state vector.
pub const STATE_DIM: usize = 29;

/// Column names of [`SensorFrame::csv_row`], in order.
pub const FRAME_CSV_COLUMNS: &[&str] =
    &["t", "angle", "track_pos", "speed", "engine_rpm", "min_track_ray", "min_opponent"];

#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub track_rays: [f64; TRACK_RAY_COUNT],
    pub opponents: [f64; OPPONENT_SECTOR_COUNT],
    /// Longitudinal speed, m/s.
    pub speed: f64,
    /// Wheel surface speeds, m/s; all equal to `speed` in the kinematic model.
    pub wheel_speeds: [f64; 4],
    pub engine_rpm: f64,
    pub track_pos: f64,
    /// Heading error, rad.
    pub angle: f64,
    pub t: f64,
}

impl SensorFrame {
    /// Compact digest used in logs; columns in [`FRAME_CSV_COLUMNS`].
    pub fn csv_row(&self) -> [f64; 7] {
        let min = |xs: &[f64]| xs.iter().copied().fold(SENSOR_RANGE, f64::min);
        [self.t, self.angle, self.track_pos, self.speed, self.engine_rpm, min(&self.track_rays), min(&self.opponents)]
    }
}

/// A single obstacle as seen by the potential field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleReading {
    pub d: f64,
    /// Bearing in `[0, 2π)`, `π/2` straight ahead.
    pub theta: f64,
}

/// Ray angle (clockwise from heading) of track ray `k`.
pub fn track_ray_angle(k: usize) -> f64 {
    (10.0 * k as f64 - 90.0).to_radians()
}

pub fn track_rays(geom: &TrackGeometry, pose: &VehiclePose) -> [f64; TRACK_RAY_COUNT] {
    let mut rays = [0.0; TRACK_RAY_COUNT];
    if geom.relative_pose(pose).track_pos.abs() > 1.0 {
        return rays;
    }
    for (k, ray) in rays.iter_mut().enumerate() {
        let direction = pose.heading - track_ray_angle(k);
        *ray = geom.ray_distance(pose.x, pose.y, direction, SENSOR_RANGE);
    }
    rays
}

/// Range and bearing of `target` seen from `ego`.
pub fn bearing_of(ego: &VehiclePose, target_x: f64, target_y: f64) -> ObstacleReading {
    let (dx, dy) = (target_x - ego.x, target_y - ego.y);
    let (sin_h, cos_h) = ego.heading.sin_cos();
    let forward = dx * cos_h + dy * sin_h;
    let left = -dx * sin_h + dy * cos_h;
    let mut theta = forward.atan2(left).rem_euclid(TAU);
    if theta >= TAU {
        theta = 0.0;
    }
    ObstacleReading { d: dx.hypot(dy), theta }
}

/// Sector index covering bearing `theta`.
pub fn sector_of(theta: f64) -> usize {
    ((theta / SECTOR_WIDTH).floor() as usize).min(OPPONENT_SECTOR_COUNT - 1)
}

/// Bearing at the middle of sector `j`.
pub fn sector_center(j: usize) -> f64 {
    (j as f64 + 0.5) * SECTOR_WIDTH
}

/// Nearest opponent distance per 10° bearing sector.
pub fn opponent_sectors(state: &WorldState) -> [f64; OPPONENT_SECTOR_COUNT] {
    let mut sectors = [SENSOR_RANGE; OPPONENT_SECTOR_COUNT];
    for opp in &state.opponents {
        let reading = bearing_of(&state.ego, opp.pose.x, opp.pose.y);
        let slot = &mut sectors[sector_of(reading.theta)];
        *slot = slot.min(reading.d);
    }
    sectors
}

pub fn sensor_frame(state: &WorldState, geom: &TrackGeometry) -> SensorFrame {
    let rel = geom.relative_pose(&state.ego);
    let speed = state.ego.speed;
    SensorFrame {
        track_rays: track_rays(geom, &state.ego),
        opponents: opponent_sectors(state),
        speed,
        wheel_speeds: [speed; 4],
        engine_rpm: (speed * RPM_PER_MPS).min(RPM_MAX),
        track_pos: rel.track_pos,
        angle: rel.delta_psi,
        t: state.t,
    }
}

/// Network input vector.
///
/// Layout: `[angle/π, track_pos, speed_x, speed_y, speed_z, 4 × wheel,
/// rpm/rpm_max, 19 × ray/200]`, speeds scaled by [`SPEED_SCALE`]. Lateral and
/// vertical speed are always zero in the kinematic model but keep their slots.
pub fn normalize_state(frame: &SensorFrame) -> [f64; STATE_DIM] {
    let mut out = [0.0; STATE_DIM];
    out[0] = frame.angle / PI;
    out[1] = frame.track_pos;
    out[2] = frame.speed / SPEED_SCALE;
    for (slot, w) in out[5..9].iter_mut().zip(&frame.wheel_speeds) {
        *slot = w / SPEED_SCALE;
    }
    out[9] = frame.engine_rpm / RPM_MAX;
    for (slot, r) in out[10..].iter_mut().zip(&frame.track_rays) {
        *slot = r / SENSOR_RANGE;
    }
    out
}

/// Obstacle readings at the center bearing of every sector that saw an
/// opponent.
pub fn sector_readings(sectors: &[f64; OPPONENT_SECTOR_COUNT]) -> Vec<ObstacleReading> {
    sectors
        .iter()
        .enumerate()
        .filter(|(_, &d)| d < SENSOR_RANGE)
        .map(|(j, &d)| ObstacleReading { d, theta: sector_center(j) })
        .collect()
}

/// Sector index straight ahead.
pub fn ahead_sector() -> usize {
    sector_of(FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::OpponentScript;

    fn oval() -> TrackGeometry {
        TrackGeometry::oval().unwrap()
    }

    #[test]
    fn side_rays_hit_edges() {
        let geom = oval();
        let pose = geom.pose_at(30.0, 0.0, 0.0, 0.0);
        let rays = track_rays(&geom, &pose);
        assert!((rays[0] - 6.0).abs() < 1e-9);
        assert!((rays[18] - 6.0).abs() < 1e-9);
        assert!(rays.iter().all(|&r| (0.0..=SENSOR_RANGE).contains(&r)));
    }

    #[test]
    fn forward_ray_capped_on_long_straight() {
        let geom = TrackGeometry::build(
            &[
                crate::track::SegmentSpec::Straight { length: 1000.0 },
                crate::track::SegmentSpec::Arc { radius: 50.0, sweep: PI },
                crate::track::SegmentSpec::Straight { length: 1000.0 },
                crate::track::SegmentSpec::Arc { radius: 50.0, sweep: PI },
            ],
            6.0,
        )
        .unwrap();
        let pose = geom.pose_at(100.0, 0.0, 0.0, 0.0);
        assert_eq!(track_rays(&geom, &pose)[9], SENSOR_RANGE);
    }

    #[test]
    fn centered_rays_are_mirror_symmetric() {
        let geom = oval();
        let pose = geom.pose_at(40.0, 0.0, 0.0, 0.0);
        let rays = track_rays(&geom, &pose);
        for k in 0..TRACK_RAY_COUNT {
            assert!((rays[k] - rays[18 - k]).abs() < 1e-9, "ray {k}");
        }
    }

    #[test]
    fn off_track_rays_are_zero() {
        let geom = oval();
        let pose = VehiclePose::new(40.0, -7.0, 0.0, 0.0);
        assert_eq!(track_rays(&geom, &pose), [0.0; TRACK_RAY_COUNT]);
    }

    #[test]
    fn empty_world_sectors() {
        let geom = oval();
        let state = WorldState::on_track(&geom, 10.0, 0.0, 0.0);
        assert_eq!(opponent_sectors(&state), [SENSOR_RANGE; OPPONENT_SECTOR_COUNT]);
    }

    #[test]
    fn opponent_ahead_lands_in_ahead_sector() {
        let geom = oval();
        let mut state = WorldState::on_track(&geom, 10.0, 0.0, 0.0);
        state.add_opponent(&geom, OpponentScript { s: 25.0, offset: 0.0, speed: 0.0 });
        let sectors = opponent_sectors(&state);
        let j = ahead_sector();
        assert_eq!(j, 9);
        assert!((sectors[j] - 15.0).abs() < 1e-12);
        for (k, &d) in sectors.iter().enumerate() {
            if k != j {
                assert_eq!(d, SENSOR_RANGE);
            }
        }
    }

    #[test]
    fn nearest_opponent_wins_its_sector() {
        let geom = oval();
        let mut state = WorldState::on_track(&geom, 10.0, 0.0, 0.0);
        state.add_opponent(&geom, OpponentScript { s: 30.0, offset: 0.0, speed: 0.0 });
        state.add_opponent(&geom, OpponentScript { s: 20.0, offset: 0.0, speed: 0.0 });
        assert!((opponent_sectors(&state)[9] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn bearing_convention() {
        let ego = VehiclePose::new(0.0, 0.0, 0.0, 0.0);
        assert!((bearing_of(&ego, 0.0, 5.0).theta - 0.0).abs() < 1e-12); // left
        assert!((bearing_of(&ego, 5.0, 0.0).theta - FRAC_PI_2).abs() < 1e-12); // ahead
        assert!((bearing_of(&ego, 0.0, -5.0).theta - PI).abs() < 1e-12); // right
        assert!((bearing_of(&ego, -5.0, 0.0).theta - 1.5 * PI).abs() < 1e-12); // behind
    }

    #[test]
    fn frame_fields() {
        let geom = oval();
        let state = WorldState::on_track(&geom, 10.0, 0.0, 20.0);
        let frame = sensor_frame(&state, &geom);
        assert_eq!(frame.track_pos, 0.0);
        assert_eq!(frame.angle, 0.0);
        assert_eq!(frame.wheel_speeds, [20.0; 4]);
        assert_eq!(frame.engine_rpm, 1900.0);

        let offset = WorldState::with_ego(&geom, VehiclePose::new(40.0, -3.0, 0.0, 0.0));
        assert!((sensor_frame(&offset, &geom).track_pos - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalization_layout() {
        let zero = SensorFrame {
            track_rays: [SENSOR_RANGE; TRACK_RAY_COUNT],
            opponents: [SENSOR_RANGE; OPPONENT_SECTOR_COUNT],
            speed: 0.0,
            wheel_speeds: [0.0; 4],
            engine_rpm: 0.0,
            track_pos: 0.0,
            angle: 0.0,
            t: 0.0,
        };
        let v = normalize_state(&zero);
        assert!(v[..10].iter().all(|&x| x == 0.0));
        assert!(v[10..].iter().all(|&x| x == 1.0));

        let half = SensorFrame { speed: SPEED_SCALE / 2.0, ..zero };
        assert_eq!(normalize_state(&half)[2], 0.5);
    }

    #[test]
    fn sector_readings_use_center_bearings() {
        let mut sectors = [SENSOR_RANGE; OPPONENT_SECTOR_COUNT];
        sectors[9] = 12.0;
        let readings = sector_readings(&sectors);
        assert_eq!(readings.len(), 1);
        assert_eq!(readings[0].d, 12.0);
        assert!((readings[0].theta - 95f64.to_radians()).abs() < 1e-12);
    }
}
