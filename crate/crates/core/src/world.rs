//! Kinematic world state and its evolution.

use crate::normalize_angle;
use crate::track::TrackGeometry;
use crate::Command;

/// Half of the car's width, meters.
pub const VEHICLE_HALF_WIDTH: f64 = 0.95;
/// Half of the car's length, meters.
pub const VEHICLE_HALF_LENGTH: f64 = 2.25;
/// Default control period, seconds.
pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehiclePose {
    pub x: f64,
    pub y: f64,
    /// World frame, counterclockwise positive, in `(-π, π]`.
    pub heading: f64,
    /// Longitudinal speed, m/s, never negative.
    pub speed: f64,
}

impl VehiclePose {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self { x, y, heading: normalize_angle(heading), speed: speed.max(0.0) }
    }

    pub fn distance_to(&self, other: &VehiclePose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Physical constants of the kinematic bicycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub wheelbase: f64,
    /// Wheel angle at full steering command, rad.
    pub max_steer: f64,
    /// Acceleration at full throttle, m/s².
    pub a_max: f64,
    /// Deceleration at full brake, m/s².
    pub b_max: f64,
    pub v_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { wheelbase: 2.6, max_steer: 0.45, a_max: 4.0, b_max: 8.0, v_max: 83.3 }
    }
}

/// Script of a non-learning opponent: it rides the centerline at a fixed
/// lateral offset and constant speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpponentScript {
    pub s: f64,
    /// Lateral offset, meters, positive right.
    pub offset: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opponent {
    pub id: usize,
    pub script: OpponentScript,
    pub pose: VehiclePose,
}

impl Opponent {
    pub fn new(id: usize, script: OpponentScript, geom: &TrackGeometry) -> Self {
        let pose = geom.pose_at(script.s, script.offset, 0.0, script.speed);
        Self { id, script, pose }
    }

    fn advance(&self, geom: &TrackGeometry, dt: f64) -> Self {
        let script = OpponentScript { s: geom.wrap_s(self.script.s + self.script.speed * dt), ..self.script };
        Self::new(self.id, script, geom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub ego: VehiclePose,
    pub opponents: Vec<Opponent>,
    /// Simulated time, seconds.
    pub t: f64,
    pub steps: u64,
    /// Completed laps, counted from the episode's start line.
    pub lap_count: u32,
    /// Signed arc length covered since the start of the episode.
    pub progress: f64,
    /// Arc length of the ego at the last step.
    pub s: f64,
}

impl WorldState {
    /// Fresh state with the ego at `(s, e)` aligned with the tangent.
    pub fn on_track(geom: &TrackGeometry, s: f64, e: f64, speed: f64) -> Self {
        Self::with_ego(geom, geom.pose_at(s, e, 0.0, speed))
    }

    pub fn with_ego(geom: &TrackGeometry, ego: VehiclePose) -> Self {
        let s = geom.relative_pose(&ego).s;
        Self { ego, opponents: Vec::new(), t: 0.0, steps: 0, lap_count: 0, progress: 0.0, s }
    }

    pub fn add_opponent(&mut self, geom: &TrackGeometry, script: OpponentScript) {
        let id = self.opponents.len();
        self.opponents.push(Opponent::new(id, script, geom));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeStatus {
    Running,
    OffTrack,
    Collided,
    LapDone(u32),
}

impl EpisodeStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, EpisodeStatus::Running)
    }

    /// Failure outcomes, as opposed to finishing the requested laps.
    pub fn is_failure(&self) -> bool {
        matches!(self, EpisodeStatus::OffTrack | EpisodeStatus::Collided)
    }

    pub fn label(&self) -> &'static str {
        match self {
            EpisodeStatus::Running => "running",
            EpisodeStatus::OffTrack => "off_track",
            EpisodeStatus::Collided => "collided",
            EpisodeStatus::LapDone(_) => "lap_done",
        }
    }
}

/// Termination rules for an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRules {
    /// Center distance under which two cars have collided.
    pub collision_radius: f64,
    /// Laps after which the episode is done; `None` never finishes.
    pub target_laps: Option<u32>,
}

impl Default for EpisodeRules {
    fn default() -> Self {
        Self { collision_radius: 2.0 * VEHICLE_HALF_LENGTH, target_laps: Some(1) }
    }
}

/// Classify a state: off track first, then collision, then lap completion.
pub fn episode_status(state: &WorldState, geom: &TrackGeometry, rules: &EpisodeRules) -> EpisodeStatus {
    let rel = geom.relative_pose(&state.ego);
    if rel.track_pos.abs() > 1.0 {
        return EpisodeStatus::OffTrack;
    }
    if state.opponents.iter().any(|o| o.pose.distance_to(&state.ego) < rules.collision_radius) {
        return EpisodeStatus::Collided;
    }
    match rules.target_laps {
        Some(n) if state.lap_count >= n => EpisodeStatus::LapDone(state.lap_count),
        _ => EpisodeStatus::Running,
    }
}

/// Track, vehicle and integration settings bundled together.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub geometry: TrackGeometry,
    pub vehicle: VehicleParams,
    pub dt: f64,
    pub rules: EpisodeRules,
}

impl Simulator {
    pub fn new(geometry: TrackGeometry) -> Self {
        Self { geometry, vehicle: VehicleParams::default(), dt: DEFAULT_DT, rules: EpisodeRules::default() }
    }

    pub fn step(&self, state: &WorldState, cmd: Command) -> WorldState {
        step(state, cmd, &self.geometry, &self.vehicle, self.dt)
    }

    pub fn status(&self, state: &WorldState) -> EpisodeStatus {
        episode_status(state, &self.geometry, &self.rules)
    }
}

/// Advance the world by one forward-Euler step of the kinematic bicycle
/// (rear-axle reference point). Command components are saturated to
/// `[-1, 1]` first.
pub fn step(state: &WorldState, cmd: Command, geom: &TrackGeometry, vehicle: &VehicleParams, dt: f64) -> WorldState {
    debug_assert!(dt > 0.0);
    let cmd = cmd.clamped();
    let ego = state.ego;

    let wheel_angle = cmd.steer * vehicle.max_steer;
    let accel = if cmd.accel >= 0.0 { cmd.accel * vehicle.a_max } else { cmd.accel * vehicle.b_max };
    let (sin_h, cos_h) = ego.heading.sin_cos();
    let next_ego = VehiclePose::new(
        ego.x + ego.speed * cos_h * dt,
        ego.y + ego.speed * sin_h * dt,
        ego.heading + ego.speed / vehicle.wheelbase * wheel_angle.tan() * dt,
        (ego.speed + accel * dt).clamp(0.0, vehicle.v_max),
    );

    let s = geom.relative_pose(&next_ego).s;
    let length = geom.total_length();
    let mut ds = s - state.s;
    if ds > length / 2.0 {
        ds -= length;
    } else if ds < -length / 2.0 {
        ds += length;
    }
    let progress = state.progress + ds;
    let lap_count = (progress / length).floor().max(0.0) as u32;

    WorldState {
        ego: next_ego,
        opponents: state.opponents.iter().map(|o| o.advance(geom, dt)).collect(),
        t: state.t + dt,
        steps: state.steps + 1,
        lap_count,
        progress,
        s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim() -> Simulator {
        Simulator::new(TrackGeometry::oval().unwrap())
    }

    #[test]
    fn zero_command_translates() {
        let sim = sim();
        let state = WorldState::on_track(&sim.geometry, 20.0, 0.0, 10.0);
        let next = sim.step(&state, Command::ZERO);
        assert!((next.ego.x - state.ego.x - 0.5).abs() < 1e-12);
        assert_eq!(next.ego.y, state.ego.y);
        assert_eq!(next.ego.heading, state.ego.heading);
        assert_eq!(next.ego.speed, 10.0);
        assert_eq!(next.t, 0.05);
    }

    #[test]
    fn full_throttle_from_rest() {
        let sim = sim();
        let state = WorldState::on_track(&sim.geometry, 20.0, 0.0, 0.0);
        let next = sim.step(&state, Command::new(0.0, 1.0));
        assert!((next.ego.speed - 0.2).abs() < 1e-15);
    }

    #[test]
    fn braking_at_rest_stays_at_rest() {
        let sim = sim();
        let state = WorldState::on_track(&sim.geometry, 20.0, 0.0, 0.0);
        let next = sim.step(&state, Command::new(0.0, -1.0));
        assert_eq!(next.ego.speed, 0.0);
    }

    #[test]
    fn speed_capped_and_commands_saturated() {
        let sim = sim();
        let state = WorldState::on_track(&sim.geometry, 20.0, 0.0, 83.3);
        let next = sim.step(&state, Command::new(0.0, 5.0));
        assert_eq!(next.ego.speed, 83.3);
        let turned = sim.step(&state, Command::new(3.0, 0.0));
        let reference = sim.step(&state, Command::new(1.0, 0.0));
        assert_eq!(turned.ego, reference.ego);
    }

    #[test]
    fn positive_steer_turns_left() {
        let sim = sim();
        let state = WorldState::on_track(&sim.geometry, 20.0, 0.0, 10.0);
        let next = sim.step(&state, Command::new(0.5, 0.0));
        assert!(next.ego.heading > state.ego.heading);
    }

    #[test]
    fn lap_counter_wraps() {
        let sim = sim();
        let mut state = WorldState::on_track(&sim.geometry, 0.0, 0.0, 10.0);
        let mut laps_seen = 0;
        for _ in 0..2000 {
            // Perfect curvature feed-forward keeps the car on the centerline.
            let kappa = sim.geometry.curvature_at(state.s);
            let steer = (kappa * sim.vehicle.wheelbase).atan() / sim.vehicle.max_steer;
            state = sim.step(&state, Command::new(steer, 0.0));
            assert!(sim.geometry.relative_pose(&state.ego).track_pos.abs() < 1.0);
            laps_seen = state.lap_count;
            if laps_seen == 1 {
                break;
            }
        }
        assert_eq!(laps_seen, 1);
        assert_eq!(sim.status(&state), EpisodeStatus::LapDone(1));
    }

    #[test]
    fn status_classification() {
        let sim = sim();
        let fresh = WorldState::on_track(&sim.geometry, 10.0, 0.0, 0.0);
        assert_eq!(sim.status(&fresh), EpisodeStatus::Running);

        let off = WorldState::with_ego(&sim.geometry, VehiclePose::new(10.0, -6.06, 0.0, 0.0));
        assert_eq!(sim.status(&off), EpisodeStatus::OffTrack);

        let mut crash = fresh.clone();
        crash.add_opponent(&sim.geometry, OpponentScript { s: 10.0, offset: 0.0, speed: 0.0 });
        assert_eq!(sim.status(&crash), EpisodeStatus::Collided);
    }

    #[test]
    fn opponents_follow_script() {
        let sim = sim();
        let mut state = WorldState::on_track(&sim.geometry, 0.0, 0.0, 0.0);
        state.add_opponent(&sim.geometry, OpponentScript { s: 50.0, offset: -2.0, speed: 10.0 });
        for _ in 0..100 {
            state = sim.step(&state, Command::ZERO);
        }
        let opp = state.opponents[0];
        assert!((opp.script.s - 100.0).abs() < 1e-9);
        let rel = sim.geometry.relative_pose(&opp.pose);
        assert!((rel.e + 2.0).abs() < 1e-9);
        assert!(rel.delta_psi.abs() < 1e-9);
    }
}
