//! Text encoding of sensor and actuator datagrams.
//!
//! A message is a run of groups `(name v1 v2 ...)`. Only the groups the
//! controllers read are arity-checked; anything else is kept verbatim so a
//! parsed message re-renders with all of its groups in their original order.
//!
//! Wire values follow SCR conventions rather than the internal ones:
//! `trackPos` is positive toward the left edge, `speedX` is in km/h,
//! `wheelSpinVel` in rad/s, and `opponents[0]` covers the sector directly
//! behind the car, sweeping clockwise. [`message_from_frame`] and
//! [`frame_from_message`] convert between the two.

use std::fmt::Write as _;

use super::ScrError;
use crate::sensors::{SensorFrame, OPPONENT_SECTOR_COUNT, RPM_PER_MPS, TRACK_RAY_COUNT};
use crate::Command;

/// Groups checked on parse, with their arities.
pub const KNOWN_GROUPS: &[(&str, usize)] = &[
    ("angle", 1),
    ("trackPos", 1),
    ("speedX", 1),
    ("wheelSpinVel", 4),
    ("rpm", 1),
    ("track", TRACK_RAY_COUNT),
    ("opponents", OPPONENT_SECTOR_COUNT),
];

/// Wheel radius used to turn surface speed into spin rate, m.
pub const WHEEL_RADIUS: f64 = 0.3;
pub const MPS_TO_KMH: f64 = 3.6;
/// Offset between the wire opponent index and the internal sector index.
const OPPONENT_ROTATION: usize = 9;

pub const SHUTDOWN: &str = "***shutdown***";
pub const RESTART: &str = "***restart***";
pub const IDENTIFIED: &str = "***identified***";

pub fn known_arity(name: &str) -> Option<usize> {
    KNOWN_GROUPS.iter().find(|(n, _)| *n == name).map(|&(_, a)| a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub name: String,
    pub values: Vec<f64>,
}

/// Parsed sensor datagram.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorMessage {
    pub groups: Vec<Group>,
}

impl SensorMessage {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.groups.iter().find(|g| g.name == name).map(|g| g.values.as_slice())
    }

    fn scalar(&self, name: &str) -> Option<f64> {
        self.get(name).map(|v| v[0])
    }

    pub fn angle(&self) -> Option<f64> {
        self.scalar("angle")
    }

    pub fn track_pos(&self) -> Option<f64> {
        self.scalar("trackPos")
    }

    pub fn speed_x(&self) -> Option<f64> {
        self.scalar("speedX")
    }

    pub fn rpm(&self) -> Option<f64> {
        self.scalar("rpm")
    }

    pub fn wheel_spin_vel(&self) -> Option<&[f64]> {
        self.get("wheelSpinVel")
    }

    pub fn track(&self) -> Option<&[f64]> {
        self.get("track")
    }

    pub fn opponents(&self) -> Option<&[f64]> {
        self.get("opponents")
    }

    /// Append or replace a group, checking its arity if the name is known.
    pub fn set(&mut self, name: &str, values: Vec<f64>) -> Result<(), ScrError> {
        check_group(name, &values)?;
        match self.groups.iter_mut().find(|g| g.name == name) {
            Some(g) => g.values = values,
            None => self.groups.push(Group { name: name.to_string(), values }),
        }
        Ok(())
    }
}

fn check_group(name: &str, values: &[f64]) -> Result<(), ScrError> {
    if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        return Err(ScrError::BadName(name.to_string()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(ScrError::BadNumber(v.to_string()));
    }
    match known_arity(name) {
        Some(expected) if expected != values.len() => {
            Err(ScrError::Arity { name: name.to_string(), expected, got: values.len() })
        }
        _ if values.is_empty() => Err(ScrError::EmptyGroup(name.to_string())),
        _ => Ok(()),
    }
}

/// Split a datagram into groups without interpreting names.
fn parse_groups(text: &str) -> Result<Vec<Group>, ScrError> {
    let text = text.trim_end_matches('\0').trim();
    if text.is_empty() {
        return Err(ScrError::Empty);
    }
    let mut groups = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or(ScrError::Unbalanced)?;
        let close = body.find(')').ok_or(ScrError::Unbalanced)?;
        let inner = &body[..close];
        if inner.contains('(') {
            return Err(ScrError::Unbalanced);
        }
        let mut tokens = inner.split_ascii_whitespace();
        let name = tokens.next().ok_or_else(|| ScrError::EmptyGroup(String::new()))?;
        let values = tokens
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| ScrError::BadNumber(t.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        check_group(name, &values)?;
        groups.push(Group { name: name.to_string(), values });
        rest = body[close + 1..].trim_start();
    }
    Ok(groups)
}

pub fn parse_sensor_string(text: &str) -> Result<SensorMessage, ScrError> {
    let groups = parse_groups(text)?;
    for (i, g) in groups.iter().enumerate() {
        if known_arity(&g.name).is_some() && groups[..i].iter().any(|h| h.name == g.name) {
            return Err(ScrError::Duplicate(g.name.clone()));
        }
    }
    Ok(SensorMessage { groups })
}

/// Parse raw datagram bytes; non-UTF-8 input is an error, never a panic.
pub fn parse_sensor_bytes(bytes: &[u8]) -> Result<SensorMessage, ScrError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ScrError::NotUtf8)?;
    parse_sensor_string(text)
}

fn write_group(out: &mut String, name: &str, values: &[f64]) {
    out.push('(');
    out.push_str(name);
    for v in values {
        // Adding zero turns -0 into 0.
        let _ = write!(out, " {}", v + 0.0);
    }
    out.push(')');
}

pub fn format_sensor_string(msg: &SensorMessage) -> String {
    let mut out = String::new();
    for g in &msg.groups {
        write_group(&mut out, &g.name, &g.values);
    }
    out
}

/// Wire-side view of one frame, plus the simulation clock as `curLapTime`.
pub fn message_from_frame(frame: &SensorFrame) -> SensorMessage {
    let mut opponents = [0.0; OPPONENT_SECTOR_COUNT];
    for (k, slot) in opponents.iter_mut().enumerate() {
        *slot = frame.opponents[(k + OPPONENT_SECTOR_COUNT - OPPONENT_ROTATION) % OPPONENT_SECTOR_COUNT];
    }
    let group = |name: &str, values: &[f64]| Group { name: name.to_string(), values: values.to_vec() };
    SensorMessage {
        groups: vec![
            group("angle", &[frame.angle]),
            group("curLapTime", &[frame.t]),
            group("gear", &[1.0]),
            group("opponents", &opponents),
            group("rpm", &[frame.engine_rpm]),
            group("speedX", &[frame.speed * MPS_TO_KMH]),
            group("speedY", &[0.0]),
            group("speedZ", &[0.0]),
            group("track", &frame.track_rays),
            group("trackPos", &[-frame.track_pos]),
            group("wheelSpinVel", &frame.wheel_speeds.map(|w| w / WHEEL_RADIUS)),
        ],
    }
}

/// Rebuild the controller's view of a frame from a sensor message.
///
/// `rpm` is optional on the wire; without it the proxy is recomputed from
/// speed.
pub fn frame_from_message(msg: &SensorMessage) -> Result<SensorFrame, ScrError> {
    let need = |name: &'static str| msg.get(name).ok_or(ScrError::Missing(name));
    let speed = need("speedX")?[0] / MPS_TO_KMH;
    let mut track_rays = [0.0; TRACK_RAY_COUNT];
    track_rays.copy_from_slice(need("track")?);
    let wire_opponents = need("opponents")?;
    let mut opponents = [0.0; OPPONENT_SECTOR_COUNT];
    for (j, slot) in opponents.iter_mut().enumerate() {
        *slot = wire_opponents[(j + OPPONENT_ROTATION) % OPPONENT_SECTOR_COUNT];
    }
    let mut wheel_speeds = [0.0; 4];
    for (w, spin) in wheel_speeds.iter_mut().zip(need("wheelSpinVel")?) {
        *w = spin * WHEEL_RADIUS;
    }
    Ok(SensorFrame {
        track_rays,
        opponents,
        speed,
        wheel_speeds,
        engine_rpm: msg.rpm().unwrap_or(speed * RPM_PER_MPS),
        track_pos: -need("trackPos")?[0],
        angle: need("angle")?[0],
        t: msg.get("curLapTime").map_or(0.0, |v| v[0]),
    })
}

/// Actuator datagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorMessage {
    pub accel: f64,
    pub brake: f64,
    pub gear: i32,
    pub steer: f64,
}

impl ActuatorMessage {
    /// Split `accel` into throttle and brake; the gear is always 1.
    pub fn from_command(cmd: Command) -> Self {
        let cmd = cmd.clamped();
        let positive = |x: f64| if x > 0.0 { x } else { 0.0 };
        Self { accel: positive(cmd.accel), brake: positive(-cmd.accel), gear: 1, steer: cmd.steer + 0.0 }
    }

    pub fn to_command(&self) -> Command {
        Command::new(self.steer, self.accel - self.brake)
    }

    pub fn validate(&self) -> Result<(), ScrError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.accel) || !unit(self.brake) || !(-1.0..=1.0).contains(&self.steer) {
            return Err(ScrError::ActionRange(*self));
        }
        Ok(())
    }
}

pub fn format_action_string(a: &ActuatorMessage) -> Result<String, ScrError> {
    a.validate()?;
    let mut out = String::new();
    write_group(&mut out, "accel", &[a.accel]);
    write_group(&mut out, "brake", &[a.brake]);
    let _ = write!(out, "(gear {})", a.gear);
    write_group(&mut out, "steer", &[a.steer]);
    Ok(out)
}

/// Parse an actuator datagram. Extra groups such as `clutch` or `meta` are
/// accepted and ignored.
pub fn parse_action_string(text: &str) -> Result<ActuatorMessage, ScrError> {
    let groups = parse_groups(text)?;
    let scalar = |name: &'static str| -> Result<f64, ScrError> {
        match groups.iter().find(|g| g.name == name) {
            Some(g) if g.values.len() == 1 => Ok(g.values[0]),
            Some(g) => Err(ScrError::Arity { name: name.to_string(), expected: 1, got: g.values.len() }),
            None => Err(ScrError::Missing(name)),
        }
    };
    let gear = scalar("gear")?;
    if gear.fract() != 0.0 || gear.abs() > 10.0 {
        return Err(ScrError::BadNumber(gear.to_string()));
    }
    let a = ActuatorMessage {
        accel: scalar("accel")?,
        brake: scalar("brake")?,
        gear: gear as i32,
        steer: scalar("steer")?,
    };
    a.validate()?;
    Ok(a)
}
