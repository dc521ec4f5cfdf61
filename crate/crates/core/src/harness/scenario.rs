//! Four reference situations: a bare curve, an opponent well ahead, an
//! opponent close ahead-left, and a curve with two opponents and the ego
//! off-center.
//!
//! Placements are our own reconstruction of the qualitative setups. Each
//! scenario has a text form so alternatives can be loaded from files:
//!
//! ```text
//! id = C
//! track = oval
//! ego = 10 0 15          # s, e, speed
//! opponent = 3 -5 15     # s ahead of the ego, e, speed
//! duration = 10
//! ```

use std::fmt;
use std::str::FromStr;

use super::{HarnessError, HybridController, RunConfig};
use crate::blend::MethodCommands;
use crate::ddpg::Policy;
use crate::sensors::sensor_frame;
use crate::track::TrackGeometry;
use crate::world::{EpisodeRules, EpisodeStatus, OpponentScript, Simulator, WorldState};
use crate::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    A,
    B,
    C,
    D,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::A, ScenarioId::B, ScenarioId::C, ScenarioId::D];
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            ScenarioId::A => "A",
            ScenarioId::B => "B",
            ScenarioId::C => "C",
            ScenarioId::D => "D",
        };
        f.write_str(c)
    }
}

impl FromStr for ScenarioId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(ScenarioId::A),
            "B" => Ok(ScenarioId::B),
            "C" => Ok(ScenarioId::C),
            "D" => Ok(ScenarioId::D),
            other => Err(HarnessError::Scenario(format!("unknown scenario id `{other}`"))),
        }
    }
}

/// Opponent placement relative to the ego's start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpponentStart {
    /// Arc length ahead of the ego, meters.
    pub ds: f64,
    pub e: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub track: String,
    pub ego_s: f64,
    pub ego_e: f64,
    pub ego_speed: f64,
    pub opponents: Vec<OpponentStart>,
    /// Simulated seconds.
    pub duration: f64,
}

impl Scenario {
    pub fn builtin(id: ScenarioId) -> Self {
        let opp = |ds, e, speed| OpponentStart { ds, e, speed };
        let (ego_s, ego_e, opponents) = match id {
            // Entering the first curve of the oval, nobody around.
            ScenarioId::A => (95.0, 0.0, vec![]),
            // One car 25 m straight ahead.
            ScenarioId::B => (10.0, 0.0, vec![opp(25.0, 0.0, 20.0)]),
            // One car 3 m ahead and 5 m to the left.
            ScenarioId::C => (10.0, 0.0, vec![opp(3.0, -5.0, 20.0)]),
            // In the curve, 4 m right of center, two cars ahead.
            ScenarioId::D => (110.0, 4.0, vec![opp(20.0, -2.0, 20.0), opp(35.0, 2.0, 20.0)]),
        };
        Self { id, track: "oval".to_string(), ego_s, ego_e, ego_speed: 15.0, opponents, duration: 10.0 }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "id = {}\ntrack = {}\nego = {} {} {}\n",
            self.id, self.track, self.ego_s, self.ego_e, self.ego_speed
        );
        for o in &self.opponents {
            out.push_str(&format!("opponent = {} {} {}\n", o.ds, o.e, o.speed));
        }
        out.push_str(&format!("duration = {}\n", self.duration));
        out
    }

    pub fn initial_state(&self, geom: &TrackGeometry) -> Result<WorldState, HarnessError> {
        if self.ego_e.abs() >= geom.half_width() {
            return Err(HarnessError::Scenario(format!("scenario {} starts off the track", self.id)));
        }
        let mut state = WorldState::on_track(geom, self.ego_s, self.ego_e, self.ego_speed);
        for o in &self.opponents {
            state.add_opponent(geom, OpponentScript { s: geom.wrap_s(self.ego_s + o.ds), offset: o.e, speed: o.speed });
        }
        Ok(state)
    }
}

impl FromStr for Scenario {
    type Err = HarnessError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| HarnessError::Scenario(m);
        let numbers = |key: &str, v: &str| -> Result<Vec<f64>, HarnessError> {
            let xs = v
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("bad numbers for `{key}`: `{v}`")))?;
            if xs.len() != 3 || xs.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("`{key}` takes three finite numbers")));
            }
            Ok(xs)
        };
        let mut id = None;
        let mut track = "oval".to_string();
        let mut ego = None;
        let mut opponents = Vec::new();
        let mut duration = 10.0;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "id" => id = Some(v.parse::<ScenarioId>()?),
                "track" => track = v.to_string(),
                "ego" => ego = Some(numbers(k, v)?),
                "opponent" => {
                    let x = numbers(k, v)?;
                    opponents.push(OpponentStart { ds: x[0], e: x[1], speed: x[2] });
                }
                "duration" => {
                    duration = v
                        .parse::<f64>()
                        .ok()
                        .filter(|d| *d > 0.0 && d.is_finite())
                        .ok_or_else(|| bad(format!("bad duration `{v}`")))?
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let ego = ego.ok_or_else(|| bad("missing `ego`".into()))?;
        Ok(Self {
            id: id.ok_or_else(|| bad("missing `id`".into()))?,
            track,
            ego_s: ego[0],
            ego_e: ego[1],
            ego_speed: ego[2],
            opponents,
            duration,
        })
    }
}

/// One logged control step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    /// [`crate::sensors::SensorFrame::csv_row`] of the frame the
    /// controllers saw.
    pub frame: [f64; 7],
    pub commands: MethodCommands,
    pub blended: Command,
    pub status: EpisodeStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLog {
    pub id: ScenarioId,
    pub rows: Vec<StepRecord>,
}

impl ScenarioLog {
    /// Row recorded at time `t`, if any.
    pub fn at(&self, t: f64) -> Option<&StepRecord> {
        self.rows.iter().find(|r| (r.t - t).abs() < 1e-9)
    }
}

/// Drive the blended controller through `sc`.
///
/// Each step records the state, the three method commands and their blend,
/// then applies the blend. The log stops after the first terminal status
/// (off track or collision) or when `duration` is used up.
pub fn run_scenario(
    sc: &Scenario,
    cfg: &RunConfig,
    policy: &Policy,
    geom: &TrackGeometry,
) -> Result<ScenarioLog, HarnessError> {
    let mut sim = super::simulator(cfg, geom.clone());
    sim.rules = EpisodeRules { target_laps: None, ..sim.rules };
    run_on(sc, &sim, &HybridController::new(policy.clone(), cfg, geom.half_width()))
}

fn run_on(sc: &Scenario, sim: &Simulator, ctl: &HybridController) -> Result<ScenarioLog, HarnessError> {
    let mut state = sc.initial_state(&sim.geometry)?;
    let steps = (sc.duration / sim.dt).round() as usize;
    let mut rows = Vec::with_capacity(steps);
    for _ in 0..steps {
        let frame = sensor_frame(&state, &sim.geometry);
        let commands = ctl.commands(&frame);
        let blended = crate::blend::blend(&commands, &ctl.weights);
        let status = sim.status(&state);
        rows.push(StepRecord {
            t: state.t,
            x: state.ego.x,
            y: state.ego.y,
            heading: state.ego.heading,
            speed: state.ego.speed,
            frame: frame.csv_row(),
            commands,
            blended,
            status,
        });
        if status.is_terminal() {
            break;
        }
        state = sim.step(&state, blended);
    }
    Ok(ScenarioLog { id: sc.id, rows })
}
