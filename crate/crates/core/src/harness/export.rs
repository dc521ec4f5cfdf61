//! CSV files. Floats are written with nine significant digits, so the same
//! log always produces the same bytes.
//!
//! | file | columns |
//! |------|---------|
//! | `scenario_<id>.csv` | [`SCENARIO_COLUMNS`] |
//! | `scenario_commands.csv` | [`COMMAND_COLUMNS`] |
//! | `metrics.csv` | `episode,steps,return,avg_q,loss` |
//! | `eval_summary.csv` | [`EVAL_SUMMARY_COLUMNS`] |
//! | `eval_episodes.csv` | [`EVAL_EPISODE_COLUMNS`] |

use std::path::Path;

use super::eval::EvalSummary;
use super::scenario::ScenarioLog;
use super::HarnessError;
use crate::sig9;

pub const SCENARIO_COLUMNS: &[&str] = &[
    "t",
    "x",
    "y",
    "heading",
    "speed",
    "angle",
    "track_pos",
    "engine_rpm",
    "min_track_ray",
    "min_opponent",
    "steer_learn",
    "accel_learn",
    "steer_apf",
    "accel_apf",
    "steer_track",
    "accel_track",
    "steer",
    "accel",
    "status",
];

/// Per-method commands of several scenarios side by side.
pub const COMMAND_COLUMNS: &[&str] = &[
    "scenario",
    "t",
    "steer_learn",
    "steer_apf",
    "steer_track",
    "steer",
    "accel_learn",
    "accel_apf",
    "accel_track",
    "accel",
];

pub const EVAL_SUMMARY_COLUMNS: &[&str] = &[
    "track",
    "controller",
    "episodes",
    "completed",
    "completion_rate",
    "mean_return",
    "off_track",
    "collided",
    "timeout",
];

pub const EVAL_EPISODE_COLUMNS: &[&str] = &["episode", "start_s", "steps", "return", "laps", "status"];

fn table(columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn scenario_csv(log: &ScenarioLog) -> String {
    table(
        SCENARIO_COLUMNS,
        log.rows.iter().map(|r| {
            let c = &r.commands;
            let mut row: Vec<String> = [r.t, r.x, r.y, r.heading, r.speed]
                .into_iter()
                // The digest repeats t and speed; keep the rest.
                .chain([r.frame[1], r.frame[2], r.frame[4], r.frame[5], r.frame[6]])
                .chain([
                    c.learn.steer,
                    c.learn.accel,
                    c.apf.steer,
                    c.apf.accel,
                    c.track.steer,
                    c.track.accel,
                    r.blended.steer,
                    r.blended.accel,
                ])
                .map(sig9)
                .collect();
            row.push(r.status.label().to_string());
            row
        }),
    )
}

pub fn commands_csv(logs: &[ScenarioLog]) -> String {
    table(
        COMMAND_COLUMNS,
        logs.iter().flat_map(|log| {
            log.rows.iter().map(move |r| {
                let c = &r.commands;
                let mut row = vec![log.id.to_string()];
                row.extend(
                    [
                        r.t,
                        c.learn.steer,
                        c.apf.steer,
                        c.track.steer,
                        r.blended.steer,
                        c.learn.accel,
                        c.apf.accel,
                        c.track.accel,
                        r.blended.accel,
                    ]
                    .map(sig9),
                );
                row
            })
        }),
    )
}

pub fn eval_summary_csv(summary: &EvalSummary) -> String {
    let row = vec![
        summary.track.clone(),
        summary.controller.name().to_string(),
        summary.episodes().to_string(),
        summary.completed().to_string(),
        sig9(summary.completion_rate()),
        sig9(summary.mean_return()),
        summary.count("off_track").to_string(),
        summary.count("collided").to_string(),
        summary.count("timeout").to_string(),
    ];
    table(EVAL_SUMMARY_COLUMNS, std::iter::once(row))
}

pub fn eval_episodes_csv(summary: &EvalSummary) -> String {
    table(
        EVAL_EPISODE_COLUMNS,
        summary.outcomes.iter().map(|o| {
            vec![
                o.episode.to_string(),
                sig9(o.start_s),
                o.steps.to_string(),
                sig9(o.ret),
                o.laps.to_string(),
                o.status.to_string(),
            ]
        }),
    )
}

/// Write `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}
