//! Entry points behind the CLI subcommands.

use std::path::{Path, PathBuf};

use rand::Rng;

use super::eval::{eval_policy, EvalSummary};
use super::export::{commands_csv, eval_episodes_csv, eval_summary_csv, scenario_csv, write_file};
use super::scenario::{run_scenario, Scenario, ScenarioLog};
use super::{HarnessError, RunConfig};
use crate::ddpg::{metrics_csv, train, Checkpoint, CheckpointMeta, Policy, TrainingRun};
use crate::track::TrackGeometry;
use crate::world::{EpisodeRules, Simulator, WorldState};

/// Value of `run.checkpoint` selecting the bundled toy policy.
pub const TOY_CHECKPOINT: &str = "toy";

/// Small policy trained with the default configuration (tiny profile,
/// seed 0, 5·10⁴ steps on the oval), shipped with the crate.
pub fn toy_checkpoint() -> Checkpoint {
    Checkpoint::from_texts(
        include_str!("../../assets/toy_policy/actor.mlpv1"),
        include_str!("../../assets/toy_policy/critic.mlpv1"),
        include_str!("../../assets/toy_policy/checkpoint.meta"),
    )
    .expect("bundled checkpoint is well formed")
}

/// Built-in track by name, otherwise a track file.
pub fn load_track(name: &str) -> Result<TrackGeometry, HarnessError> {
    match name {
        "oval" | "curvy" => Ok(TrackGeometry::named(name)?),
        path => Ok(TrackGeometry::load(path)?),
    }
}

pub fn simulator(cfg: &RunConfig, geometry: TrackGeometry) -> Simulator {
    let mut sim = Simulator::new(geometry);
    sim.vehicle = cfg.vehicle;
    sim.dt = cfg.dt;
    sim.rules = EpisodeRules { collision_radius: cfg.collision_radius, ..sim.rules };
    sim
}

fn default_checkpoint_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("checkpoint")
}

/// Policy named by `run.checkpoint`, defaulting to `<out_dir>/checkpoint`.
pub fn load_policy(cfg: &RunConfig) -> Result<Policy, HarnessError> {
    let dir = cfg.checkpoint.clone().unwrap_or_else(|| default_checkpoint_dir(cfg));
    if dir.as_os_str() == TOY_CHECKPOINT {
        return Ok(toy_checkpoint().policy);
    }
    if !dir.is_dir() {
        return Err(HarnessError::MissingCheckpoint(dir));
    }
    Ok(Checkpoint::load(&dir)?.policy)
}

#[derive(Debug)]
pub struct TrainOutput {
    pub run: TrainingRun,
    pub checkpoint_dir: PathBuf,
    pub metrics_path: PathBuf,
}

/// Train on the configured track without opponents and write
/// `<out_dir>/checkpoint/`, `<out_dir>/metrics.csv` and
/// `<out_dir>/run_config.txt`.
///
/// Episodes start on the centerline, at rest, at an arc length drawn
/// uniformly from the trainer's seeded generator, and only end on failure
/// or the episode step limit.
pub fn train_cmd(cfg: &RunConfig) -> Result<TrainOutput, HarnessError> {
    cfg.validate()?;
    let geom = load_track(&cfg.track)?;
    let mut sim = simulator(cfg, geom);
    sim.rules.target_laps = None;
    let length = sim.geometry.total_length();
    let run = train(&cfg.trainer, &sim, |_, rng| {
        WorldState::on_track(&sim.geometry, rng.random::<f64>() * length, 0.0, 0.0)
    })?;

    log::info!("training finished after {} steps, {} episodes", run.steps, run.metrics.len());
    let checkpoint_dir = default_checkpoint_dir(cfg);
    Checkpoint { policy: run.policy.clone(), meta: CheckpointMeta::for_config(&cfg.trainer, run.steps) }
        .save(&checkpoint_dir)?;
    let metrics_path = cfg.out_dir.join("metrics.csv");
    write_file(&metrics_path, &metrics_csv(&run.metrics))?;
    write_file(&cfg.out_dir.join("run_config.txt"), &cfg.to_text())?;
    Ok(TrainOutput { run, checkpoint_dir, metrics_path })
}

/// Evaluate the configured checkpoint and write `<out_dir>/eval_summary.csv`
/// and `<out_dir>/eval_episodes.csv`.
pub fn eval_cmd(cfg: &RunConfig) -> Result<EvalSummary, HarnessError> {
    cfg.validate()?;
    let geom = load_track(&cfg.track)?;
    let policy = load_policy(cfg)?;
    let summary = eval_policy(&policy, cfg, &geom, &cfg.track)?;
    write_file(&cfg.out_dir.join("eval_summary.csv"), &eval_summary_csv(&summary))?;
    write_file(&cfg.out_dir.join("eval_episodes.csv"), &eval_episodes_csv(&summary))?;
    Ok(summary)
}

/// Run scenarios with the configured checkpoint. Writes one
/// `scenario_<id>.csv` (plus the scenario's text form) per scenario and a
/// combined `scenario_commands.csv`.
pub fn scenario_cmd(cfg: &RunConfig, scenarios: &[Scenario]) -> Result<Vec<ScenarioLog>, HarnessError> {
    cfg.validate()?;
    let policy = load_policy(cfg)?;
    let mut logs = Vec::with_capacity(scenarios.len());
    for sc in scenarios {
        let geom = load_track(&sc.track)?;
        let log = run_scenario(sc, cfg, &policy, &geom)?;
        log::info!("scenario {}: {} steps", sc.id, log.rows.len());
        write_file(&scenario_path(&cfg.out_dir, sc, "csv"), &scenario_csv(&log))?;
        write_file(&scenario_path(&cfg.out_dir, sc, "txt"), &sc.to_text())?;
        logs.push(log);
    }
    write_file(&cfg.out_dir.join("scenario_commands.csv"), &commands_csv(&logs))?;
    Ok(logs)
}

fn scenario_path(dir: &Path, sc: &Scenario, ext: &str) -> PathBuf {
    dir.join(format!("scenario_{}.{ext}", sc.id))
}

/// Worst-case result of [`check_gradients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientReport {
    pub networks: usize,
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
}

/// Compare backpropagation against central differences (`h = 1e-5`) on
/// `networks` random small networks drawn from `seed`.
pub fn check_gradients(networks: usize, seed: u64) -> Result<GradientReport, HarnessError> {
    use crate::neural::{finite_diff_check, Activation, Mlp};
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientReport { networks, max_rel_error: 0.0, checked: 0, skipped_kinks: 0 };
    for _ in 0..networks {
        let depth = rng.random_range(1..=2);
        let mut sizes = vec![rng.random_range(1..=8)];
        sizes.extend((0..depth).map(|_| rng.random_range(2..=16)));
        sizes.push(rng.random_range(1..=4));
        let hidden = if rng.random::<bool>() { Activation::Tanh } else { Activation::Relu };
        let output = if rng.random::<bool>() { Activation::Tanh } else { Activation::Identity };
        let net = Mlp::init(&sizes, hidden, output, 0.5, &mut rng);
        let input: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let upstream: Vec<f64> = (0..net.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let check = finite_diff_check(&net, &input, 1e-5, &upstream).map_err(crate::ddpg::DdpgError::from)?;
        report.max_rel_error = report.max_rel_error.max(check.max_rel_error);
        report.checked += check.checked;
        report.skipped_kinks += check.skipped_kinks;
    }
    Ok(report)
}
