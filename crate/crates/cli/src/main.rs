use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hybrid_drive::harness::{
    check_gradients, eval_cmd, load_policy, load_track, scenario_cmd, simulator, train_cmd, ConfigError, HarnessError,
    HybridController, RunConfig, Scenario, ScenarioId,
};
use hybrid_drive::scr::{frame_from_message, run_client, run_server, ClientOptions, ServerOptions};
use hybrid_drive::world::WorldState;
use hybrid_drive::Command;

/// Hybrid DDPG / potential-field / path-tracking driving controller.
#[derive(Parser)]
#[command(name = "hybrid-drive", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (default: $HYBRID_DRIVE_OUT, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Checkpoint directory, or `toy` for the bundled policy.
    #[arg(long, global = true)]
    checkpoint: Option<String>,
    /// Track name (`oval`, `curvy`) or track file.
    #[arg(long, global = true)]
    track: Option<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Train a policy without opponents.
    Train {
        /// Total environment steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Evaluate a checkpoint without exploration noise.
    Eval {
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Run scenario A, B, C, D, `all`, or a scenario file.
    Scenario { id: String },
    /// Serve the built-in simulator to one SCR client.
    ServeScr {
        /// UDP port to listen on.
        #[arg(long = "scr-listen", default_value_t = 3001)]
        port: u16,
        /// Start from a scenario instead of the start line.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Drive an SCR server with the blended controller.
    DriveScr {
        /// Server address, host:port.
        #[arg(long = "scr-connect")]
        addr: String,
        #[arg(long, default_value = "SCR")]
        id: String,
    },
    /// Check backpropagation against finite differences.
    CheckGradients {
        #[arg(long, default_value_t = 20)]
        networks: usize,
    },
}

fn config(common: &Common) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_env(),
    };
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.trainer.seed = seed;
    }
    if let Some(c) = &common.checkpoint {
        cfg.checkpoint = Some(PathBuf::from(c));
    }
    if let Some(t) = &common.track {
        cfg.track = t.clone();
    }
    Ok(cfg)
}

fn scenarios(arg: &str) -> Result<Vec<Scenario>, HarnessError> {
    if arg.eq_ignore_ascii_case("all") {
        return Ok(ScenarioId::ALL.map(Scenario::builtin).to_vec());
    }
    if let Ok(id) = arg.parse::<ScenarioId>() {
        return Ok(vec![Scenario::builtin(id)]);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| HarnessError::Scenario(format!("`{arg}` is not a scenario id or readable file: {e}")))?;
    Ok(vec![text.parse()?])
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = config(&cli.common)?;
    match cli.command {
        Sub::Train { steps } => {
            if let Some(n) = steps {
                cfg.trainer.total_steps = n;
            }
            let out = train_cmd(&cfg)?;
            println!(
                "trained {} steps over {} episodes; checkpoint {}, metrics {}",
                out.run.steps,
                out.run.metrics.len(),
                out.checkpoint_dir.display(),
                out.metrics_path.display()
            );
        }
        Sub::Eval { episodes } => {
            if let Some(n) = episodes {
                cfg.eval_episodes = n;
            }
            let s = eval_cmd(&cfg)?;
            println!(
                "{}: completed {}/{} (rate {}), mean return {:.3}, off track {}, collided {}, timeout {}",
                s.track,
                s.completed(),
                s.episodes(),
                s.completion_rate(),
                s.mean_return(),
                s.count("off_track"),
                s.count("collided"),
                s.count("timeout")
            );
        }
        Sub::Scenario { id } => {
            for log in scenario_cmd(&cfg, &scenarios(&id)?)? {
                let last = log.rows.last().map_or("empty", |r| r.status.label());
                println!("scenario {}: {} steps, final status {last}", log.id, log.rows.len());
            }
            println!("logs written to {}", cfg.out_dir.display());
        }
        Sub::ServeScr { port, scenario } => {
            cfg.validate()?;
            let (geom, start) = match scenario {
                Some(arg) => {
                    let sc = scenarios(&arg)?.remove(0);
                    let geom = load_track(&sc.track)?;
                    let start = sc.initial_state(&geom)?;
                    (geom, start)
                }
                None => {
                    let geom = load_track(&cfg.track)?;
                    let start = WorldState::on_track(&geom, 0.0, 0.0, 0.0);
                    (geom, start)
                }
            };
            let mut sim = simulator(&cfg, geom);
            sim.rules.target_laps = None;
            let socket = UdpSocket::bind(("0.0.0.0", port))
                .map_err(|e| HarnessError::Io { path: PathBuf::from(format!("udp:{port}")), source: e })?;
            println!("listening on udp port {port}");
            let opts = ServerOptions {
                timeout: Duration::from_millis(cfg.scr_timeout_ms),
                max_steps: cfg.scr_max_steps,
                ..Default::default()
            };
            let (report, state) = run_server(&socket, &sim, start, &opts)?;
            println!(
                "session over ({:?}): {} steps, {} skipped, final status {}",
                report.end,
                report.steps,
                report.skipped,
                sim.status(&state).label()
            );
        }
        Sub::DriveScr { addr, id } => {
            cfg.validate()?;
            let server: SocketAddr = addr.to_socket_addrs().ok().and_then(|mut a| a.next()).ok_or_else(|| {
                HarnessError::Config(ConfigError::BadValue { key: "scr-connect".into(), value: addr.clone() })
            })?;
            let geom = load_track(&cfg.track)?;
            let ctl = HybridController::new(load_policy(&cfg)?, &cfg, geom.half_width());
            let opts = ClientOptions { id, timeout: Duration::from_millis(cfg.scr_timeout_ms), ..Default::default() };
            let report = run_client(server, &opts, |msg| match frame_from_message(msg) {
                Ok(frame) => ctl.command(&frame),
                Err(e) => {
                    log::warn!("incomplete sensor message ({e}); sending a neutral command");
                    Command::ZERO
                }
            })?;
            println!("session over ({:?}): {} steps, {} skipped", report.end, report.steps, report.skipped);
        }
        Sub::CheckGradients { networks } => {
            let r = check_gradients(networks, cfg.trainer.seed)?;
            println!(
                "{} networks, {} coordinates checked ({} skipped at relu kinks), max relative error {:e}",
                r.networks, r.checked, r.skipped_kinks, r.max_rel_error
            );
            if r.max_rel_error > 1e-4 {
                return Err(HarnessError::Check(format!("max relative error {:e} exceeds 1e-4", r.max_rel_error)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; usage errors are
            // validation errors.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
