use clap::{Parser, Subcommand};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use visnav_core::config::RunConfig;
use visnav_core::episode::{run_episode, run_suite, snapshot};
use visnav_core::exec::Execution;
use visnav_core::geometry::Pose2;
use visnav_core::logs::{plot_cost_data, plot_trajectory_data, read_costs_csv, read_trajectory_csv};
use visnav_core::simworld::{parse_positions_json, record_expert, Obstacle, WorldModel};
use visnav_core::topograph::build_graph;
use visnav_core::traversability::{write_gray_pgm, write_pgm};

#[derive(Parser)]
#[command(name = "visnav", version, about = "Topological visual navigation in a 2D simulator")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Dotted config key, e.g. mppi.lambda=1000. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drive the scripted expert along the waypoints and write poses.json.
    Record {
        /// JSON array of [x, y] waypoints; the world's expert route otherwise.
        #[arg(long, value_name = "PATH")]
        waypoints: Option<PathBuf>,
    },
    /// Build graph.json from a poses file written by `record`.
    BuildGraph {
        #[arg(value_name = "POSES")]
        poses: PathBuf,
    },
    /// Run one episode and write trajectory.csv, costs.csv and metrics.json.
    Run,
    /// Run the baseline and perturbation trials and write suite.json.
    Suite,
    /// Turn the logs in a run directory into plot data.
    Plot {
        /// Directory holding trajectory.csv and optionally costs.csv.
        #[arg(value_name = "RUN_DIR")]
        run_dir: PathBuf,
    },
    /// Write the oracle mask seen from a pose, plus an annotated overlay.
    ExportMask {
        /// Robot pose as x,y,theta; the world's start pose otherwise.
        #[arg(long, value_name = "X,Y,THETA", allow_hyphen_values = true)]
        pose: Option<String>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn config(e: impl ToString) -> Self {
        Failure::Config(e.to_string())
    }
    fn runtime(e: impl ToString) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(Failure::config(e.to_string().lines().next().unwrap_or("bad arguments").trim_start_matches("error: "))),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let (kind, message, code) = match f {
        Failure::Config(m) => ("config", m, 2),
        Failure::Runtime(m) => ("runtime", m, 3),
    };
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn load_config(path: Option<&Path>, seed: Option<u64>, overrides: &[String]) -> Result<RunConfig, Failure> {
    let mut all = overrides.to_vec();
    if let Some(s) = seed {
        all.push(format!("seed={s}"));
    }
    match path {
        Some(p) => RunConfig::load(p, &all),
        None => RunConfig::from_overrides(&all),
    }
    .map_err(Failure::config)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    // plot falls back to the config saved next to the logs
    let config_path = match (&cli.config, &cli.command) {
        (None, Command::Plot { run_dir }) if run_dir.join("config.toml").is_file() => Some(run_dir.join("config.toml")),
        (c, _) => c.clone(),
    };
    let cfg = load_config(config_path.as_deref(), cli.seed, &cli.overrides)?;
    fs::create_dir_all(&cli.out).map_err(|e| Failure::runtime(format!("{}: {e}", cli.out.display())))?;
    let out = cli.out.as_path();

    match cli.command {
        Command::Record { waypoints } => {
            let world = cfg.load_world().map_err(Failure::runtime)?;
            let wp = match waypoints {
                Some(p) => serde_json::from_str::<Vec<[f64; 2]>>(&read(&p)?).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?,
                None => world.expert_waypoints.clone(),
            };
            let rec = record_expert(&world, &wp, cfg.record, cfg.sim.pose_scale).map_err(Failure::runtime)?;
            write(&out.join("poses.json"), &(rec.positions_json() + "\n"))?;
            println!("{}", serde_json::json!({ "poses": rec.positions.len(), "scale": rec.scale }));
        }
        Command::BuildGraph { poses } => {
            let positions = parse_positions_json(&read(&poses)?).map_err(|e| Failure::config(format!("{}: {e}", poses.display())))?;
            let graph = build_graph(&positions, cfg.graph).map_err(Failure::runtime)?;
            graph.save(&out.join("graph.json")).map_err(Failure::runtime)?;
            println!("{}", serde_json::json!({ "nodes": graph.nodes.len(), "edges": graph.edges.len() }));
        }
        Command::Run => {
            let world = cfg.load_world().map_err(Failure::runtime)?;
            let graph = cfg.load_graph(&world).map_err(Failure::runtime)?;
            let metrics = run_episode(&cfg.episode_setup(&world, &graph)).map_err(Failure::runtime)?;
            write_with(&out.join("trajectory.csv"), |w| metrics.write_trajectory_csv(w))?;
            write_with(&out.join("costs.csv"), |w| metrics.write_costs_csv(w))?;
            let summary = serde_json::to_string_pretty(&metrics.summary()).expect("plain data");
            write(&out.join("metrics.json"), &(summary + "\n"))?;
            write(&out.join("config.toml"), &cfg.to_toml())?;
            println!("{}", serde_json::to_string(&metrics.summary()).expect("plain data"));
        }
        Command::Suite => {
            let world = cfg.load_world().map_err(Failure::runtime)?;
            let graph = cfg.load_graph(&world).map_err(Failure::runtime)?;
            let report = run_suite(&cfg.episode_setup(&world, &graph), &cfg.suite, Execution::Parallel).map_err(Failure::runtime)?;
            write(&out.join("suite.json"), &report.to_json())?;
            write(&out.join("config.toml"), &cfg.to_toml())?;
            println!("{}", serde_json::to_string(&report.metrics).expect("plain data"));
        }
        Command::Plot { run_dir } => {
            let world = perturbed_world(&cfg)?;
            let traj_path = run_dir.join("trajectory.csv");
            let trajectory = read_trajectory_csv(BufReader::new(open(&traj_path)?))
                .map_err(|e| Failure::config(format!("{}: {e}", traj_path.display())))?;
            write(&out.join("trajectory.dat"), &plot_trajectory_data(&world, &trajectory))?;
            let costs_path = run_dir.join("costs.csv");
            if costs_path.is_file() {
                let costs = read_costs_csv(BufReader::new(open(&costs_path)?))
                    .map_err(|e| Failure::config(format!("{}: {e}", costs_path.display())))?;
                write(&out.join("costs.dat"), &plot_cost_data(&costs))?;
            }
        }
        Command::ExportMask { pose } => {
            let world = cfg.load_world().map_err(Failure::runtime)?;
            let graph = cfg.load_graph(&world).map_err(Failure::runtime)?;
            let pose = match pose {
                Some(s) => parse_pose(&s).ok_or_else(|| Failure::config(format!("pose: expected x,y,theta, got {s:?}")))?,
                None => world.start(),
            };
            let snap = snapshot(&cfg.episode_setup(&world, &graph), pose).map_err(Failure::runtime)?;
            write_with(&out.join("mask.pgm"), |w| write_pgm(w, &snap.mask).map_err(std::io::Error::other))?;
            let (w, h) = (snap.mask.width(), snap.mask.height());
            write_with(&out.join("overlay.pgm"), |f| write_gray_pgm(f, w, h, &snap.overlay()).map_err(std::io::Error::other))?;
            println!(
                "{}",
                serde_json::json!({
                    "subgoal_node": snap.subgoal_node,
                    "alpha": snap.alpha,
                    "subgoal": snap.subgoal.map(|s| [s.p.u, s.p.v]),
                    "obstacle_pixels": snap.obstacle_pixels.len(),
                })
            );
        }
    }
    Ok(())
}

fn perturbed_world(cfg: &RunConfig) -> Result<WorldModel, Failure> {
    let world = cfg.load_world().map_err(Failure::runtime)?;
    match &cfg.perturbation {
        Some(o) => world.with_obstacle(Obstacle { shape: o.shape.clone(), is_target: true }).map_err(Failure::runtime),
        None => Ok(world),
    }
}

fn parse_pose(s: &str) -> Option<Pose2> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse().ok()).collect::<Option<_>>()?;
    match v[..] {
        [x, y, theta] => Some(Pose2::new(x, y, theta)),
        _ => None,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let err = |e: std::io::Error| Failure::runtime(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    f(&mut w).map_err(err)?;
    w.flush().map_err(err)
}
