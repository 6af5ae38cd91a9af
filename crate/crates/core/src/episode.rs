//! Closed-loop episodes and the evaluation protocol.
//!
//! Each step renders the oracle mask, picks a subgoal pixel from the oracle
//! yaw, samples obstacle points from the mask contours and applies the first
//! MPPI control to the true pose. Collisions, freezes and termination are
//! accounted for along the way.

use crate::controller::{mppi_solve_with, step_dynamics, ControlInput, ControllerError, CostContext, MppiConfig, RobotState};
use crate::exec::Execution;
use crate::geometry::{CameraModel, PixelPoint, Pose2};
use crate::simworld::{
    check_collision, distance_to_graph, is_obstacle_visible, oracle_localize, push_out, MaskRenderer, Obstacle, SimRobot,
    WorldError, WorldModel,
};
use crate::subgoal::{oracle_yaw, select_subgoal_pixel, SubgoalError, SubgoalMode, SubgoalPixel};
use crate::topograph::{select_subgoal_node, shortest_path, GraphError, TopoGraph};
use crate::traversability::{
    extract_contours, sample_obstacle_points, ObstaclePointSet, TraversabilityMask, DEFAULT_POINTS_PER_CONTOUR,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("suite has no runs")]
    EmptySuite,
    #[error("{runs} runs but {flags} perturbation flags")]
    LengthMismatch { runs: usize, flags: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn config_err(path: &str, reason: &str) -> EpisodeError {
    EpisodeError::Config(format!("{path}: {reason}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    /// Localization period in steps.
    pub reloc_period: usize,
    /// Subgoal lookahead in path hops.
    pub l_sg: usize,
    pub v_freeze: f64,
    pub t_freeze: usize,
    pub d_lost: f64,
    pub d_goal: f64,
    /// Defaults to the last graph node.
    pub goal_node: Option<usize>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_steps: 2000,
            reloc_period: 10,
            l_sg: 2,
            v_freeze: 0.02,
            t_freeze: 15,
            d_lost: 5.0,
            d_goal: 0.5,
            goal_node: None,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), EpisodeError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.max_steps < 1 {
            return Err(config_err("max_steps", "must be >= 1"));
        }
        if self.reloc_period < 1 {
            return Err(config_err("reloc_period", "must be >= 1"));
        }
        if self.t_freeze < 1 {
            return Err(config_err("t_freeze", "must be >= 1"));
        }
        if !positive(self.v_freeze) {
            return Err(config_err("v_freeze", "must be > 0"));
        }
        if !positive(self.d_lost) {
            return Err(config_err("d_lost", "must be > 0"));
        }
        if !positive(self.d_goal) {
            return Err(config_err("d_goal", "must be > 0"));
        }
        Ok(())
    }
}

/// Oracle perception settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Scale between metric truth and the graph frame.
    pub pose_scale: f64,
    pub sigma_pos: f64,
    pub sigma_alpha: f64,
    pub n_per_contour: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            pose_scale: 1.7,
            sigma_pos: 0.0,
            sigma_alpha: 0.0,
            n_per_contour: DEFAULT_POINTS_PER_CONTOUR,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), EpisodeError> {
        if !(self.pose_scale > 0.0 && self.pose_scale.is_finite()) {
            return Err(config_err("pose_scale", "must be > 0"));
        }
        if !(self.sigma_pos >= 0.0 && self.sigma_pos.is_finite()) {
            return Err(config_err("sigma_pos", "must be >= 0"));
        }
        if !(self.sigma_alpha >= 0.0 && self.sigma_alpha.is_finite()) {
            return Err(config_err("sigma_alpha", "must be >= 0"));
        }
        if self.n_per_contour < 1 {
            return Err(config_err("n_per_contour", "must be >= 1"));
        }
        Ok(())
    }
}

/// Everything one episode needs.
#[derive(Debug, Clone)]
pub struct EpisodeSetup<'a> {
    pub world: &'a WorldModel,
    pub graph: &'a TopoGraph,
    pub episode: EpisodeConfig,
    pub mppi: MppiConfig,
    pub sim: SimParams,
    pub seed: u64,
    /// Target obstacle injected into the world for this run.
    pub perturbation: Option<Obstacle>,
    /// How MPPI rollouts are evaluated; the loop itself is sequential.
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    Direct(i64),
    Indirect(i64),
    Freeze,
    Goal,
    Lost,
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Event::Direct(id) => write!(f, "dc:{id}"),
            Event::Indirect(id) => write!(f, "ic:{id}"),
            Event::Freeze => f.write_str("freeze"),
            Event::Goal => f.write_str("goal"),
            Event::Lost => f.write_str("lost"),
        }
    }
}

impl std::str::FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let id = |x: &str| x.parse::<i64>().map_err(|_| format!("bad obstacle id in event {s:?}"));
        match s {
            "freeze" => Ok(Event::Freeze),
            "goal" => Ok(Event::Goal),
            "lost" => Ok(Event::Lost),
            _ => match s.split_once(':') {
                Some(("dc", x)) => Ok(Event::Direct(id(x)?)),
                Some(("ic", x)) => Ok(Event::Indirect(id(x)?)),
                _ => Err(format!("unknown event {s:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    /// Elapsed time at the end of the step (s).
    pub t: f64,
    /// True pose at the end of the step, after any push-out.
    pub state: Pose2,
    pub control: ControlInput,
    pub events: Vec<Event>,
}

/// Per-step planner diagnostics for the cost traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub step: usize,
    pub subgoal_node: usize,
    pub alpha: f64,
    /// `None` when the mask had no traversable pixel.
    pub subgoal_pixel: Option<PixelPoint>,
    pub mode: Option<SubgoalMode>,
    pub obstacle_points: usize,
    pub expected_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub dc_count: usize,
    pub ic_count: usize,
    pub target_dc_count: usize,
    pub freeze_count: usize,
    pub goal_reached: bool,
    pub lost: bool,
    pub steps: usize,
    pub trajectory: Vec<TrajectoryRow>,
    pub costs: Vec<CostRecord>,
}

/// Counts only, for JSON summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub dc_count: usize,
    pub ic_count: usize,
    pub target_dc_count: usize,
    pub freeze_count: usize,
    pub goal_reached: bool,
    pub lost: bool,
    pub steps: usize,
}

impl EpisodeMetrics {
    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            dc_count: self.dc_count,
            ic_count: self.ic_count,
            target_dc_count: self.target_dc_count,
            freeze_count: self.freeze_count,
            goal_reached: self.goal_reached,
            lost: self.lost,
            steps: self.steps,
        }
    }

    pub fn collisions(&self) -> usize {
        self.dc_count + self.ic_count
    }

    /// `t,x,y,theta,v,w,event`; several events in one step are joined with `|`.
    pub fn write_trajectory_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y,theta,v,w,event")?;
        for r in &self.trajectory {
            let events: Vec<String> = r.events.iter().map(|e| e.to_string()).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t,
                r.state.x,
                r.state.y,
                r.state.theta,
                r.control.v,
                r.control.w,
                events.join("|")
            )?;
        }
        Ok(())
    }

    pub fn write_costs_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,subgoal_node,alpha,sg_u,sg_v,mode,obstacle_points,expected_cost")?;
        for c in &self.costs {
            let (u, v) = c.subgoal_pixel.map_or((String::new(), String::new()), |p| (p.u.to_string(), p.v.to_string()));
            let mode = match c.mode {
                Some(SubgoalMode::OnRay) => "on_ray",
                Some(SubgoalMode::FallbackClosest) => "fallback_closest",
                None => "none",
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                c.step, c.subgoal_node, c.alpha, u, v, mode, c.obstacle_points, c.expected_cost
            )?;
        }
        Ok(())
    }
}

/// Per-step seed for the planner and the contour sampler.
fn step_seed(seed: u64, step: usize, salt: u64) -> u64 {
    let mut x = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (step as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Sliding-window freeze detector.
#[derive(Debug, Clone)]
struct FreezeDetector {
    window: VecDeque<f64>,
    len: usize,
    threshold: f64,
    armed: bool,
}

impl FreezeDetector {
    fn new(len: usize, threshold: f64) -> Self {
        Self {
            window: VecDeque::with_capacity(len),
            len,
            threshold,
            armed: true,
        }
    }

    /// Feeds one commanded speed; returns true when a freeze event fires.
    fn push(&mut self, v: f64) -> bool {
        let v = v.abs();
        if self.window.len() == self.len {
            self.window.pop_front();
        }
        self.window.push_back(v);
        if v >= self.threshold {
            self.armed = true;
        }
        if self.armed && self.window.len() == self.len {
            let mean = self.window.iter().sum::<f64>() / self.len as f64;
            if mean < self.threshold {
                self.armed = false;
                return true;
            }
        }
        false
    }
}

/// Subgoal node `l_sg` hops along the shortest path, or the goal itself when
/// no path exists.
fn route_subgoal(graph: &TopoGraph, current: usize, goal: usize, l_sg: usize) -> Result<usize, EpisodeError> {
    match shortest_path(graph, current, goal) {
        Ok(path) => Ok(select_subgoal_node(&path, l_sg).unwrap_or(goal)),
        Err(GraphError::NoPath { .. }) => Ok(goal),
        Err(e) => Err(e.into()),
    }
}

/// Subgoal pixel and sampled obstacle pixels for one mask.
fn perceive(
    mask: &TraversabilityMask,
    cam: &CameraModel,
    alpha: f64,
    n_per_contour: usize,
    seed: u64,
) -> (Result<SubgoalPixel, SubgoalError>, ObstaclePointSet) {
    let subgoal = select_subgoal_pixel(mask, cam, alpha);
    if subgoal.is_err() {
        return (subgoal, ObstaclePointSet::default());
    }
    let contours = extract_contours(mask);
    (subgoal, sample_obstacle_points(&contours, cam, n_per_contour, seed))
}

/// What the planner sees from a given pose at the first step of an episode.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub mask: TraversabilityMask,
    pub subgoal_node: usize,
    pub alpha: f64,
    pub subgoal: Option<SubgoalPixel>,
    pub obstacle_pixels: ObstaclePointSet,
}

impl Snapshot {
    /// Grayscale rendering of the mask: blocked 0, traversable 160, sampled
    /// obstacle pixels 80 and a 5 px cross at the subgoal in white.
    pub fn overlay(&self) -> Vec<u8> {
        let (w, h) = (self.mask.width(), self.mask.height());
        let mut img: Vec<u8> = self.mask.bits().iter().map(|&b| if b { 160 } else { 0 }).collect();
        for p in &self.obstacle_pixels.points {
            img[p.v as usize * w + p.u as usize] = 80;
        }
        if let Some(sg) = self.subgoal {
            let (u, v) = (sg.p.u as i64, sg.p.v as i64);
            for d in -2..=2i64 {
                for (x, y) in [(u + d, v), (u, v + d)] {
                    if (0..w as i64).contains(&x) && (0..h as i64).contains(&y) {
                        img[y as usize * w + x as usize] = 255;
                    }
                }
            }
        }
        img
    }
}

/// Perception for `setup` with the robot placed at `pose`, using the same
/// steps and seeds as step 0 of [`run_episode`].
pub fn snapshot(setup: &EpisodeSetup<'_>, pose: Pose2) -> Result<Snapshot, EpisodeError> {
    setup.sim.validate()?;
    let graph = setup.graph;
    if graph.is_empty() {
        return Err(EpisodeError::Graph(GraphError::Empty));
    }
    let goal = setup.episode.goal_node.unwrap_or(graph.len() - 1);
    graph.node(goal)?;
    let world = match &setup.perturbation {
        Some(o) => setup.world.clone().with_obstacle(Obstacle { shape: o.shape.clone(), is_target: true })?,
        None => setup.world.clone().normalized()?,
    };
    let cam = world.camera;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let current = oracle_localize(&pose, graph, setup.sim.pose_scale, setup.sim.sigma_pos, &mut rng)?;
    let subgoal_node = route_subgoal(graph, current, goal, setup.episode.l_sg)?;
    let mask = MaskRenderer::new(cam).render(&world, &SimRobot { pose, cam });
    let yaw = oracle_yaw(&pose, graph.node(subgoal_node)?.phi, setup.sim.sigma_alpha, &mut rng);
    let (subgoal, obstacle_pixels) = perceive(&mask, &cam, yaw.alpha, setup.sim.n_per_contour, step_seed(setup.seed, 0, 1));
    let subgoal = match subgoal {
        Ok(sg) => Some(sg),
        Err(SubgoalError::NoTraversableRegion) => None,
        Err(e) => return Err(EpisodeError::Config(e.to_string())),
    };
    Ok(Snapshot { mask, subgoal_node, alpha: yaw.alpha, subgoal, obstacle_pixels })
}

pub fn run_episode(setup: &EpisodeSetup<'_>) -> Result<EpisodeMetrics, EpisodeError> {
    let cfg = &setup.episode;
    cfg.validate()?;
    setup.sim.validate()?;
    setup.mppi.validate()?;
    let graph = setup.graph;
    if graph.is_empty() {
        return Err(EpisodeError::Graph(GraphError::Empty));
    }
    let goal = cfg.goal_node.unwrap_or(graph.len() - 1);
    let goal_pose = graph.node(goal)?.pose;
    let scale = setup.sim.pose_scale;
    let goal_metric = [goal_pose[0] / scale, goal_pose[1] / scale];

    let world = match &setup.perturbation {
        Some(o) => setup.world.clone().with_obstacle(Obstacle { shape: o.shape.clone(), is_target: true })?,
        None => setup.world.clone().normalized()?,
    };
    let cam = world.camera;
    let renderer = MaskRenderer::new(cam);
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);

    let mut pose = world.start();
    let mut metrics = EpisodeMetrics::default();
    let mut freeze = FreezeDetector::new(cfg.t_freeze, cfg.v_freeze);
    let mut warm: Option<Vec<ControlInput>> = None;
    let mut subgoal_node = goal;
    let mut last_contact: Option<(i64, usize)> = None;

    for step in 0..cfg.max_steps {
        if step % cfg.reloc_period == 0 {
            let current = oracle_localize(&pose, graph, scale, setup.sim.sigma_pos, &mut rng)?;
            subgoal_node = route_subgoal(graph, current, goal, cfg.l_sg)?;
        }
        let robot = SimRobot { pose, cam };
        let mask = renderer.render(&world, &robot);
        let yaw = oracle_yaw(&pose, graph.node(subgoal_node)?.phi, setup.sim.sigma_alpha, &mut rng);

        let mut record = CostRecord {
            step,
            subgoal_node,
            alpha: yaw.alpha,
            subgoal_pixel: None,
            mode: None,
            obstacle_points: 0,
            expected_cost: 0.0,
        };
        let (subgoal, points) = perceive(&mask, &cam, yaw.alpha, setup.sim.n_per_contour, step_seed(setup.seed, step, 1));
        let control = match subgoal {
            Ok(sg) => {
                let obstacles = points.backproject(&cam);
                let ctx = CostContext { cam: &cam, subgoal: sg.p, obstacles: &obstacles };
                let mppi = MppiConfig { rng_seed: step_seed(setup.seed, step, 2), ..setup.mppi };
                let (out, _) = mppi_solve_with(&ctx, &mppi, warm.as_deref(), setup.execution)?;
                record.subgoal_pixel = Some(sg.p);
                record.mode = Some(sg.mode);
                record.obstacle_points = obstacles.len();
                record.expected_cost = out.expected_cost;
                warm = Some(out.nominal_sequence);
                out.control
            }
            Err(SubgoalError::NoTraversableRegion) => {
                // nothing safe in view: stand still
                warm = None;
                ControlInput::default()
            }
            Err(e @ SubgoalError::DimensionMismatch { .. }) => return Err(EpisodeError::Config(e.to_string())),
        };
        metrics.costs.push(record);

        let next = step_dynamics(RobotState::new(pose.x, pose.y, pose.theta), control, setup.mppi.dt);
        pose = Pose2::new(next.x, next.y, next.theta);
        let mut events = Vec::new();

        if let Some(c) = check_collision(&world, pose.position()) {
            let refractory = matches!(last_contact, Some((id, s)) if id == c.obstacle_id && s + 1 == step);
            if !refractory {
                let visible = is_obstacle_visible(&world, &SimRobot { pose, cam }, c.obstacle_id);
                if visible {
                    metrics.dc_count += 1;
                    let is_target = usize::try_from(c.obstacle_id)
                        .ok()
                        .and_then(|i| world.obstacles.get(i))
                        .is_some_and(|o| o.is_target);
                    if is_target {
                        metrics.target_dc_count += 1;
                    }
                    events.push(Event::Direct(c.obstacle_id));
                } else {
                    metrics.ic_count += 1;
                    events.push(Event::Indirect(c.obstacle_id));
                }
            }
            last_contact = Some((c.obstacle_id, step));
            let p = push_out(&world, pose.position());
            pose = Pose2::new(p[0], p[1], pose.theta);
            warm = None;
        }
        if freeze.push(control.v) {
            metrics.freeze_count += 1;
            events.push(Event::Freeze);
        }

        let at_goal = (pose.x - goal_metric[0]).hypot(pose.y - goal_metric[1]) <= cfg.d_goal;
        let lost = !at_goal && distance_to_graph(graph, scale, pose.position()) > cfg.d_lost;
        if at_goal {
            metrics.goal_reached = true;
            events.push(Event::Goal);
        } else if lost {
            metrics.lost = true;
            events.push(Event::Lost);
        }
        metrics.trajectory.push(TrajectoryRow {
            t: (step + 1) as f64 * setup.mppi.dt,
            state: pose,
            control,
            events,
        });
        metrics.steps = step + 1;
        if at_goal || lost {
            break;
        }
    }
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetrics {
    /// Average direct collisions per run.
    pub adc: f64,
    /// Average indirect collisions per run.
    pub aic: f64,
    /// Fraction of perturbation runs with at least one target direct collision.
    pub tdcr: f64,
    /// Average freezes per run.
    pub af: f64,
    /// Goal reaching rate.
    pub grr: f64,
}

pub fn compute_suite_metrics(runs: &[EpisodeSummary], perturbation_flags: &[bool]) -> Result<SuiteMetrics, EpisodeError> {
    if runs.is_empty() {
        return Err(EpisodeError::EmptySuite);
    }
    if runs.len() != perturbation_flags.len() {
        return Err(EpisodeError::LengthMismatch {
            runs: runs.len(),
            flags: perturbation_flags.len(),
        });
    }
    let n = runs.len() as f64;
    let avg = |f: fn(&EpisodeSummary) -> usize| runs.iter().map(f).sum::<usize>() as f64 / n;
    let perturbed: Vec<&EpisodeSummary> = runs.iter().zip(perturbation_flags).filter(|(_, &p)| p).map(|(r, _)| r).collect();
    let tdcr = if perturbed.is_empty() {
        0.0
    } else {
        perturbed.iter().filter(|r| r.target_dc_count >= 1).count() as f64 / perturbed.len() as f64
    };
    Ok(SuiteMetrics {
        adc: avg(|r| r.dc_count),
        aic: avg(|r| r.ic_count),
        tdcr,
        af: avg(|r| r.freeze_count),
        grr: runs.iter().filter(|r| r.goal_reached).count() as f64 / n,
    })
}

/// Trial layout: baseline runs, then `trials_per_perturbation` runs for each
/// target obstacle in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub baseline_trials: usize,
    pub trials_per_perturbation: usize,
    pub perturbations: Vec<Obstacle>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            baseline_trials: 3,
            trials_per_perturbation: 3,
            perturbations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub index: usize,
    pub seed: u64,
    /// Index into the perturbation list, `None` for baseline runs.
    pub perturbation: Option<usize>,
    #[serde(flatten)]
    pub summary: EpisodeSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub metrics: SuiteMetrics,
    pub runs: Vec<SuiteRun>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data") + "\n"
    }
}

/// Runs every trial of the suite, trial `i` with seed `base.seed + i`.
///
/// Trials are independent and may run in parallel; results keep trial order.
pub fn run_suite(base: &EpisodeSetup<'_>, suite: &SuiteConfig, trial_execution: Execution) -> Result<SuiteReport, EpisodeError> {
    let mut layout: Vec<Option<usize>> = vec![None; suite.baseline_trials];
    for p in 0..suite.perturbations.len() {
        layout.extend(std::iter::repeat_n(Some(p), suite.trials_per_perturbation));
    }
    if layout.is_empty() {
        return Err(EpisodeError::EmptySuite);
    }
    // inner rollouts stay sequential when trials already fan out
    let inner = if trial_execution.is_parallel() { Execution::Sequential } else { base.execution };
    let results = trial_execution.map_indexed(layout.len(), |i| {
        let setup = EpisodeSetup {
            seed: base.seed.wrapping_add(i as u64),
            perturbation: layout[i].map(|p| suite.perturbations[p].clone()),
            execution: inner,
            ..base.clone()
        };
        run_episode(&setup).map(|m| m.summary())
    });
    let mut runs = Vec::with_capacity(layout.len());
    for (i, r) in results.into_iter().enumerate() {
        runs.push(SuiteRun {
            index: i,
            seed: base.seed.wrapping_add(i as u64),
            perturbation: layout[i],
            summary: r?,
        });
    }
    let summaries: Vec<EpisodeSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let flags: Vec<bool> = layout.iter().map(Option::is_some).collect();
    Ok(SuiteReport {
        metrics: compute_suite_metrics(&summaries, &flags)?,
        runs,
    })
}
