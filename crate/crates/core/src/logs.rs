//! Reading episode logs back and turning them into plot data.
//!
//! Plot data is plain whitespace-separated columns. Blocks are separated by
//! two blank lines and start with a `#` header naming the columns, which is
//! what gnuplot's `index` and most loaders expect.

use crate::episode::{CostRecord, Event, TrajectoryRow};
use crate::controller::ControlInput;
use crate::geometry::{PixelPoint, Pose2};
use crate::simworld::WorldModel;
use crate::subgoal::SubgoalMode;
use std::fmt::Write as _;
use std::io::BufRead;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

const TRAJECTORY_HEADER: &str = "t,x,y,theta,v,w,event";
const COSTS_HEADER: &str = "step,subgoal_node,alpha,sg_u,sg_v,mode,obstacle_points,expected_cost";

fn records<R: BufRead>(r: R, header: &str, columns: usize) -> Result<Vec<(usize, Vec<String>)>, LogError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if i == 0 {
            if line.trim_end() != header {
                return Err(LogError::Parse { line: 1, reason: format!("expected header {header:?}") });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != columns {
            return Err(LogError::Parse { line: line_no, reason: format!("expected {columns} fields, got {}", fields.len()) });
        }
        out.push((line_no, fields));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T, LogError> {
    s.parse().map_err(|_| LogError::Parse { line, reason: format!("bad {name} {s:?}") })
}

/// Parses a log written by `EpisodeMetrics::write_trajectory_csv`.
pub fn read_trajectory_csv<R: BufRead>(r: R) -> Result<Vec<TrajectoryRow>, LogError> {
    records(r, TRAJECTORY_HEADER, 7)?
        .into_iter()
        .map(|(line, f)| {
            let events = if f[6].is_empty() {
                Vec::new()
            } else {
                f[6].split('|')
                    .map(|e| e.parse::<Event>().map_err(|reason| LogError::Parse { line, reason }))
                    .collect::<Result<_, _>>()?
            };
            Ok(TrajectoryRow {
                t: field(line, "t", &f[0])?,
                state: Pose2::new(field(line, "x", &f[1])?, field(line, "y", &f[2])?, field(line, "theta", &f[3])?),
                control: ControlInput::new(field(line, "v", &f[4])?, field(line, "w", &f[5])?),
                events,
            })
        })
        .collect()
}

/// Parses a log written by `EpisodeMetrics::write_costs_csv`.
pub fn read_costs_csv<R: BufRead>(r: R) -> Result<Vec<CostRecord>, LogError> {
    records(r, COSTS_HEADER, 8)?
        .into_iter()
        .map(|(line, f)| {
            let subgoal_pixel = match (f[3].as_str(), f[4].as_str()) {
                ("", "") => None,
                (u, v) => Some(PixelPoint::new(field(line, "sg_u", u)?, field(line, "sg_v", v)?)),
            };
            let mode = match f[5].as_str() {
                "on_ray" => Some(SubgoalMode::OnRay),
                "fallback_closest" => Some(SubgoalMode::FallbackClosest),
                "none" => None,
                other => return Err(LogError::Parse { line, reason: format!("bad mode {other:?}") }),
            };
            Ok(CostRecord {
                step: field(line, "step", &f[0])?,
                subgoal_node: field(line, "subgoal_node", &f[1])?,
                alpha: field(line, "alpha", &f[2])?,
                subgoal_pixel,
                mode,
                obstacle_points: field(line, "obstacle_points", &f[6])?,
                expected_cost: field(line, "expected_cost", &f[7])?,
            })
        })
        .collect()
}

/// Trajectory polyline from the start pose, then the bounds and every
/// obstacle outline as separate blocks.
pub fn plot_trajectory_data(world: &WorldModel, trajectory: &[TrajectoryRow]) -> String {
    let mut out = String::from("# trajectory: x y\n");
    let start = world.start();
    let _ = writeln!(out, "{} {}", start.x, start.y);
    for r in trajectory {
        let _ = writeln!(out, "{} {}", r.state.x, r.state.y);
    }
    out.push_str("\n\n# bounds: x y\n");
    for p in world.bounds.outline() {
        let _ = writeln!(out, "{} {}", p[0], p[1]);
    }
    for (i, o) in world.obstacles.iter().enumerate() {
        let _ = writeln!(out, "\n\n# obstacle {i} target={}: x y", o.is_target);
        for p in o.shape.outline(48) {
            let _ = writeln!(out, "{} {}", p[0], p[1]);
        }
    }
    out
}

/// Per-step cost traces, one row per planner call.
pub fn plot_cost_data(costs: &[CostRecord]) -> String {
    let mut out = String::from("# costs: step expected_cost obstacle_points alpha subgoal_node\n");
    for c in costs {
        let _ = writeln!(out, "{} {} {} {} {}", c.step, c.expected_cost, c.obstacle_points, c.alpha, c.subgoal_node);
    }
    out
}
