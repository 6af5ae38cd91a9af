//! Run configuration: one TOML file with a section per module.
//!
//! ```toml
//! seed = 0
//! world_file = "corridor.json"   # optional, built-in corridor otherwise
//!
//! [mppi]
//! lambda = 1000.0
//!
//! [episode]
//! max_steps = 400
//! ```
//!
//! Missing keys take their defaults. Overrides use dotted keys such as
//! `mppi.lambda=1000` and are applied to the parsed document before it is
//! deserialized, so they go through the same checks as the file.

use crate::controller::MppiConfig;
use crate::episode::{EpisodeConfig, EpisodeSetup, SimParams, SuiteConfig};
use crate::exec::Execution;
use crate::geometry::CameraModel;
use crate::scenarios::{self, ScenarioError};
use crate::simworld::{Obstacle, RecordParams, WorldError, WorldModel};
use crate::topograph::{build_graph, GraphBuildParams, GraphError, TopoGraph};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    /// A value failed to parse or validate; `path` is the dotted key.
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

impl ConfigError {
    fn invalid(path: impl Into<String>, reason: impl ToString) -> Self {
        ConfigError::Invalid { path: path.into(), reason: reason.to_string() }
    }
}

/// Failures while materializing the world and graph a config points at.
#[derive(Debug, Error)]
pub enum SetupError {
    #[error("world {path}: {source}")]
    WorldFile { path: PathBuf, source: WorldError },
    #[error("graph {path}: {source}")]
    GraphFile { path: PathBuf, source: GraphError },
    #[error("world: {0}")]
    World(#[from] WorldError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("expert graph: {0}")]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// World JSON; the built-in corridor when absent.
    pub world_file: Option<PathBuf>,
    /// Graph JSON; built from the world's expert route when absent.
    pub graph_file: Option<PathBuf>,
    /// Target obstacle injected by single runs.
    pub perturbation: Option<Obstacle>,
    /// Replaces the world's camera when present.
    pub camera: Option<CameraModel>,
    pub record: RecordParams,
    pub graph: GraphBuildParams,
    pub mppi: MppiConfig,
    pub episode: EpisodeConfig,
    pub sim: SimParams,
    pub suite: SuiteConfig,
}

impl RunConfig {
    /// Parses and validates a TOML document after applying `overrides`.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string().trim_end().replace('\n', " ")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
            let path = e.path().to_string();
            let reason = e.into_inner().to_string();
            let reason = reason.lines().next().unwrap_or_default().to_string();
            ConfigError::invalid(if path == "." { String::from("<root>") } else { path }, reason)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative world and graph paths are taken relative
    /// to the file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text, overrides)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.world_file, &mut cfg.graph_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Defaults plus overrides, for runs without a config file.
    pub fn from_overrides(overrides: &[String]) -> Result<Self, ConfigError> {
        Self::from_toml("", overrides)
    }

    /// Full effective configuration; loading it back gives an equal value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config holds only TOML-representable values")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if i64::try_from(self.seed).is_err() {
            return Err(ConfigError::invalid("seed", "must fit in a signed 64-bit integer"));
        }
        if let Some(cam) = &self.camera {
            cam.validate().map_err(|e| ConfigError::invalid("camera", e))?;
        }
        if let Some(o) = &self.perturbation {
            o.shape.clone().normalized().map_err(|e| ConfigError::invalid("perturbation", e))?;
        }
        let r = &self.record;
        for (key, ok) in [
            ("dt", r.dt > 0.0),
            ("speed", r.speed > 0.0),
            ("lookahead", r.lookahead > 0.0),
            ("max_turn_rate", r.max_turn_rate > 0.0),
        ] {
            if !ok {
                return Err(ConfigError::invalid(format!("record.{key}"), "must be > 0"));
            }
        }
        if r.sample_every == 0 {
            return Err(ConfigError::invalid("record.sample_every", "must be >= 1"));
        }
        self.graph.validate().map_err(|e| ConfigError::invalid("graph", e))?;
        if let Err(crate::controller::ControllerError::InvalidConfig { field, reason }) = self.mppi.validate() {
            return Err(ConfigError::invalid(format!("mppi.{field}"), reason));
        }
        self.episode.validate().map_err(|e| prefixed("episode", e))?;
        self.sim.validate().map_err(|e| prefixed("sim", e))?;
        for (i, o) in self.suite.perturbations.iter().enumerate() {
            o.shape.clone().normalized().map_err(|e| ConfigError::invalid(format!("suite.perturbations[{i}]"), e))?;
        }
        Ok(())
    }

    /// The configured world, with the camera override applied.
    pub fn load_world(&self) -> Result<WorldModel, SetupError> {
        let mut world = match &self.world_file {
            Some(p) => WorldModel::load(p).map_err(|source| SetupError::WorldFile { path: p.clone(), source })?,
            None => scenarios::corridor_world(),
        };
        if let Some(cam) = self.camera {
            world.camera = cam;
            world.validate()?;
        }
        Ok(world)
    }

    /// The configured graph, or one built from the world's expert route.
    pub fn load_graph(&self, world: &WorldModel) -> Result<TopoGraph, SetupError> {
        match &self.graph_file {
            Some(p) => TopoGraph::load(p).map_err(|source| SetupError::GraphFile { path: p.clone(), source }),
            None => {
                let rec = crate::simworld::record_expert(world, &world.expert_waypoints, self.record, self.sim.pose_scale)
                    .map_err(ScenarioError::from)?;
                Ok(build_graph(&rec.positions, self.graph)?)
            }
        }
    }

    pub fn episode_setup<'a>(&self, world: &'a WorldModel, graph: &'a TopoGraph) -> EpisodeSetup<'a> {
        EpisodeSetup {
            world,
            graph,
            episode: self.episode,
            mppi: self.mppi,
            sim: self.sim,
            seed: self.seed,
            perturbation: self.perturbation.clone(),
            execution: Execution::Parallel,
        }
    }
}

fn prefixed(section: &str, e: crate::episode::EpisodeError) -> ConfigError {
    match e {
        crate::episode::EpisodeError::Config(msg) => match msg.split_once(": ") {
            Some((field, reason)) => ConfigError::invalid(format!("{section}.{field}"), reason),
            None => ConfigError::invalid(section, msg),
        },
        other => ConfigError::invalid(section, other),
    }
}

/// Applies `a.b.c=value`. The value is read as a TOML value when it parses as
/// one and as a bare string otherwise, so `world_file=maps/a.json` works
/// without quotes.
fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::invalid(spec, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::invalid(key, "empty key segment"));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = parts.split_last().expect("at least one segment");
    let mut table = doc;
    for (i, p) in parents.iter().enumerate() {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::invalid(parts[..=i].join("."), "not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
