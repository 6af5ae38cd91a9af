//! Topological graph built from a recorded pose sequence: construction,
//! localization, shortest paths and subgoal-node selection.
//!
//! Poses live in a scale-free frame. Both edge criteria are scale-invariant:
//! distances are compared against a multiple of the mean step length, and
//! headings do not depend on scale.

mod path;

pub use path::{path_cost, shortest_path, PathSequence};

use crate::geometry::wrap_angle;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("at least 2 poses are required, got {0}")]
    TooFewPoses(usize),
    #[error("all consecutive poses coincide; mean step length is undefined")]
    DegenerateTrajectory,
    #[error("invalid build parameters: {0}")]
    InvalidParams(String),
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("no path from node {from} to node {to}")]
    NoPath { from: usize, to: usize },
    #[error("descriptor localization requested but node {0} has no descriptor")]
    MissingDescriptors(usize),
    #[error("query descriptor has length {got}, nodes use {expected}")]
    DescriptorLength { expected: usize, got: usize },
    #[error("graph is empty")]
    Empty,
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Position in the scale-free world frame plus the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub z: [f64; 2],
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoNode {
    pub id: usize,
    pub pose: [f64; 2],
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<Vec<f64>>,
}

impl TopoNode {
    pub fn sample(&self) -> PoseSample {
        PoseSample {
            z: self.pose,
            phi: self.phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopoEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphBuildParams {
    /// Euclidean criterion coefficient applied to the mean step length.
    pub rho: f64,
    /// Maximum wrapped heading difference (rad).
    pub phi_max: f64,
    /// Keep every k-th pose.
    pub downsample_stride: usize,
}

impl Default for GraphBuildParams {
    fn default() -> Self {
        Self {
            rho: 2.0,
            phi_max: PI / 4.0,
            downsample_stride: 1,
        }
    }
}

impl GraphBuildParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(GraphError::InvalidParams("rho must be positive".into()));
        }
        if !(self.phi_max > 0.0 && self.phi_max <= PI) {
            return Err(GraphError::InvalidParams("phi_max must lie in (0, pi]".into()));
        }
        if self.downsample_stride == 0 {
            return Err(GraphError::InvalidParams("downsample_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoGraph {
    pub nodes: Vec<TopoNode>,
    pub edges: Vec<TopoEdge>,
    pub build_params: GraphBuildParams,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

/// Headings of consecutive displacements.
///
/// A zero-length step inherits the previous heading; leading zero-length
/// steps take the first non-degenerate heading after them. The last pose
/// repeats the heading of the one before it.
pub fn compute_relative_directions(positions: &[[f64; 2]]) -> Result<Vec<f64>, GraphError> {
    let n = positions.len();
    if n < 2 {
        return Err(GraphError::TooFewPoses(n));
    }
    let raw: Vec<Option<f64>> = positions
        .windows(2)
        .map(|w| {
            let dx = w[1][0] - w[0][0];
            let dy = w[1][1] - w[0][1];
            let len = dx.hypot(dy);
            (len > 0.0).then(|| wrap_angle((dy / len).atan2(dx / len)))
        })
        .collect();
    let first = raw.iter().flatten().next().copied().unwrap_or(0.0);
    let mut phi = Vec::with_capacity(n);
    let mut prev = first;
    for r in raw {
        prev = r.unwrap_or(prev);
        phi.push(prev);
    }
    phi.push(prev);
    Ok(phi)
}

/// `min(|a - b|, 2pi - |a - b|)` for headings in `(-pi, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % (2.0 * PI);
    d.min(2.0 * PI - d)
}

fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Indices kept by a keep-every-k downsampling; the final pose is always kept.
pub fn downsample_indices(n: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if n > 0 && idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

/// Mean of the non-zero distances between consecutive poses.
pub fn mean_step_length(positions: &[[f64; 2]]) -> Option<f64> {
    let steps: Vec<f64> = positions
        .windows(2)
        .map(|w| euclid(w[0], w[1]))
        .filter(|&d| d > 0.0)
        .collect();
    (!steps.is_empty()).then(|| steps.iter().sum::<f64>() / steps.len() as f64)
}

pub fn build_graph(positions: &[[f64; 2]], params: GraphBuildParams) -> Result<TopoGraph, GraphError> {
    params.validate()?;
    let z: Vec<[f64; 2]> = downsample_indices(positions.len(), params.downsample_stride)
        .into_iter()
        .map(|i| positions[i])
        .collect();
    let phi = compute_relative_directions(&z)?;
    let mu = mean_step_length(&z).ok_or(GraphError::DegenerateTrajectory)?;
    let radius = params.rho * mu;

    let mut edges = Vec::new();
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let d = euclid(z[i], z[j]);
            let feasible = d < radius && angular_distance(phi[i], phi[j]) < params.phi_max;
            if feasible || j == i + 1 {
                edges.push(TopoEdge { from: i, to: j, weight: d });
            }
        }
    }
    let nodes = z
        .iter()
        .zip(&phi)
        .enumerate()
        .map(|(id, (&pose, &phi))| TopoNode {
            id,
            pose,
            phi,
            descriptor: None,
        })
        .collect();
    TopoGraph::from_parts(nodes, edges, params)
}

impl TopoGraph {
    pub fn from_parts(
        nodes: Vec<TopoNode>,
        edges: Vec<TopoEdge>,
        build_params: GraphBuildParams,
    ) -> Result<Self, GraphError> {
        let mut g = Self {
            nodes,
            edges,
            build_params,
            adjacency: Vec::new(),
        };
        g.validate()?;
        g.reindex();
        Ok(g)
    }

    fn validate(&self) -> Result<(), GraphError> {
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(GraphError::Malformed(format!("node at position {i} has id {}", node.id)));
            }
        }
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                return Err(GraphError::Malformed(format!("edge {}->{} out of range", e.from, e.to)));
            }
            if e.from >= e.to {
                return Err(GraphError::Malformed(format!("edge {}->{} is not forward", e.from, e.to)));
            }
            if !(e.weight >= 0.0) {
                return Err(GraphError::Malformed(format!("edge {}->{} has negative weight", e.from, e.to)));
            }
        }
        Ok(())
    }

    fn reindex(&mut self) {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.from].push(k);
        }
        self.adjacency = adj;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> Result<&TopoNode, GraphError> {
        self.nodes.get(id).ok_or(GraphError::UnknownNode(id))
    }

    /// Outgoing edges of `id`.
    pub fn out_edges(&self, id: usize) -> impl Iterator<Item = &TopoEdge> {
        self.adjacency
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&k| &self.edges[k])
    }

    pub fn edge_set(&self) -> std::collections::BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }

    pub fn set_descriptors(&mut self, descriptors: Vec<Vec<f64>>) -> Result<(), GraphError> {
        if descriptors.len() != self.nodes.len() {
            return Err(GraphError::Malformed("one descriptor per node is required".into()));
        }
        for (node, d) in self.nodes.iter_mut().zip(descriptors) {
            node.descriptor = Some(d);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, GraphError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        let g: TopoGraph = serde_json::from_str(s)?;
        Self::from_parts(g.nodes, g.edges, g.build_params)
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// How the current node is found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalizationQuery<'a> {
    /// Appearance descriptor of the current observation (cosine similarity).
    Descriptor(&'a [f64]),
    /// Position expressed in the graph frame (nearest node).
    Position([f64; 2]),
}

/// Returns the best-matching node; ties go to the smallest id.
pub fn localize(graph: &TopoGraph, query: LocalizationQuery<'_>) -> Result<usize, GraphError> {
    if graph.is_empty() {
        return Err(GraphError::Empty);
    }
    match query {
        LocalizationQuery::Position(p) => {
            let mut best = (f64::INFINITY, 0);
            for n in &graph.nodes {
                let d = euclid(n.pose, p);
                if d < best.0 {
                    best = (d, n.id);
                }
            }
            Ok(best.1)
        }
        LocalizationQuery::Descriptor(q) => {
            let qn = norm(q);
            let mut best = (f64::NEG_INFINITY, 0);
            for n in &graph.nodes {
                let d = n.descriptor.as_ref().ok_or(GraphError::MissingDescriptors(n.id))?;
                if d.len() != q.len() {
                    return Err(GraphError::DescriptorLength {
                        expected: d.len(),
                        got: q.len(),
                    });
                }
                let denom = qn * norm(d);
                let sim = if denom > 0.0 {
                    d.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / denom
                } else {
                    0.0
                };
                if sim > best.0 {
                    best = (sim, n.id);
                }
            }
            Ok(best.1)
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Seam for place recognition backends.
pub trait Localizer {
    fn localize(&mut self, graph: &TopoGraph) -> Result<usize, GraphError>;
}

/// Node `l_sg` hops along the path, clamped to the final node.
pub fn select_subgoal_node(path: &[usize], l_sg: usize) -> Option<usize> {
    if path.is_empty() {
        return None;
    }
    Some(path[l_sg.min(path.len() - 1)])
}
