use super::{GraphError, TopoGraph};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Ordered node ids from the start node to the target.
pub type PathSequence = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Label {
    cost: f64,
    hops: usize,
}

impl Label {
    fn cmp_key(&self, other: &Label) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.hops.cmp(&other.hops))
    }
}

#[derive(Debug, PartialEq)]
struct Entry {
    label: Label,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, hops, node)
        other
            .label
            .cmp_key(&self.label)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn trace(pred: &[Option<usize>], mut node: usize) -> Vec<usize> {
    let mut p = vec![node];
    while let Some(prev) = pred[node] {
        p.push(prev);
        node = prev;
    }
    p.reverse();
    p
}

/// Dijkstra over the directed graph.
///
/// Among minimum-cost paths the one with fewer hops wins, then the
/// lexicographically smaller node sequence. Path costs are accumulated from
/// the source in edge order.
pub fn shortest_path(graph: &TopoGraph, from: usize, to: usize) -> Result<PathSequence, GraphError> {
    let n = graph.len();
    for id in [from, to] {
        if id >= n {
            return Err(GraphError::UnknownNode(id));
        }
    }
    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[from] = Some(Label { cost: 0.0, hops: 0 });
    heap.push(Entry {
        label: Label { cost: 0.0, hops: 0 },
        node: from,
    });

    while let Some(Entry { label, node }) = heap.pop() {
        if done[node] || best[node] != Some(label) {
            continue;
        }
        done[node] = true;
        if node == to {
            break;
        }
        for e in graph.out_edges(node) {
            if done[e.to] {
                continue;
            }
            let cand = Label {
                cost: label.cost + e.weight,
                hops: label.hops + 1,
            };
            let better = match best[e.to] {
                None => true,
                Some(cur) => match cand.cmp_key(&cur) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let mut via = trace(&pred, node);
                        via.push(e.to);
                        via < trace(&pred, e.to)
                    }
                },
            };
            if better {
                best[e.to] = Some(cand);
                pred[e.to] = Some(node);
                heap.push(Entry { label: cand, node: e.to });
            }
        }
    }

    if !done[to] {
        return Err(GraphError::NoPath { from, to });
    }
    Ok(trace(&pred, to))
}

/// Sum of edge weights along `path`, accumulated from the first node.
pub fn path_cost(graph: &TopoGraph, path: &[usize]) -> Option<f64> {
    let mut cost = 0.0;
    for w in path.windows(2) {
        let e = graph.out_edges(w[0]).find(|e| e.to == w[1])?;
        cost += e.weight;
    }
    Some(cost)
}
