use ndarray::Array2;

use crate::envs::EmbodimentSpec;
use crate::{Error, Result};

/// Common feature dimension: joint descriptors have 4 entries, foot
/// descriptors are zero-padded up from 2.
pub const D_FEAT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Torso,
    Joint,
    Foot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorphNode {
    pub kind: NodeKind,
    pub features: [f64; D_FEAT],
}

/// Undirected morphology graph: one torso node, one node per joint, one per
/// foot, with uniform node weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphGraph {
    pub nodes: Vec<MorphNode>,
    pub edges: Vec<(usize, usize)>,
    pub node_weights: Vec<f64>,
}

impl MorphGraph {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Builds the morphology graph of a spec: node 0 is the torso (zero
/// features), then one node per joint, then one per foot. The torso connects
/// to the root joint of each limb, consecutive joints of a limb are chained,
/// and each foot hangs off its limb's terminal joint.
pub fn build_graph(spec: &EmbodimentSpec) -> MorphGraph {
    let n = 1 + spec.n_joints + spec.n_feet;
    let mut nodes = Vec::with_capacity(n);
    nodes.push(MorphNode { kind: NodeKind::Torso, features: [0.0; D_FEAT] });
    for j in 0..spec.n_joints {
        nodes.push(MorphNode { kind: NodeKind::Joint, features: spec.descriptor_joint(j) });
    }
    for f in 0..spec.n_feet {
        let d = spec.descriptor_foot(f);
        nodes.push(MorphNode { kind: NodeKind::Foot, features: [d[0], d[1], 0.0, 0.0] });
    }
    let joint_node = |j: usize| 1 + j;
    let foot_node = |f: usize| 1 + spec.n_joints + f;
    let mut edges = Vec::new();
    for limb in &spec.limbs {
        edges.push((0, joint_node(limb[0])));
        for pair in limb.windows(2) {
            edges.push((joint_node(pair[0]), joint_node(pair[1])));
        }
    }
    for f in 0..spec.n_feet {
        edges.push((joint_node(spec.foot_joint[f]), foot_node(f)));
    }
    let w = 1.0 / n as f64;
    MorphGraph { nodes, edges, node_weights: vec![w; n] }
}

/// All-pairs hop-count shortest paths (unit edge weights) by BFS from every
/// node.
pub fn shortest_paths(g: &MorphGraph) -> Result<Array2<f64>> {
    let n = g.n();
    let adj = g.adjacency();
    let mut dist = Array2::from_elem((n, n), f64::INFINITY);
    for start in 0..n {
        dist[(start, start)] = 0.0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[(start, v)].is_infinite() {
                    dist[(start, v)] = dist[(start, u)] + 1.0;
                    queue.push_back(v);
                }
            }
        }
    }
    if dist.iter().any(|d| d.is_infinite()) {
        return Err(Error::Graph("shortest_paths: graph is disconnected".into()));
    }
    Ok(dist)
}
