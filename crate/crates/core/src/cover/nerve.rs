use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{ObjectGraph, ObjectId};

/// Vertices, edges and triangles of a nerve; higher simplices are not kept.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Nerve {
    pub edges: Vec<(usize, usize)>,
    pub triangles: Vec<(usize, usize, usize)>,
}

impl Nerve {
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == node {
                Some(b)
            } else if b == node {
                Some(a)
            } else {
                None
            }
        })
    }
}

/// Edge `(i, j)` for every pair of overlapping nodes and triangle `(i, j, k)`
/// for every non-empty triple intersection, all with ascending indices.
pub fn build_nerve(nodes: &[BTreeSet<ObjectId>]) -> Nerve {
    let k = nodes.len();
    let mut nerve = Nerve::default();
    for i in 0..k {
        for j in i + 1..k {
            let common: BTreeSet<ObjectId> = nodes[i].intersection(&nodes[j]).copied().collect();
            if common.is_empty() {
                continue;
            }
            nerve.edges.push((i, j));
            for (l, node) in nodes.iter().enumerate().skip(j + 1) {
                if common.iter().any(|id| node.contains(id)) {
                    nerve.triangles.push((i, j, l));
                }
            }
        }
    }
    nerve.triangles.sort_unstable();
    nerve
}

/// No edge of `graph` joins an object only in `vi` to an object only in `vj`.
pub fn check_joint_normal<G: ObjectGraph + ?Sized>(
    graph: &G,
    vi: &BTreeSet<ObjectId>,
    vj: &BTreeSet<ObjectId>,
) -> bool {
    let only_i: Vec<ObjectId> = vi.difference(vj).copied().collect();
    let only_j: Vec<ObjectId> = vj.difference(vi).copied().collect();
    !only_i
        .iter()
        .any(|&s| only_j.iter().any(|&t| graph.adjacent(s, t)))
}

pub fn is_connected(edges: &[(usize, usize)], num_nodes: usize) -> bool {
    if num_nodes == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); num_nodes];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; num_nodes];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == num_nodes
}
