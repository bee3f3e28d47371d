//! Overlapping sub-collections ("cover nodes") of a map graph and the
//! topological checks on their nerve.

mod embed;
mod expand;
mod homology;
mod kmeans;
mod nerve;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

pub use embed::spectral_embed;
pub use expand::{build_cover, expand_and_verify};
pub use homology::{gf2_rank, h1_rank};
pub use kmeans::cluster;
pub use nerve::{build_nerve, check_joint_normal, is_connected, Nerve};

use crate::error::{Error, Result};
use crate::graph::{ObjectGraph, ObjectId};

/// Outcome of verifying a cover against the sufficiency conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    /// Union of the nodes is the whole vertex set.
    pub covers_all: bool,
    pub connected: bool,
    /// Rank of H1 of the nerve's 2-skeleton over Z2.
    pub h1_rank: usize,
    /// Every overlapping pair of nodes is joint normal. Reported only; it
    /// does not gate acceptance.
    pub joint_normal: bool,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.covers_all && self.connected && self.h1_rank == 0
    }
}

/// Cover nodes with their nerve (up to triangles) and verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverComplex {
    nodes: Vec<BTreeSet<ObjectId>>,
    nerve: Nerve,
    verdict: Verdict,
}

impl CoverComplex {
    /// Builds the nerve of `nodes` and verifies it against `graph`.
    pub fn new<G: ObjectGraph + ?Sized>(nodes: Vec<BTreeSet<ObjectId>>, graph: &G) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Structural("cover has no nodes".into()));
        }
        let all: BTreeSet<ObjectId> = graph.object_ids().into_iter().collect();
        if let Some(stray) = nodes.iter().flatten().find(|id| !all.contains(id)) {
            return Err(Error::Structural(alloc::format!("cover mentions unknown object {stray}")));
        }
        let nerve = build_nerve(&nodes);
        let covered: BTreeSet<ObjectId> = nodes.iter().flatten().copied().collect();
        let h1 = h1_rank(&nerve.edges, &nerve.triangles, nodes.len())?;
        let joint_normal = nerve
            .edges
            .iter()
            .all(|&(i, j)| check_joint_normal(graph, &nodes[i], &nodes[j]));
        let verdict = Verdict {
            covers_all: covered == all,
            connected: is_connected(&nerve.edges, nodes.len()),
            h1_rank: h1,
            joint_normal,
        };
        Ok(Self { nodes, nerve, verdict })
    }

    pub fn nodes(&self) -> &[BTreeSet<ObjectId>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nerve(&self) -> &Nerve {
        &self.nerve
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    /// Nodes containing both objects, in ascending node order.
    pub fn nodes_containing(&self, a: ObjectId, b: ObjectId) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.contains(&a) && n.contains(&b))
            .map(|(k, _)| k)
    }

    pub fn co_resident(&self, a: ObjectId, b: ObjectId) -> bool {
        self.nodes_containing(a, b).next().is_some()
    }
}

/// Parameters of the greedy cover construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverConfig {
    /// Number of cover nodes.
    pub k: usize,
    /// Expansion radius in embedding space; `None` uses a tenth of the
    /// embedding's coordinate range.
    pub epsilon: Option<f64>,
    pub max_rounds: usize,
    pub seed: u64,
    /// Embedding dimension (Fiedler vector only by default).
    pub dims: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { k: 3, epsilon: None, max_rounds: 10, seed: 0, dims: 1 }
    }
}

impl CoverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config("cover needs at least two nodes".into()));
        }
        if matches!(self.epsilon, Some(e) if e.is_nan() || e < 0.0) {
            return Err(Error::Config("epsilon must be non-negative".into()));
        }
        if self.dims == 0 {
            return Err(Error::Config("embedding needs at least one dimension".into()));
        }
        Ok(())
    }
}
