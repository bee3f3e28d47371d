use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::AdmmSolution;
use crate::block::BlockMatrix;
use crate::cover::CoverComplex;
use crate::error::{Error, Result};
use crate::graph::{MapGraph, ObjectId};

/// Map between two objects assembled from the node solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHop {
    pub map: DMatrix<f64>,
    /// The objects share a node and `map` is that node's block.
    pub direct: bool,
    /// Number of intermediate objects that contributed a composite.
    pub intermediates: usize,
}

impl OneHop {
    /// No node holds both objects and no intermediate links them.
    pub fn is_empty(&self) -> bool {
        !self.direct && self.intermediates == 0
    }
}

/// Map `a -> b` through intermediate objects when `a` and `b` share no node.
///
/// Every object `k` sharing a node with `a` and a node with `b` votes with
/// the composite of the rounded blocks `a -> k` and `k -> b`; each point of
/// `a` maps to its most-voted target (lowest index on ties) if it got at
/// least one vote.
pub fn compose_one_hop(sol: &AdmmSolution, cover: &CoverComplex, a: ObjectId, b: ObjectId) -> Result<OneHop> {
    if let Some(map) = sol.rounded_block(a, b) {
        return Ok(OneHop { map, direct: true, intermediates: 0 });
    }
    let points = |id: ObjectId| {
        sol.nodes
            .iter()
            .find_map(|n| n.rounded.layout().position(id).map(|s| n.rounded.layout().points(s)))
            .ok_or_else(|| Error::Structural(alloc::format!("object {id} is in no solved node")))
    };
    let (ma, mb) = (points(a)?, points(b)?);
    let candidates: Vec<ObjectId> = cover.nodes().iter().flatten().copied().collect::<alloc::collections::BTreeSet<_>>().into_iter().collect();

    let mut votes = DMatrix::<f64>::zeros(ma, mb);
    let mut intermediates = 0;
    for k in candidates.into_iter().filter(|&k| k != a && k != b) {
        let (Some(ak), Some(kb)) = (sol.rounded_block(a, k), sol.rounded_block(k, b)) else {
            continue;
        };
        votes += ak * kb;
        intermediates += 1;
    }
    let mut map = DMatrix::zeros(ma, mb);
    for r in 0..ma {
        let row = votes.row(r);
        let (best, count) = row
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (c, &v)| if v > acc.1 { (c, v) } else { acc });
        if count >= 1.0 {
            map[(r, best)] = 1.0;
        }
    }
    Ok(OneHop { map, direct: false, intermediates })
}

/// Map graph over the objects of `x` with every off-diagonal block observed.
pub fn node_graph(x: &BlockMatrix) -> Result<MapGraph> {
    let layout = x.layout();
    let mut g = MapGraph::new();
    for (id, m) in layout.entries() {
        g.add_object(*id, *m)?;
    }
    for s in 0..layout.len() {
        for t in s + 1..layout.len() {
            g.set_block(layout.id(s), layout.id(t), x.block(s, t).into_owned())?;
        }
    }
    Ok(g)
}

/// Union of map graphs: a pair observed in several graphs keeps a
/// correspondence if any of them has it.
pub fn union_graphs<'a>(graphs: impl IntoIterator<Item = &'a MapGraph>) -> Result<MapGraph> {
    let mut g = MapGraph::new();
    let mut blocks: BTreeMap<(ObjectId, ObjectId), DMatrix<f64>> = BTreeMap::new();
    for part in graphs {
        for (id, m) in part.objects() {
            match g.points(id) {
                None => g.add_object(id, m)?,
                Some(k) if k != m => {
                    return Err(Error::Structural(alloc::format!("object {id} has {k} and {m} points")));
                }
                Some(_) => {}
            }
        }
        for (key, blk) in part.edges() {
            blocks
                .entry(key)
                .and_modify(|acc| acc.zip_apply(blk, |x, y| *x = x.max(y)))
                .or_insert_with(|| blk.clone());
        }
    }
    for ((i, j), blk) in blocks {
        g.set_block(i, j, blk)?;
    }
    Ok(g)
}

/// Map graph of every object pair sharing a node, built from the rounded
/// node solutions with [`union_graphs`].
pub fn coverage_graph(sol: &AdmmSolution) -> Result<MapGraph> {
    let parts = sol.nodes.iter().map(|n| node_graph(&n.rounded)).collect::<Result<Vec<_>>>()?;
    union_graphs(&parts)
}

/// Largest entrywise disagreement between neighbouring nodes' unrounded
/// `X` on the blocks of their shared objects.
pub fn max_overlap_gap(sol: &AdmmSolution, cover: &CoverComplex) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for &(i, j) in &cover.nerve().edges {
        let (ni, nj) = (&sol.nodes[i], &sol.nodes[j]);
        let shared: Vec<ObjectId> = cover.nodes()[i].intersection(&cover.nodes()[j]).copied().collect();
        for &p in &shared {
            for &q in &shared {
                let missing = || Error::Structural(alloc::format!("pair ({p}, {q}) missing from a node solution"));
                let bi = ni.x.block_by_id(p, q).ok_or_else(missing)?;
                let bj = nj.x.block_by_id(p, q).ok_or_else(missing)?;
                gap = gap.max((bi - bj).amax());
            }
        }
    }
    Ok(gap)
}

/// Global map graph: node-internal blocks plus one-hop composites for the
/// pairs no node holds (pairs without any intermediate stay unobserved).
pub fn stitch(sol: &AdmmSolution, cover: &CoverComplex) -> Result<MapGraph> {
    let mut g = coverage_graph(sol)?;
    let ids: Vec<ObjectId> = g.objects().map(|(id, _)| id).collect();
    for (x, &a) in ids.iter().enumerate() {
        for &b in &ids[x + 1..] {
            if g.has_edge(a, b) {
                continue;
            }
            let hop = compose_one_hop(sol, cover, a, b)?;
            if hop.intermediates > 0 {
                g.set_block(a, b, hop.map)?;
            }
        }
    }
    Ok(g)
}
