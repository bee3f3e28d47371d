use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::block::{BlockMatrix, Layout};
use crate::error::{Error, Result};

/// Identifier of one object (image, shape, point set) in a collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Vertex/adjacency view used by the cover construction.
pub trait ObjectGraph {
    fn object_ids(&self) -> Vec<ObjectId>;
    fn adjacent(&self, a: ObjectId, b: ObjectId) -> bool;
}

/// The complete graph on objects `0..n`, i.e. every pair observed.
#[derive(Debug, Clone, Copy)]
pub struct CompleteGraph(pub usize);

impl ObjectGraph for CompleteGraph {
    fn object_ids(&self) -> Vec<ObjectId> {
        (0..self.0 as u32).map(ObjectId).collect()
    }

    fn adjacent(&self, a: ObjectId, b: ObjectId) -> bool {
        a != b && (a.0 as usize) < self.0 && (b.0 as usize) < self.0
    }
}

/// Objects with point counts and the observed pairwise map blocks.
///
/// Blocks are stored once per unordered pair under the key `(lo, hi)` with
/// shape `points(lo) x points(hi)`; the reverse direction is the transpose.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapGraph {
    objects: BTreeMap<ObjectId, usize>,
    blocks: BTreeMap<(ObjectId, ObjectId), DMatrix<f64>>,
}

impl MapGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_object(&mut self, id: ObjectId, points: usize) -> Result<()> {
        if points == 0 {
            return Err(Error::Structural(format!("object {id} has no points")));
        }
        if self.objects.insert(id, points).is_some() {
            return Err(Error::Structural(format!("object {id} declared twice")));
        }
        Ok(())
    }

    /// Stores the map from `i` to `j`; `block` is `points(i) x points(j)`.
    pub fn set_block(&mut self, i: ObjectId, j: ObjectId, block: DMatrix<f64>) -> Result<()> {
        if i == j {
            return Err(Error::Structural(format!("self-loop on object {i}")));
        }
        let (mi, mj) = (self.points_checked(i)?, self.points_checked(j)?);
        if block.shape() != (mi, mj) {
            return Err(Error::Structural(format!(
                "block ({i},{j}) has shape {:?}, expected ({mi}, {mj})",
                block.shape()
            )));
        }
        if let Some(v) = block.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Structural(format!("block ({i},{j}) entry {v} outside [0,1]")));
        }
        if i < j {
            self.blocks.insert((i, j), block);
        } else {
            self.blocks.insert((j, i), block.transpose());
        }
        Ok(())
    }

    pub fn remove_block(&mut self, i: ObjectId, j: ObjectId) -> Option<DMatrix<f64>> {
        let key = if i < j { (i, j) } else { (j, i) };
        let b = self.blocks.remove(&key)?;
        Some(if i < j { b } else { b.transpose() })
    }

    fn points_checked(&self, id: ObjectId) -> Result<usize> {
        self.objects
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Structural(format!("unknown object {id}")))
    }

    pub fn points(&self, id: ObjectId) -> Option<usize> {
        self.objects.get(&id).copied()
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn objects(&self) -> impl Iterator<Item = (ObjectId, usize)> + '_ {
        self.objects.iter().map(|(&id, &m)| (id, m))
    }

    pub fn total_points(&self) -> usize {
        self.objects.values().sum()
    }

    /// Observed map from `i` to `j`, transposed on the fly when `i > j`.
    pub fn block(&self, i: ObjectId, j: ObjectId) -> Option<DMatrix<f64>> {
        if i < j {
            self.blocks.get(&(i, j)).cloned()
        } else {
            self.blocks.get(&(j, i)).map(|b| b.transpose())
        }
    }

    pub fn has_edge(&self, i: ObjectId, j: ObjectId) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.blocks.contains_key(&key)
    }

    /// Stored blocks keyed by `(lo, hi)`.
    pub fn edges(&self) -> impl Iterator<Item = ((ObjectId, ObjectId), &DMatrix<f64>)> + '_ {
        self.blocks.iter().map(|(&k, b)| (k, b))
    }

    pub fn num_edges(&self) -> usize {
        self.blocks.len()
    }

    pub fn neighbors(&self, id: ObjectId) -> Vec<ObjectId> {
        self.blocks
            .keys()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Copy of this graph keeping only the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(ObjectId, ObjectId) -> bool) -> MapGraph {
        MapGraph {
            objects: self.objects.clone(),
            blocks: self
                .blocks
                .iter()
                .filter(|((a, b), _)| keep(*a, *b))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn layout_of(&self, ids: &[ObjectId]) -> Result<Layout> {
        let entries = ids
            .iter()
            .map(|&id| Ok((id, self.points_checked(id)?)))
            .collect::<Result<Vec<_>>>()?;
        Layout::new(entries)
    }

    /// Input matching matrix over `ids`: identity diagonal blocks, observed
    /// blocks where an edge exists, zero blocks for unobserved pairs.
    pub fn matching_matrix(&self, ids: &[ObjectId]) -> Result<BlockMatrix> {
        let layout = self.layout_of(ids)?;
        let mut x = BlockMatrix::zeros(layout);
        for a in 0..ids.len() {
            x.block_mut(a, a).fill_with_identity();
            for b in a + 1..ids.len() {
                if let Some(blk) = self.block(ids[a], ids[b]) {
                    x.set_block_pair(a, b, &blk);
                }
            }
        }
        Ok(x)
    }

    /// True when every stored block entry is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.blocks.values().all(|b| b.iter().all(|&v| v == 0.0 || v == 1.0))
    }
}

impl ObjectGraph for MapGraph {
    fn object_ids(&self) -> Vec<ObjectId> {
        self.objects.keys().copied().collect()
    }

    fn adjacent(&self, a: ObjectId, b: ObjectId) -> bool {
        self.has_edge(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_objects() -> MapGraph {
        let mut g = MapGraph::new();
        g.add_object(ObjectId(0), 2).unwrap();
        g.add_object(ObjectId(1), 3).unwrap();
        g
    }

    #[test]
    fn reverse_block_is_transpose() {
        let mut g = two_objects();
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        g.set_block(ObjectId(0), ObjectId(1), b.clone()).unwrap();
        assert_eq!(g.block(ObjectId(1), ObjectId(0)).unwrap(), b.transpose());
        // storing via the reverse direction lands on the same key
        let mut h = two_objects();
        h.set_block(ObjectId(1), ObjectId(0), b.transpose()).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn rejects_bad_blocks() {
        let mut g = two_objects();
        assert!(g.set_block(ObjectId(0), ObjectId(1), DMatrix::zeros(3, 2)).is_err());
        assert!(g.set_block(ObjectId(0), ObjectId(0), DMatrix::zeros(2, 2)).is_err());
        let mut bad = DMatrix::zeros(2, 3);
        bad[(0, 0)] = 1.5;
        assert!(g.set_block(ObjectId(0), ObjectId(1), bad).is_err());
        assert!(g.add_object(ObjectId(0), 4).is_err());
        assert!(g.add_object(ObjectId(7), 0).is_err());
    }

    #[test]
    fn matching_matrix_fills_unobserved_with_zero() {
        let mut g = two_objects();
        g.add_object(ObjectId(2), 1).unwrap();
        let b = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        g.set_block(ObjectId(0), ObjectId(1), b.clone()).unwrap();
        let x = g.matching_matrix(&[ObjectId(0), ObjectId(1), ObjectId(2)]).unwrap();
        assert_eq!(x.dim(), 6);
        assert_eq!(x.block(0, 1), b);
        assert_eq!(x.block(1, 0), b.transpose());
        assert_eq!(x.block(0, 2), DMatrix::zeros(2, 1));
        assert_eq!(x.block(1, 1), DMatrix::identity(3, 3));
        assert_eq!(x.data(), &x.data().transpose());
    }
}
