use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::error::{Error, Result};
use crate::graph::ObjectId;

/// Ordered list of objects with their point counts, defining the row/column
/// blocks of a matching matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    entries: Vec<(ObjectId, usize)>,
    offsets: Vec<usize>,
}

impl Layout {
    pub fn new(entries: Vec<(ObjectId, usize)>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(entries.len() + 1);
        let mut acc = 0;
        for (i, &(id, m)) in entries.iter().enumerate() {
            if m == 0 {
                return Err(Error::Structural(format!("object {id} has zero points")));
            }
            if entries[..i].iter().any(|(other, _)| *other == id) {
                return Err(Error::Structural(format!("object {id} appears twice in layout")));
            }
            offsets.push(acc);
            acc += m;
        }
        offsets.push(acc);
        Ok(Self { entries, offsets })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total matrix dimension, the sum of the point counts.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn entries(&self) -> &[(ObjectId, usize)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn id(&self, slot: usize) -> ObjectId {
        self.entries[slot].0
    }

    pub fn points(&self, slot: usize) -> usize {
        self.entries[slot].1
    }

    pub fn offset(&self, slot: usize) -> usize {
        self.offsets[slot]
    }

    pub fn position(&self, id: ObjectId) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == id)
    }

    /// Row indices covered by the given slots, in slot order.
    pub fn indices_of(&self, slots: &[usize]) -> Vec<usize> {
        slots
            .iter()
            .flat_map(|&s| self.offsets[s]..self.offsets[s + 1])
            .collect()
    }

    /// Slot owning each row index.
    pub fn slot_of_rows(&self) -> Vec<usize> {
        (0..self.len())
            .flat_map(|s| core::iter::repeat_n(s, self.points(s)))
            .collect()
    }
}

/// Dense square block matrix indexed by object pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    layout: Layout,
    data: DMatrix<f64>,
}

impl BlockMatrix {
    pub fn zeros(layout: Layout) -> Self {
        let d = layout.dim();
        Self { layout, data: DMatrix::zeros(d, d) }
    }

    pub fn from_parts(layout: Layout, data: DMatrix<f64>) -> Result<Self> {
        let d = layout.dim();
        if data.shape() != (d, d) {
            return Err(Error::Structural(format!(
                "matrix shape {:?} does not match layout dimension {d}",
                data.shape()
            )));
        }
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Block between layout slots `a` and `b` (`m_a x m_b`).
    pub fn block(&self, a: usize, b: usize) -> DMatrixView<'_, f64> {
        let l = &self.layout;
        self.data
            .view((l.offset(a), l.offset(b)), (l.points(a), l.points(b)))
    }

    pub fn block_mut(&mut self, a: usize, b: usize) -> DMatrixViewMut<'_, f64> {
        let (ra, rb) = (self.layout.offset(a), self.layout.offset(b));
        let (ma, mb) = (self.layout.points(a), self.layout.points(b));
        self.data.view_mut((ra, rb), (ma, mb))
    }

    /// Writes `blk` at `(a, b)` and its transpose at `(b, a)`.
    pub fn set_block_pair(&mut self, a: usize, b: usize, blk: &DMatrix<f64>) {
        self.block_mut(a, b).copy_from(blk);
        if a != b {
            self.block_mut(b, a).copy_from(&blk.transpose());
        }
    }

    /// Block addressed by object ids.
    pub fn block_by_id(&self, i: ObjectId, j: ObjectId) -> Option<DMatrixView<'_, f64>> {
        Some(self.block(self.layout.position(i)?, self.layout.position(j)?))
    }
}
