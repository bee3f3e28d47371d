//! Universe assignments, partial-map composition, rounding and the
//! brute-force cycle-consistency check used as a test oracle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::block::{BlockMatrix, Layout};
use crate::error::{Error, Result};
use crate::graph::{MapGraph, ObjectId};

/// Latent map of every object into a universe of `universe_size` entities.
///
/// Stored as, for each object, the entity index of each of its points; the
/// 0/1 matrix `A_i` has a single one per row at that entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniverseAssignment {
    universe_size: usize,
    objects: Vec<(ObjectId, Vec<usize>)>,
}

impl UniverseAssignment {
    pub fn new(universe_size: usize, mut objects: Vec<(ObjectId, Vec<usize>)>) -> Result<Self> {
        if universe_size == 0 {
            return Err(Error::Structural("universe must contain at least one entity".into()));
        }
        objects.sort_by_key(|o| o.0);
        for w in objects.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Structural(format!("object {} assigned twice", w[0].0)));
            }
        }
        for (id, ents) in &objects {
            if ents.is_empty() {
                return Err(Error::Structural(format!("object {id} has no points")));
            }
            let mut seen = vec![false; universe_size];
            for &e in ents {
                if e >= universe_size {
                    return Err(Error::Structural(format!("object {id} maps to entity {e} >= {universe_size}")));
                }
                if core::mem::replace(&mut seen[e], true) {
                    return Err(Error::Structural(format!("object {id} maps two points to entity {e}")));
                }
            }
        }
        Ok(Self { universe_size, objects })
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn objects(&self) -> &[(ObjectId, Vec<usize>)] {
        &self.objects
    }

    pub fn entities(&self, id: ObjectId) -> Option<&[usize]> {
        self.objects
            .binary_search_by_key(&id, |o| o.0)
            .ok()
            .map(|k| self.objects[k].1.as_slice())
    }

    /// The `m_i x m` 0/1 assignment matrix of one object.
    pub fn matrix(&self, id: ObjectId) -> Option<DMatrix<f64>> {
        let ents = self.entities(id)?;
        let mut a = DMatrix::zeros(ents.len(), self.universe_size);
        for (p, &e) in ents.iter().enumerate() {
            a[(p, e)] = 1.0;
        }
        Some(a)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.objects.iter().map(|(id, e)| (*id, e.len())).collect())
            .expect("assignment objects are validated at construction")
    }
}

/// Consistent matching matrix `X = A Aᵀ` over `layout`.
pub fn ground_truth_matrix(assign: &UniverseAssignment, layout: &Layout) -> Result<BlockMatrix> {
    let mut ents = Vec::with_capacity(layout.len());
    for &(id, m) in layout.entries() {
        let e = assign
            .entities(id)
            .ok_or_else(|| Error::Structural(format!("object {id} missing from assignment")))?;
        if e.len() != m {
            return Err(Error::Structural(format!(
                "object {id} has {m} points in layout but {} in assignment",
                e.len()
            )));
        }
        ents.extend_from_slice(e);
    }
    let d = ents.len();
    let data = DMatrix::from_fn(d, d, |r, c| if ents[r] == ents[c] { 1.0 } else { 0.0 });
    BlockMatrix::from_parts(layout.clone(), data)
}

fn check_partial_map(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Precondition(format!("{name} is not a 0/1 matrix")));
    }
    let rows_ok = m.row_iter().all(|r| r.sum() <= 1.0);
    let cols_ok = m.column_iter().all(|c| c.sum() <= 1.0);
    if !(rows_ok && cols_ok) {
        return Err(Error::Precondition(format!("{name} is not a partial map")));
    }
    Ok(())
}

/// Composite of the partial maps `p: i -> j` and `q: j -> k` (boolean product).
pub fn compose_maps(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if p.ncols() != q.nrows() {
        return Err(Error::Structural(format!(
            "cannot compose {}x{} with {}x{}",
            p.nrows(),
            p.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    check_partial_map(p, "left map")?;
    check_partial_map(q, "right map")?;
    Ok((p * q).map(|v| if v > 0.0 { 1.0 } else { 0.0 }))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Whether composing the maps around every closed walk of `g` returns each
/// surviving point to itself.
///
/// Points are joined along every 1-entry; the graph is consistent iff no
/// joined class holds two distinct points of the same object (such a class
/// is exactly a walk that comes back to a different point). Blocks must be
/// 0/1; rows or columns with several ones are reported as inconsistent.
pub fn is_cycle_consistent(g: &MapGraph) -> Result<bool> {
    if !g.is_binary() {
        return Err(Error::Precondition("cycle check needs 0/1 blocks".into()));
    }
    let mut base = alloc::collections::BTreeMap::new();
    let mut owner = Vec::with_capacity(g.total_points());
    for (id, m) in g.objects() {
        base.insert(id, owner.len());
        owner.extend(core::iter::repeat_n(id, m));
    }
    let mut uf = UnionFind::new(owner.len());
    for ((i, j), blk) in g.edges() {
        let (bi, bj) = (base[&i], base[&j]);
        for r in 0..blk.nrows() {
            for c in 0..blk.ncols() {
                if blk[(r, c)] == 1.0 {
                    uf.union(bi + r, bj + c);
                }
            }
        }
    }
    let mut seen = alloc::collections::BTreeSet::new();
    for (p, &o) in owner.iter().enumerate() {
        if !seen.insert((uf.find(p), o)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Thresholds entries (ties round up) and forces identity diagonal blocks.
pub fn round_matrix(x: &BlockMatrix, threshold: f64) -> BlockMatrix {
    let data = x.data().map(|v| if v >= threshold { 1.0 } else { 0.0 });
    let mut out = BlockMatrix::from_parts(x.layout().clone(), data).expect("same layout");
    for s in 0..out.layout().len() {
        out.block_mut(s, s).fill_with_identity();
    }
    out
}

/// Rows/columns of off-diagonal blocks that map one point to several points
/// after rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundingDiagnostics {
    pub overfull_rows: usize,
    pub overfull_cols: usize,
}

impl RoundingDiagnostics {
    pub fn of(x: &BlockMatrix) -> Self {
        let mut d = Self::default();
        let n = x.layout().len();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let blk = x.block(a, b);
                d.overfull_rows += blk.row_iter().filter(|r| r.sum() > 1.0).count();
                if a < b {
                    d.overfull_cols += blk.column_iter().filter(|c| c.sum() > 1.0).count();
                }
            }
        }
        d
    }

    pub fn is_clean(&self) -> bool {
        self.overfull_rows == 0 && self.overfull_cols == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(p: &[usize]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(p.len(), p.len());
        for (r, &c) in p.iter().enumerate() {
            m[(r, c)] = 1.0;
        }
        m
    }

    fn triangle(b01: DMatrix<f64>, b12: DMatrix<f64>, b02: DMatrix<f64>) -> MapGraph {
        let mut g = MapGraph::new();
        for i in 0..3 {
            g.add_object(ObjectId(i), b01.nrows()).unwrap();
        }
        g.set_block(ObjectId(0), ObjectId(1), b01).unwrap();
        g.set_block(ObjectId(1), ObjectId(2), b12).unwrap();
        g.set_block(ObjectId(0), ObjectId(2), b02).unwrap();
        g
    }

    #[test]
    fn ground_truth_single_identity_object() {
        let a = UniverseAssignment::new(3, vec![(ObjectId(0), vec![0, 1, 2])]).unwrap();
        let x = ground_truth_matrix(&a, &a.layout()).unwrap();
        assert_eq!(x.block(0, 0), DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn ground_truth_identical_views() {
        let a = UniverseAssignment::new(2, vec![(ObjectId(0), vec![0, 1]), (ObjectId(1), vec![0, 1])]).unwrap();
        let x = ground_truth_matrix(&a, &a.layout()).unwrap();
        assert_eq!(x.block(0, 1), DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn ground_truth_matches_triple_loop() {
        // n=3, r=4, each object sees a 3-subset in shuffled order.
        let views = [vec![2, 0, 3], vec![1, 3, 0], vec![3, 2, 1]];
        let objs = views.iter().enumerate().map(|(i, v)| (ObjectId(i as u32), v.clone())).collect();
        let a = UniverseAssignment::new(4, objs).unwrap();
        let x = ground_truth_matrix(&a, &a.layout()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let ai = a.matrix(ObjectId(i as u32)).unwrap();
                let aj = a.matrix(ObjectId(j as u32)).unwrap();
                for p in 0..3 {
                    for q in 0..3 {
                        let mut s = 0.0;
                        for e in 0..4 {
                            s += ai[(p, e)] * aj[(q, e)];
                        }
                        assert_eq!(x.block(i, j)[(p, q)], s);
                    }
                }
            }
        }
        assert_eq!(x.data(), &x.data().transpose());
    }

    #[test]
    fn ground_truth_rejects_mismatched_layout() {
        let a = UniverseAssignment::new(2, vec![(ObjectId(0), vec![0, 1])]).unwrap();
        let l = Layout::new(vec![(ObjectId(0), 3)]).unwrap();
        assert!(matches!(ground_truth_matrix(&a, &l), Err(Error::Structural(_))));
        let l = Layout::new(vec![(ObjectId(4), 2)]).unwrap();
        assert!(ground_truth_matrix(&a, &l).is_err());
    }

    #[test]
    fn assignment_rejects_collisions() {
        assert!(UniverseAssignment::new(3, vec![(ObjectId(0), vec![1, 1])]).is_err());
        assert!(UniverseAssignment::new(3, vec![(ObjectId(0), vec![3])]).is_err());
    }

    #[test]
    fn compose_identity_and_chain() {
        let q = perm(&[2, 0, 1]);
        assert_eq!(compose_maps(&DMatrix::identity(3, 3), &q).unwrap(), q);
        // 1 -> 2 then 2 -> 3 (zero-based: 0 -> 1, 1 -> 2)
        let mut p = DMatrix::zeros(3, 3);
        p[(0, 1)] = 1.0;
        let mut q = DMatrix::zeros(3, 3);
        q[(1, 2)] = 1.0;
        let r = compose_maps(&p, &q).unwrap();
        assert_eq!(r[(0, 2)], 1.0);
        assert_eq!(r.sum(), 1.0);
        assert!(matches!(compose_maps(&p, &DMatrix::zeros(2, 2)), Err(Error::Structural(_))));
        assert!(compose_maps(&DMatrix::from_element(2, 2, 1.0), &p.view((0, 0), (2, 2)).into_owned()).is_err());
    }

    #[test]
    fn identity_triangle_is_consistent() {
        let i = DMatrix::identity(3, 3);
        assert!(is_cycle_consistent(&triangle(i.clone(), i.clone(), i)).unwrap());
    }

    #[test]
    fn twisted_triangle_is_inconsistent() {
        // 0 -> 1 by the 3-cycle s, 0 -> 2 by s⁻¹, 1 -> 2 identity. Walking
        // 0 -> 1 -> 2 -> 0 composes s · I · s = s², which moves every point.
        let s = perm(&[1, 2, 0]);
        let s_inv = s.transpose();
        let around = &s * DMatrix::<f64>::identity(3, 3) * s_inv.transpose();
        assert_ne!(around, DMatrix::identity(3, 3));
        let g = triangle(s.clone(), DMatrix::identity(3, 3), s_inv);
        assert!(!is_cycle_consistent(&g).unwrap());
    }

    #[test]
    fn non_binary_block_is_rejected() {
        let mut g = triangle(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        g.set_block(ObjectId(0), ObjectId(1), DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert!(matches!(is_cycle_consistent(&g), Err(Error::Precondition(_))));
    }

    #[test]
    fn rounding_rules() {
        let l = Layout::new(vec![(ObjectId(0), 2), (ObjectId(1), 2)]).unwrap();
        let mut x = BlockMatrix::zeros(l.clone());
        x.block_mut(0, 1)
            .copy_from(&DMatrix::from_row_slice(2, 2, &[0.49, 0.51, 0.5, 0.2]));
        x.block_mut(0, 0).fill(0.3);
        let r = round_matrix(&x, 0.5);
        assert_eq!(r.block(0, 1), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(r.block(0, 0), DMatrix::<f64>::identity(2, 2));
        assert_eq!(round_matrix(&r, 0.5), r);

        let all = BlockMatrix::from_parts(l, DMatrix::from_element(4, 4, 0.9)).unwrap();
        assert_eq!(round_matrix(&all, 0.5).block(1, 0).sum(), 4.0);
    }

    #[test]
    fn diagnostics_flag_overfull_rows() {
        let l = Layout::new(vec![(ObjectId(0), 1), (ObjectId(1), 2)]).unwrap();
        let x = BlockMatrix::from_parts(l, DMatrix::from_element(3, 3, 1.0)).unwrap();
        let d = RoundingDiagnostics::of(&round_matrix(&x, 0.5));
        // the single point of object 0 maps to both points of object 1
        assert_eq!(d.overfull_rows, 1);
        assert_eq!(d.overfull_cols, 0);
        assert!(!d.is_clean());
    }
}
