use alloc::collections::BTreeSet;
use alloc::format;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{MapGraph, ObjectId};

/// One correspondence: point `a` of object `i` matched to point `b` of `j`, `i < j`.
pub type Correspondence = (ObjectId, usize, ObjectId, usize);

/// Every 1-entry (value at least 0.5) of the observed blocks of `g`.
pub fn correspondences(g: &MapGraph) -> BTreeSet<Correspondence> {
    g.edges()
        .flat_map(|((i, j), b)| {
            (0..b.nrows())
                .flat_map(move |a| (0..b.ncols()).map(move |c| (a, c)))
                .filter(|&(a, c)| b[(a, c)] >= 0.5)
                .map(move |(a, c)| (i, a, j, c))
        })
        .collect()
}

/// One minus the Jaccard index of the correspondence sets of `x_star` and
/// `gt`, both restricted to the object pairs observed in `x_star`.
///
/// Returns 0 if neither side has a correspondence on those pairs and
/// [`Error::Degenerate`] if `x_star` observes no pair at all.
pub fn iou_error(x_star: &MapGraph, gt: &MapGraph) -> Result<f64> {
    if x_star.num_edges() == 0 {
        return Err(Error::Degenerate("solution covers no object pair".into()));
    }
    let (mut inter, mut star, mut truth) = (0usize, 0usize, 0usize);
    for ((i, j), xb) in x_star.edges() {
        let gb = match gt.block(i, j) {
            Some(b) => b,
            None if gt.points(i) == Some(xb.nrows()) && gt.points(j) == Some(xb.ncols()) => DMatrix::zeros(xb.nrows(), xb.ncols()),
            None => {
                return Err(Error::Structural(format!("pair ({i}, {j}) does not match the reference graph")));
            }
        };
        if gb.shape() != xb.shape() {
            return Err(Error::Structural(format!("pair ({i}, {j}) has mismatched block shapes")));
        }
        for (x, g) in xb.iter().zip(gb.iter()) {
            let (x, g) = (*x >= 0.5, *g >= 0.5);
            star += usize::from(x);
            truth += usize::from(g);
            inter += usize::from(x && g);
        }
    }
    let union = star + truth - inter;
    Ok(if union == 0 { 0.0 } else { 1.0 - inter as f64 / union as f64 })
}
