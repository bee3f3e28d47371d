use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::MapGraph;

/// Laplacian eigenmap of the map graph, one coordinate vector per object in
/// ascending id order.
///
/// Edge weights are the summed block entries (a matching-quality score), or
/// 1 for empty blocks. Each connected component is embedded on its own with
/// the eigenvectors of its `dims` smallest non-zero eigenvalues, and
/// components are then spaced apart along the first axis. Eigenvector signs
/// are fixed so the largest-magnitude entry is positive.
pub fn spectral_embed(g: &MapGraph, dims: usize) -> Result<Vec<Vec<f64>>> {
    let ids: Vec<_> = g.objects().map(|(id, _)| id).collect();
    let n = ids.len();
    if n == 0 {
        return Err(Error::Structural("cannot embed an empty graph".into()));
    }
    if dims == 0 {
        return Err(Error::Precondition("embedding dimension must be positive".into()));
    }
    let mut weights = DMatrix::<f64>::zeros(n, n);
    for ((a, b), blk) in g.edges() {
        let (ia, ib) = (ids.binary_search(&a).unwrap(), ids.binary_search(&b).unwrap());
        let s = blk.sum();
        let w = if s > 0.0 { s } else { 1.0 };
        weights[(ia, ib)] = w;
        weights[(ib, ia)] = w;
    }

    let mut coords = vec![vec![0.0; dims]; n];
    for (c, comp) in components(&weights).into_iter().enumerate() {
        let k = comp.len();
        let lap = DMatrix::from_fn(k, k, |r, s| {
            if r == s {
                comp.iter().map(|&o| weights[(comp[r], o)]).sum()
            } else {
                -weights[(comp[r], comp[s])]
            }
        });
        let eig = SymmetricEigen::new(lap);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        for (axis, &e) in order.iter().skip(1).take(dims).enumerate() {
            let mut v = eig.eigenvectors.column(e).into_owned();
            let lead = (0..k)
                .max_by(|&x, &y| v[x].abs().total_cmp(&v[y].abs()).then(y.cmp(&x)))
                .unwrap();
            if v[lead] < 0.0 {
                v.neg_mut();
            }
            for (r, &obj) in comp.iter().enumerate() {
                coords[obj][axis] = v[r];
            }
        }
        // unit eigenvectors stay within [-1, 1]
        for &obj in &comp {
            coords[obj][0] += 3.0 * c as f64;
        }
    }
    Ok(coords)
}

fn components(weights: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = weights.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for w in 0..n {
                if !seen[w] && weights[(v, w)] != 0.0 {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
