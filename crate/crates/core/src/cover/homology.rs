use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Rank over GF(2) of the matrix whose rows are the given index sets
/// (`rows[r]` lists the columns holding a one in row `r`).
pub fn gf2_rank(rows: &[Vec<usize>], ncols: usize) -> usize {
    let words = ncols.div_ceil(64).max(1);
    let mut mat: Vec<Vec<u64>> = rows
        .iter()
        .map(|cols| {
            let mut bits = vec![0u64; words];
            for &c in cols {
                bits[c / 64] ^= 1 << (c % 64);
            }
            bits
        })
        .collect();
    let mut rank = 0;
    for col in 0..ncols {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..mat.len()).find(|&r| mat[r][w] & bit != 0) else {
            continue;
        };
        mat.swap(rank, p);
        let pivot = mat[rank].clone();
        for (r, row) in mat.iter_mut().enumerate() {
            if r != rank && row[w] & bit != 0 {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of H1 over Z2 of the 2-complex with the given edges and triangles:
/// `dim ker ∂1 - rank ∂2`.
pub fn h1_rank(
    edges: &[(usize, usize)],
    triangles: &[(usize, usize, usize)],
    num_nodes: usize,
) -> Result<usize> {
    let mut edge_index = BTreeMap::new();
    for (k, &(a, b)) in edges.iter().enumerate() {
        if a == b || a >= num_nodes || b >= num_nodes {
            return Err(Error::Structural(format!("invalid nerve edge ({a}, {b})")));
        }
        if edge_index.insert((a.min(b), a.max(b)), k).is_some() {
            return Err(Error::Structural(format!("duplicate nerve edge ({a}, {b})")));
        }
    }
    let boundary1: Vec<Vec<usize>> = edges.iter().map(|&(a, b)| vec![a, b]).collect();
    let boundary2 = triangles
        .iter()
        .map(|&(a, b, c)| {
            let mut v = [a, b, c];
            v.sort_unstable();
            [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])]
                .iter()
                .map(|e| {
                    edge_index.get(e).copied().ok_or_else(|| {
                        Error::Structural(format!("triangle ({a}, {b}, {c}) lacks edge {e:?}"))
                    })
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let cycles = edges.len() - gf2_rank(&boundary1, num_nodes);
    Ok(cycles - gf2_rank(&boundary2, edges.len()))
}
