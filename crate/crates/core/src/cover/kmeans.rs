use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

const MAX_ITERS: usize = 100;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded k-means (k-means++ initialisation, Lloyd iterations until the
/// assignment stops changing). Returns the cluster index of every point;
/// every cluster is non-empty.
pub fn cluster(coords: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = coords.len();
    if k == 0 || k > n {
        return Err(Error::Precondition(alloc::format!("cannot split {n} objects into {k} clusters")));
    }
    let mut rng = crate::seeded_rng(seed, 0x6b6d);

    let mut centers: Vec<Vec<f64>> = vec![coords[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d: Vec<f64> = coords
            .iter()
            .map(|p| centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d.iter().enumerate() {
                if t < w {
                    idx = i;
                    break;
                }
                t -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(coords[pick].clone());
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, p) in coords.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| dist2(p, &centers[a]).total_cmp(&dist2(p, &centers[b])))
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        changed |= fill_empty(coords, &centers, &mut assign, k);
        recompute(coords, &assign, &mut centers);
        if !changed {
            break;
        }
    }
    Ok(assign)
}

/// Moves the point farthest from its centre into each empty cluster, taking
/// it only from clusters that keep at least one member.
fn fill_empty(coords: &[Vec<f64>], centers: &[Vec<f64>], assign: &mut [usize], k: usize) -> bool {
    let mut changed = false;
    loop {
        let mut sizes = vec![0usize; k];
        assign.iter().for_each(|&a| sizes[a] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return changed;
        };
        let donor = (0..coords.len())
            .filter(|&i| sizes[assign[i]] > 1)
            .max_by(|&a, &b| {
                dist2(&coords[a], &centers[assign[a]])
                    .total_cmp(&dist2(&coords[b], &centers[assign[b]]))
                    .then(b.cmp(&a))
            })
            .expect("k <= n leaves a cluster with two members");
        assign[donor] = empty;
        changed = true;
    }
}

fn recompute(coords: &[Vec<f64>], assign: &[usize], centers: &mut [Vec<f64>]) {
    let dims = coords[0].len();
    for (c, center) in centers.iter_mut().enumerate() {
        let members: Vec<&Vec<f64>> = coords.iter().zip(assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
        if members.is_empty() {
            continue;
        }
        for d in 0..dims {
            center[d] = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
        }
    }
}
