use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{cluster, spectral_embed, CoverComplex, CoverConfig};
use crate::error::{Error, Result};
use crate::graph::{MapGraph, ObjectGraph, ObjectId};

/// Grows the seed nodes until the nerve is connected with trivial H1.
///
/// Each round adds to every node the graph neighbours of its members and
/// every object within `epsilon` of a member in embedding space, then
/// rebuilds and re-verifies the nerve. The seeds themselves are checked
/// first. Stops at the first accepted cover or after `cfg.max_rounds`
/// rounds, returning the last cover either way.
pub fn expand_and_verify(
    g: &MapGraph,
    coords: &[Vec<f64>],
    seeds: Vec<BTreeSet<ObjectId>>,
    cfg: &CoverConfig,
) -> Result<CoverComplex> {
    let ids = g.object_ids();
    if coords.len() != ids.len() {
        return Err(Error::Structural("one coordinate vector per object expected".into()));
    }
    let eps = cfg.epsilon.unwrap_or_else(|| 0.1 * coordinate_range(coords));
    let eps2 = eps * eps;
    let near = |a: usize, b: usize| {
        coords[a].iter().zip(&coords[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() <= eps2
    };

    let mut complex = CoverComplex::new(seeds, g)?;
    for _ in 0..cfg.max_rounds {
        if complex.verdict().accepted() {
            break;
        }
        let grown = complex
            .nodes()
            .iter()
            .map(|node| {
                let members: Vec<usize> = node.iter().map(|id| ids.binary_search(id).unwrap()).collect();
                let mut next = node.clone();
                for (k, &cand) in ids.iter().enumerate() {
                    if node.contains(&cand) {
                        continue;
                    }
                    if members.iter().any(|&m| g.adjacent(ids[m], cand) || near(m, k)) {
                        next.insert(cand);
                    }
                }
                next
            })
            .collect();
        complex = CoverComplex::new(grown, g)?;
    }
    Ok(complex)
}

fn coordinate_range(coords: &[Vec<f64>]) -> f64 {
    let dims = coords.first().map_or(0, Vec::len);
    (0..dims)
        .map(|d| {
            let (lo, hi) = coords
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[d]), hi.max(p[d])));
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Greedy cover: spectral embedding, k-means into `cfg.k` seeds, then
/// [`expand_and_verify`].
pub fn build_cover(g: &MapGraph, cfg: &CoverConfig) -> Result<CoverComplex> {
    cfg.validate()?;
    let coords = spectral_embed(g, cfg.dims)?;
    let labels = cluster(&coords, cfg.k, cfg.seed)?;
    let ids = g.object_ids();
    let mut seeds = alloc::vec![BTreeSet::new(); cfg.k];
    for (id, &l) in ids.iter().zip(&labels) {
        seeds[l].insert(*id);
    }
    expand_and_verify(g, &coords, seeds, cfg)
}
