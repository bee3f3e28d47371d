//! Seeded synthetic instances: a random universe, partial observations of
//! it, corrupted pairwise maps and star-shaped covers.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::cover::CoverComplex;
use crate::error::{Error, Result};
use crate::graph::{CompleteGraph, MapGraph, ObjectId};
use crate::maps::UniverseAssignment;
use crate::seeded_rng;

const GENERATE_STREAM: u64 = 1;
const CORRUPT_STREAM: u64 = 2;
const COVER_STREAM: u64 = 3;

/// Noise applied to an instance's observed maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    Uniform { rho_e: f64 },
    /// Rate `rho_in` for pairs sharing a cover node, `rho_out` otherwise.
    Clustered { rho_in: f64, rho_out: f64 },
}

/// What happens to a removed correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorruptionMode {
    /// Each removal rewires its source point to a random unmatched target.
    #[default]
    Rewire,
    /// Removals and additions are independent: after removal, every
    /// unmatched source point gains a random unmatched target with the same
    /// probability.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceParams {
    pub n: usize,
    pub r: usize,
    pub rho0: f64,
    pub noise: Noise,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: InstanceParams,
    pub truth: UniverseAssignment,
    pub observed: MapGraph,
    pub gt_graph: MapGraph,
}

/// `n` objects, each observing every one of `r` universe points with
/// probability `rho0`, in a seeded random order. Observed maps are exact.
pub fn generate(n: usize, r: usize, rho0: f64, seed: u64) -> Result<Instance> {
    if n < 2 {
        return Err(Error::Config(format!("need at least two objects, got {n}")));
    }
    if r == 0 {
        return Err(Error::Config("universe must have at least one point".into()));
    }
    if !(rho0 > 0.0 && rho0 <= 1.0) {
        return Err(Error::Config(format!("rho0 must lie in (0, 1], got {rho0}")));
    }
    let mut rng = seeded_rng(seed, GENERATE_STREAM);
    let mut objects = Vec::with_capacity(n);
    for i in 0..n {
        let mut ents = Vec::new();
        while ents.is_empty() {
            ents = (0..r).filter(|_| rng.random_bool(rho0)).collect();
        }
        ents.shuffle(&mut rng);
        objects.push((ObjectId(i as u32), ents));
    }
    let truth = UniverseAssignment::new(r, objects)?;
    let gt_graph = truth_graph(&truth)?;
    Ok(Instance {
        params: InstanceParams { n, r, rho0, noise: Noise::None, seed },
        truth,
        observed: gt_graph.clone(),
        gt_graph,
    })
}

fn truth_graph(truth: &UniverseAssignment) -> Result<MapGraph> {
    let mut g = MapGraph::new();
    for (id, ents) in truth.objects() {
        g.add_object(*id, ents.len())?;
    }
    let objs = truth.objects();
    for (x, (i, ei)) in objs.iter().enumerate() {
        for (j, ej) in &objs[x + 1..] {
            let blk = DMatrix::from_fn(ei.len(), ej.len(), |a, b| if ei[a] == ej[b] { 1.0 } else { 0.0 });
            g.set_block(*i, *j, blk)?;
        }
    }
    Ok(g)
}

/// Corrupts every off-diagonal block of the ground truth at rate `rho_e`.
///
/// For each block `(i, j)`, `i < j`, every true correspondence is dropped
/// with probability `rho_e` and its source point is rewired to a uniformly
/// random target of `j` that is currently unmatched (other than the one
/// just dropped), if there is one. Block `(j, i)` is the transpose.
pub fn corrupt(inst: &Instance, rho_e: f64, seed: u64) -> Result<Instance> {
    corrupt_with_mode(inst, rho_e, CorruptionMode::Rewire, seed)
}

pub fn corrupt_with_mode(inst: &Instance, rho_e: f64, mode: CorruptionMode, seed: u64) -> Result<Instance> {
    check_rate("rho_e", rho_e)?;
    let observed = corrupt_graph(&inst.gt_graph, |_, _| rho_e, mode, seed)?;
    Ok(Instance {
        params: InstanceParams { noise: Noise::Uniform { rho_e }, seed, ..inst.params.clone() },
        observed,
        ..inst.clone()
    })
}

/// Corrupts pairs sharing a node of `cover` at `rho_in` and all other pairs
/// at `rho_out`, with the mechanics of [`corrupt`].
pub fn corrupt_clustered(
    inst: &Instance,
    cover: &CoverComplex,
    rho_in: f64,
    rho_out: f64,
    seed: u64,
) -> Result<Instance> {
    check_rate("rho_in", rho_in)?;
    check_rate("rho_out", rho_out)?;
    let rate = |i, j| if cover.co_resident(i, j) { rho_in } else { rho_out };
    let observed = corrupt_graph(&inst.gt_graph, rate, CorruptionMode::Rewire, seed)?;
    Ok(Instance {
        params: InstanceParams { noise: Noise::Clustered { rho_in, rho_out }, seed, ..inst.params.clone() },
        observed,
        ..inst.clone()
    })
}

fn check_rate(name: &str, rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("{name} must lie in [0, 1], got {rho}")));
    }
    Ok(())
}

fn corrupt_graph(
    gt: &MapGraph,
    rate: impl Fn(ObjectId, ObjectId) -> f64,
    mode: CorruptionMode,
    seed: u64,
) -> Result<MapGraph> {
    let mut rng = seeded_rng(seed, CORRUPT_STREAM);
    let mut out = gt.clone();
    let edges: Vec<(ObjectId, ObjectId)> = gt.edges().map(|(k, _)| k).collect();
    for (i, j) in edges {
        let rho = rate(i, j);
        let mut blk = gt.block(i, j).expect("edge listed by the graph");
        corrupt_block(&mut blk, rho, mode, &mut rng);
        out.set_block(i, j, blk)?;
    }
    Ok(out)
}

fn corrupt_block(blk: &mut DMatrix<f64>, rho: f64, mode: CorruptionMode, rng: &mut impl Rng) {
    let (rows, cols) = blk.shape();
    let mut col_used: Vec<bool> = (0..cols).map(|c| blk.column(c).iter().any(|&v| v > 0.0)).collect();
    let mut row_target: Vec<Option<usize>> = (0..rows).map(|r| (0..cols).find(|&c| blk[(r, c)] > 0.0)).collect();
    let mut free = Vec::with_capacity(cols);
    for r in 0..rows {
        let Some(c) = row_target[r] else { continue };
        if !rng.random_bool(rho) {
            continue;
        }
        blk[(r, c)] = 0.0;
        col_used[c] = false;
        row_target[r] = None;
        if mode == CorruptionMode::Rewire {
            free.clear();
            free.extend((0..cols).filter(|&t| !col_used[t] && t != c));
            if let Some(&t) = free.get(rng.random_range(0..free.len().max(1))) {
                blk[(r, t)] = 1.0;
                col_used[t] = true;
                row_target[r] = Some(t);
            }
        }
    }
    if mode == CorruptionMode::Independent {
        for r in 0..rows {
            if row_target[r].is_some() || !rng.random_bool(rho) {
                continue;
            }
            free.clear();
            free.extend((0..cols).filter(|&t| !col_used[t]));
            if let Some(&t) = free.get(rng.random_range(0..free.len().max(1))) {
                blk[(r, t)] = 1.0;
                col_used[t] = true;
                row_target[r] = Some(t);
            }
        }
    }
}

/// Star cover of objects `0..n`: a shared core of `⌈overlap_fraction·n⌉`
/// random objects plus `k` disjoint parts splitting the rest evenly (larger
/// parts last). Node `i` is the core plus part `i`.
pub fn make_sparse_cover(n: usize, k: usize, overlap_fraction: f64, seed: u64) -> Result<CoverComplex> {
    let (core, parts) = split(n, k, overlap_fraction, seed)?;
    let nodes = parts.iter().map(|p| core.iter().chain(p).copied().collect()).collect();
    CoverComplex::new(nodes, &CompleteGraph(n))
}

/// Like [`make_sparse_cover`] but node `i` also holds part `i + 1 mod k`.
pub fn make_dense_cover(n: usize, k: usize, overlap_fraction: f64, seed: u64) -> Result<CoverComplex> {
    let (core, parts) = split(n, k, overlap_fraction, seed)?;
    let nodes = (0..k)
        .map(|i| core.iter().chain(&parts[i]).chain(&parts[(i + 1) % k]).copied().collect())
        .collect();
    CoverComplex::new(nodes, &CompleteGraph(n))
}

/// The core and parts behind [`make_sparse_cover`] with the same seed.
pub fn split(n: usize, k: usize, overlap_fraction: f64, seed: u64) -> Result<(BTreeSet<ObjectId>, Vec<BTreeSet<ObjectId>>)> {
    if k < 2 {
        return Err(Error::Config(format!("star cover needs at least two parts, got {k}")));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::Config(format!("overlap fraction must lie in [0, 1), got {overlap_fraction}")));
    }
    let core_len = libm::ceil(overlap_fraction * n as f64) as usize;
    if core_len == 0 || n < core_len + k {
        return Err(Error::Config(format!(
            "{n} objects cannot fill a non-empty core and {k} non-empty parts"
        )));
    }
    let mut ids: Vec<ObjectId> = (0..n as u32).map(ObjectId).collect();
    ids.shuffle(&mut seeded_rng(seed, COVER_STREAM));
    let core = ids[..core_len].iter().copied().collect();
    let rest = &ids[core_len..];
    let (base, extra) = (rest.len() / k, rest.len() % k);
    let mut parts = Vec::with_capacity(k);
    let mut at = 0;
    for p in 0..k {
        let len = base + usize::from(p >= k - extra);
        parts.push(rest[at..at + len].iter().copied().collect());
        at += len;
    }
    Ok((core, parts))
}
