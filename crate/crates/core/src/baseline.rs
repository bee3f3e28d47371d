//! Global joint matching: the solver run on a single node holding every
//! object, so no consensus terms or messages are involved.

use alloc::collections::BTreeSet;
use alloc::vec;

use crate::cover::CoverComplex;
use crate::error::Result;
use crate::graph::{MapGraph, ObjectId};
use crate::solver::{run_admm, AdmmSolution, RunOptions, SolverConfig};

/// Configuration of the global solve; identical to the per-node one.
pub type GlobalConfig = SolverConfig;

/// Solves the whole map graph as one node. The returned solution has a
/// single node covering every object.
pub fn match_global(g: &MapGraph, cfg: &GlobalConfig) -> Result<AdmmSolution> {
    let all: BTreeSet<ObjectId> = g.objects().map(|(id, _)| id).collect();
    let cover = CoverComplex::new(vec![all], g)?;
    run_admm(g, &cover, cfg, RunOptions::default())
}

/// [`match_global`] after dropping every observed map between objects that
/// share no node of `cover`.
pub fn match_global_sparse(g: &MapGraph, cover: &CoverComplex, cfg: &GlobalConfig) -> Result<AdmmSolution> {
    let sparse = g.filter_edges(|a, b| cover.co_resident(a, b));
    match_global(&sparse, cfg)
}
