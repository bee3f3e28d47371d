//! Consensus ADMM over the cover nodes.
//!
//! Every node keeps its own low-rank factorization `X_i ≈ A_i B_iᵀ` of the
//! matching matrix restricted to its objects. A round is: inner-node update
//! (`A`, `B`, the linear X-update and the projection onto the constraint
//! set), a barrier where nodes exchange the overlap sub-blocks of `X_i`,
//! then the dual ascent on the factorization and consensus residuals.

mod admm;
mod compose;
mod node;

pub use admm::{
    assemble, converged, route_messages, run_admm, Admm, AdmmSolution, Clock, ConvergenceReport, IterationRecord, NoClock,
    NodeSolution, RunOptions,
};
pub use compose::{compose_one_hop, coverage_graph, max_overlap_gap, node_graph, stitch, union_graphs, OneHop};
pub use node::{project_c, Link, NodeResidual, NodeState};

use alloc::format;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// How `X_i` is initialised before the first round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XInit {
    /// The observed matrix projected onto the constraint set.
    #[default]
    Projected,
    /// Identity diagonal blocks, zero elsewhere.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sparsity shift in `W = α·1 − X̄`.
    pub alpha: f64,
    /// Nuclear-norm weight.
    pub lambda: f64,
    /// Penalty on `X_i = A_i B_iᵀ`.
    pub mu: f64,
    /// Penalty on overlap agreement.
    pub beta: f64,
    /// Universe size estimate: the column count of `A_i`, `B_i`.
    pub universe_size: usize,
    pub max_iters: usize,
    /// Relative residual tolerance for convergence.
    pub tol: f64,
    /// Rounding threshold for the final `X_i`.
    pub threshold: f64,
    pub seed: u64,
    pub x_init: XInit,
}

impl SolverConfig {
    /// Defaults used throughout the experiments (α=0.1, λ=50, μ=64, β=1).
    pub fn with_universe(universe_size: usize) -> Self {
        Self {
            alpha: 0.1,
            lambda: 50.0,
            mu: 64.0,
            beta: 1.0,
            universe_size,
            max_iters: 1000,
            tol: 1e-4,
            threshold: 0.5,
            seed: 0,
            x_init: XInit::Projected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("lambda", self.lambda), ("mu", self.mu), ("beta", self.beta), ("tol", self.tol)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| v.is_nan() || *v <= 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::Config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.universe_size == 0 {
            return Err(Error::Config("universe size must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Overlap sub-block of `X_from` sent to a neighbouring node.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub iteration: usize,
    pub payload: DMatrix<f64>,
}
