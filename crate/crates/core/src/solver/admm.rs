use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::node::{NodeResidual, NodeState};
use super::{Message, SolverConfig};
use crate::block::BlockMatrix;
use crate::cover::CoverComplex;
use crate::error::{Error, Result};
use crate::graph::{MapGraph, ObjectId};
use crate::maps::{round_matrix, RoundingDiagnostics};

/// Monotonic time source for per-node timings; `no_std` builds use [`NoClock`].
pub trait Clock {
    /// Nanoseconds since an arbitrary origin.
    fn now_ns(&mut self) -> u64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&mut self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Solve even if the cover verdict is negative.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub factor_residuals: Vec<f64>,
    /// Per node, the largest consensus residual over its neighbours.
    pub consensus_residuals: Vec<f64>,
    /// Per node, time spent in its own updates this round.
    pub node_nanos: Vec<u64>,
}

impl IterationRecord {
    pub fn from_residuals(iter: usize, residuals: &[NodeResidual], node_nanos: Vec<u64>) -> Self {
        Self {
            iter,
            factor_residuals: residuals.iter().map(|r| r.factor).collect(),
            consensus_residuals: residuals.iter().map(|r| r.consensus).collect(),
            node_nanos,
        }
    }

    pub fn max_factor(&self) -> f64 {
        self.factor_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_consensus(&self) -> f64 {
        self.consensus_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Round time if every node ran on its own worker.
    pub fn max_node_nanos(&self) -> u64 {
        self.node_nanos.iter().copied().max().unwrap_or(0)
    }
}

/// Both residuals below `tol`.
pub fn converged(record: &IterationRecord, tol: f64) -> bool {
    record.max_factor() < tol && record.max_consensus() < tol
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

impl ConvergenceReport {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.trace.last()
    }

    /// Mean over rounds of the slowest node's time.
    pub fn mean_round_nanos(&self) -> f64 {
        if self.trace.is_empty() {
            return 0.0;
        }
        self.trace.iter().map(|r| r.max_node_nanos() as f64).sum::<f64>() / self.trace.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSolution {
    pub objects: Vec<ObjectId>,
    /// Converged (continuous) `X_i`.
    pub x: BlockMatrix,
    pub rounded: BlockMatrix,
    pub diagnostics: RoundingDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmSolution {
    pub nodes: Vec<NodeSolution>,
    pub report: ConvergenceReport,
}

impl AdmmSolution {
    /// Rounded map `a -> b` from the first node holding both objects.
    pub fn rounded_block(&self, a: ObjectId, b: ObjectId) -> Option<nalgebra::DMatrix<f64>> {
        self.nodes
            .iter()
            .find_map(|n| n.rounded.block_by_id(a, b).map(|v| v.into_owned()))
    }
}

/// Delivers each message to its recipient; inboxes are ordered by sender.
pub fn route_messages(outgoing: impl IntoIterator<Item = Message>, num_nodes: usize) -> Vec<Vec<Message>> {
    let mut inbox = vec![Vec::new(); num_nodes];
    for m in outgoing {
        inbox[m.to].push(m);
    }
    for b in &mut inbox {
        b.sort_by_key(|m| m.from);
    }
    inbox
}

/// Synchronous ADMM coordinator running every node in turn.
///
/// A round runs [`NodeState::compute`] on every node against the previous
/// round's messages, exchanges fresh messages, then runs
/// [`NodeState::update_duals`] on every node with them. Convergence is
/// declared when the largest relative factorization residual and the
/// largest consensus residual both drop below `tol`.
#[derive(Debug, Clone)]
pub struct Admm {
    nodes: Vec<NodeState>,
    inbox: Vec<Vec<Message>>,
    cfg: SolverConfig,
    report: ConvergenceReport,
}

impl Admm {
    pub fn new(g: &MapGraph, cover: &CoverComplex, cfg: &SolverConfig, opts: RunOptions) -> Result<Self> {
        cfg.validate()?;
        let verdict = cover.verdict();
        if !opts.force && !verdict.accepted() {
            return Err(Error::CoverRejected(verdict));
        }
        let sets = cover.nodes();
        let mut nodes = Vec::with_capacity(sets.len());
        for (i, set) in sets.iter().enumerate() {
            let ids: Vec<ObjectId> = set.iter().copied().collect();
            let xbar = g.matching_matrix(&ids)?;
            let overlaps = cover
                .nerve()
                .neighbors(i)
                .map(|j| {
                    let shared: BTreeSet<&ObjectId> = set.intersection(&sets[j]).collect();
                    (j, shared.into_iter().copied().collect())
                })
                .collect();
            nodes.push(NodeState::init(i, &xbar, overlaps, cfg)?);
        }
        let inbox = route_messages(nodes.iter().flat_map(|n| n.messages(0)), nodes.len());
        Ok(Self { nodes, inbox, cfg: cfg.clone(), report: ConvergenceReport::default() })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn report(&self) -> &ConvergenceReport {
        &self.report
    }

    /// Node states and their initial inboxes, for external executors.
    pub fn into_parts(self) -> (Vec<NodeState>, Vec<Vec<Message>>, SolverConfig) {
        (self.nodes, self.inbox, self.cfg)
    }

    /// One synchronous round.
    pub fn step(&mut self, clock: &mut impl Clock) -> Result<&IterationRecord> {
        let iter = self.report.iterations + 1;
        let mut nanos = vec![0u64; self.nodes.len()];
        let mut outgoing = Vec::with_capacity(self.nodes.len());
        for (k, node) in self.nodes.iter_mut().enumerate() {
            let t0 = clock.now_ns();
            node.compute(&self.inbox[k], &self.cfg)?;
            outgoing.push(node.messages(iter));
            nanos[k] += clock.now_ns() - t0;
        }
        self.inbox = route_messages(outgoing.iter().flatten().cloned(), self.nodes.len());
        let mut residuals = Vec::with_capacity(self.nodes.len());
        for (k, node) in self.nodes.iter_mut().enumerate() {
            let t0 = clock.now_ns();
            residuals.push(node.update_duals(&outgoing[k], &self.inbox[k], &self.cfg)?);
            nanos[k] += clock.now_ns() - t0;
        }
        let record = IterationRecord::from_residuals(iter, &residuals, nanos);
        self.report.iterations = iter;
        self.report.converged = converged(&record, self.cfg.tol);
        self.report.trace.push(record);
        Ok(self.report.trace.last().expect("just pushed"))
    }

    pub fn run(mut self, clock: &mut impl Clock) -> Result<AdmmSolution> {
        while self.report.iterations < self.cfg.max_iters && !self.report.converged {
            self.step(clock)?;
        }
        Ok(assemble(&self.nodes, self.report, &self.cfg))
    }
}

/// Rounds every node's `X_i` and packages the result.
pub fn assemble(nodes: &[NodeState], report: ConvergenceReport, cfg: &SolverConfig) -> AdmmSolution {
    let nodes = nodes
        .iter()
        .map(|n| {
            let rounded = round_matrix(n.x(), cfg.threshold);
            NodeSolution {
                objects: n.layout().ids().collect(),
                x: n.x().clone(),
                diagnostics: RoundingDiagnostics::of(&rounded),
                rounded,
            }
        })
        .collect();
    AdmmSolution { nodes, report }
}

/// Runs the synchronous protocol to convergence on one thread.
pub fn run_admm(g: &MapGraph, cover: &CoverComplex, cfg: &SolverConfig, opts: RunOptions) -> Result<AdmmSolution> {
    Admm::new(g, cover, cfg, opts)?.run(&mut NoClock)
}
