//! Wall-clock timing and the multi-threaded executor for the synchronous
//! protocol.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Barrier, Mutex};
use std::time::Instant;

use dmatch_core::cover::CoverComplex;
use dmatch_core::solver::{
    assemble, converged, route_messages, Admm, AdmmSolution, Clock, ConvergenceReport, IterationRecord, Message,
    NodeResidual, NodeState, RunOptions, SolverConfig,
};
use dmatch_core::MapGraph;

/// Monotonic clock backed by [`Instant`].
#[derive(Debug, Clone, Copy)]
pub struct InstantClock {
    origin: Instant,
}

impl Default for InstantClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for InstantClock {
    fn now_ns(&mut self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

struct Slot {
    node: NodeState,
    inbox: Vec<Message>,
    outgoing: Vec<Message>,
    residual: Option<NodeResidual>,
    nanos: u64,
}

/// Runs the protocol with nodes spread round-robin over `threads` workers.
///
/// Workers own their nodes for the whole run and meet at a barrier between
/// the compute phase and the dual phase of every round. Every node performs
/// exactly the arithmetic of [`Admm::run`] on identically ordered inboxes, so
/// the result is bitwise identical to the single-threaded run.
pub fn run_threaded<C: Clock + Clone + Send>(
    admm: Admm,
    threads: usize,
    clock: &C,
) -> dmatch_core::Result<AdmmSolution> {
    let (nodes, inboxes, cfg) = admm.into_parts();
    let k = nodes.len();
    let threads = threads.clamp(1, k);
    let slots: Vec<Mutex<Slot>> = nodes
        .into_iter()
        .zip(inboxes)
        .map(|(node, inbox)| Mutex::new(Slot { node, inbox, outgoing: Vec::new(), residual: None, nanos: 0 }))
        .collect();
    let barrier = Barrier::new(threads);
    let stop = AtomicBool::new(cfg.max_iters == 0);
    let failure: Mutex<Option<dmatch_core::Error>> = Mutex::new(None);
    let report = Mutex::new(ConvergenceReport::default());

    std::thread::scope(|s| {
        for t in 0..threads {
            let (slots, barrier, stop, failure, report, cfg) = (&slots, &barrier, &stop, &failure, &report, &cfg);
            let mut clock = clock.clone();
            s.spawn(move || {
                let mine: Vec<usize> = (t..k).step_by(threads).collect();
                let mut iter = 0;
                while !stop.load(Ordering::SeqCst) {
                    iter += 1;
                    for &n in &mine {
                        let mut slot = slots[n].lock().unwrap();
                        let t0 = clock.now_ns();
                        let Slot { node, inbox, .. } = &mut *slot;
                        match node.compute(inbox, cfg) {
                            Ok(()) => slot.outgoing = slot.node.messages(iter),
                            Err(e) => record(failure, e),
                        }
                        slot.nanos = clock.now_ns() - t0;
                    }
                    barrier.wait();
                    for &n in &mine {
                        let incoming: Vec<Message> = (0..k)
                            .filter(|&j| j != n)
                            .flat_map(|j| slots[j].lock().unwrap().outgoing.iter().filter(|m| m.to == n).cloned().collect::<Vec<_>>())
                            .collect();
                        let inbox = route_messages(incoming, k).swap_remove(n);
                        let mut slot = slots[n].lock().unwrap();
                        let t0 = clock.now_ns();
                        let Slot { node, outgoing, .. } = &mut *slot;
                        let res = node.update_duals(outgoing, &inbox, cfg);
                        slot.inbox = inbox;
                        match res {
                            Ok(r) => slot.residual = Some(r),
                            Err(e) => record(failure, e),
                        }
                        slot.nanos += clock.now_ns() - t0;
                    }
                    barrier.wait();
                    if t == 0 {
                        let mut residuals = Vec::with_capacity(k);
                        let mut nanos = Vec::with_capacity(k);
                        for slot in slots {
                            let slot = slot.lock().unwrap();
                            residuals.push(slot.residual.unwrap_or(NodeResidual { factor: f64::NAN, consensus: f64::NAN }));
                            nanos.push(slot.nanos);
                        }
                        let record = IterationRecord::from_residuals(iter, &residuals, nanos);
                        let mut rep = report.lock().unwrap();
                        rep.iterations = iter;
                        rep.converged = converged(&record, cfg.tol);
                        rep.trace.push(record);
                        let done = rep.converged || iter >= cfg.max_iters || failure.lock().unwrap().is_some();
                        stop.store(done, Ordering::SeqCst);
                    }
                    barrier.wait();
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let nodes: Vec<NodeState> = slots.into_iter().map(|s| s.into_inner().unwrap().node).collect();
    Ok(assemble(&nodes, report.into_inner().unwrap(), &cfg))
}

fn record(failure: &Mutex<Option<dmatch_core::Error>>, e: dmatch_core::Error) {
    failure.lock().unwrap().get_or_insert(e);
}

/// Solves with per-node wall-clock timings, on `threads` workers.
pub fn solve(
    g: &MapGraph,
    cover: &CoverComplex,
    cfg: &SolverConfig,
    opts: RunOptions,
    threads: usize,
) -> dmatch_core::Result<AdmmSolution> {
    let admm = Admm::new(g, cover, cfg, opts)?;
    if threads <= 1 {
        admm.run(&mut InstantClock::default())
    } else {
        run_threaded(admm, threads, &InstantClock::default())
    }
}
