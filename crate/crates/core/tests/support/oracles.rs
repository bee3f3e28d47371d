//! Independent oracles shared by the property and acceptance suites.

#![allow(dead_code)]

use dmatch_core::solver::{Message, NodeState, SolverConfig};
use dmatch_core::{BlockMatrix, Layout, ObjectId};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Euclidean projection of `x0` onto {symmetric, entries in [0,1], identity
/// diagonal blocks} by Dykstra's algorithm over the affine constraint set
/// (projected through the pseudo-inverse of its constraint matrix) and the
/// box. Uses no knowledge of the closed form.
pub fn qp_projection(x0: &DMatrix<f64>, sizes: &[usize]) -> DMatrix<f64> {
    let d = x0.nrows();
    let idx = |r: usize, c: usize| c * d + r;
    let mut slot = Vec::new();
    for (s, &m) in sizes.iter().enumerate() {
        slot.extend(std::iter::repeat_n(s, m));
    }
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for c in 0..d {
        for r in 0..d {
            if slot[r] == slot[c] {
                rows.push((vec![(idx(r, c), 1.0)], if r == c { 1.0 } else { 0.0 }));
            } else if r < c {
                rows.push((vec![(idx(r, c), 1.0), (idx(c, r), -1.0)], 0.0));
            }
        }
    }
    let a = DMatrix::from_fn(rows.len(), d * d, |i, j| {
        rows[i].0.iter().find(|(k, _)| *k == j).map_or(0.0, |(_, v)| *v)
    });
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let pinv = (&a * a.transpose()).pseudo_inverse(1e-12).unwrap();
    let affine = |x: &DVector<f64>| x - a.transpose() * (&pinv * (&a * x - &b));
    let mut x = DVector::from_column_slice(x0.as_slice());
    let (mut p, mut q) = (DVector::zeros(d * d), DVector::zeros(d * d));
    for _ in 0..20_000 {
        let y = affine(&(&x + &p));
        p = &x + &p - &y;
        let next = (&y + &q).map(|v| v.clamp(0.0, 1.0));
        q = &y + &q - &next;
        let moved = (&next - &x).amax();
        x = next;
        if moved < 1e-13 {
            break;
        }
    }
    DMatrix::from_column_slice(d, d, x.as_slice())
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(lo..hi))
}

/// Random layout with total dimension at most `max_dim`.
pub fn random_sizes(rng: &mut impl Rng, max_objects: usize, max_dim: usize) -> Vec<usize> {
    let k = rng.random_range(1..=max_objects);
    let mut sizes = Vec::new();
    let mut left = max_dim;
    for _ in 0..k {
        if left == 0 {
            break;
        }
        let m = rng.random_range(1..=left.min(3));
        sizes.push(m);
        left -= m;
    }
    sizes
}

pub fn layout(sizes: &[usize]) -> Layout {
    Layout::new(sizes.iter().enumerate().map(|(k, &m)| (ObjectId(k as u32), m)).collect()).unwrap()
}

/// A node with random state, random duals and random neighbour messages.
pub struct NodeCase {
    pub node: NodeState,
    pub incoming: Vec<Message>,
    pub cfg: SolverConfig,
}

pub fn random_node_case(rng: &mut impl Rng) -> NodeCase {
    let sizes = random_sizes(rng, 5, 10);
    let lay = layout(&sizes);
    let d = lay.dim();
    let cfg = SolverConfig {
        alpha: rng.random_range(0.0..1.0),
        lambda: rng.random_range(0.1..100.0),
        mu: rng.random_range(0.5..100.0),
        beta: rng.random_range(0.1..10.0),
        ..SolverConfig::with_universe(d.max(3))
    };
    let xbar = BlockMatrix::from_parts(lay.clone(), random_matrix(rng, d, d, 0.0, 1.0)).unwrap();
    let ids: Vec<ObjectId> = lay.ids().collect();
    let neighbours = rng.random_range(0..=3usize);
    let overlaps: Vec<(usize, Vec<ObjectId>)> = (0..neighbours)
        .map(|j| {
            let mut shared: Vec<ObjectId> = ids.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            if shared.is_empty() {
                shared.push(ids[rng.random_range(0..ids.len())]);
            }
            (j + 1, shared)
        })
        .collect();
    let mut node = NodeState::init(0, &xbar, overlaps, &cfg).unwrap();
    let m = cfg.universe_size;
    node.set_state(
        random_matrix(rng, d, d, 0.0, 1.0),
        random_matrix(rng, d, d, -1.0, 1.0),
        random_matrix(rng, d, m, 0.0, 1.0),
        random_matrix(rng, d, m, 0.0, 1.0),
    )
    .unwrap();
    let mut incoming = Vec::new();
    for j in 1..=neighbours {
        let k = node.link(j).unwrap().indices.len();
        node.set_z(j, random_matrix(rng, k, k, -1.0, 1.0)).unwrap();
        incoming.push(Message { from: j, to: 0, iteration: 1, payload: random_matrix(rng, k, k, 0.0, 1.0) });
    }
    NodeCase { node, incoming, cfg }
}

/// Relative residual of `x` in the X-update equation
/// `μX + 2β Σ_j E EᵀX E Eᵀ = μABᵀ − (W + Y) + Σ_j E(2βM_j − Z_ij + Z_ji)Eᵀ`
/// with `Z_ji = −Z_ij`, assembled from explicit selection matrices.
pub fn x_update_residual(case: &NodeCase, x: &DMatrix<f64>) -> f64 {
    let node = &case.node;
    let cfg = &case.cfg;
    let d = x.nrows();
    let mut lhs = x * cfg.mu;
    let mut rhs = node.a() * node.b().transpose() * cfg.mu - node.w() - node.y();
    for link in node.links() {
        let k = link.indices.len();
        let e = DMatrix::from_fn(d, k, |r, t| if link.indices[t] == r { 1.0 } else { 0.0 });
        let proj = &e * e.transpose();
        lhs += &proj * x * &proj * (2.0 * cfg.beta);
        let msg = case.incoming.iter().find(|m| m.from == link.neighbor).unwrap();
        let z_ji = -&link.z;
        rhs += &e * (&msg.payload * (2.0 * cfg.beta) - &link.z + z_ji) * e.transpose();
    }
    (lhs - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE)
}
