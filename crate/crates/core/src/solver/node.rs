use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;

use super::{Message, SolverConfig, XInit};
use crate::block::{BlockMatrix, Layout};
use crate::error::{Error, Result};
use crate::graph::ObjectId;

/// Consensus state towards one nerve neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub neighbor: usize,
    /// Shared objects, ascending id.
    pub objects: Vec<ObjectId>,
    /// Rows of `X_i` belonging to the shared objects, ascending object id.
    pub indices: Vec<usize>,
    /// Consensus dual `Z_ij`.
    pub z: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeResidual {
    /// `‖X_i − A_i B_iᵀ‖_F / ‖X_i‖_F`.
    pub factor: f64,
    /// Largest `‖M_i→j − M_j→i‖_F / |V_i ∩ V_j|` over the neighbours.
    pub consensus: f64,
}

/// Solver state owned by one cover node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    id: usize,
    x: BlockMatrix,
    w: DMatrix<f64>,
    y: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    /// `A_i B_iᵀ` from the latest inner update.
    product: DMatrix<f64>,
    links: Vec<Link>,
    /// Entrywise coefficient `μ + 2β·c(r, s)` of the X-update system.
    coef: DMatrix<f64>,
}

impl NodeState {
    /// Sets up node `id` from its observed matrix `xbar` (objects in
    /// ascending id order) and the objects it shares with each neighbour.
    pub fn init(
        id: usize,
        xbar: &BlockMatrix,
        overlaps: Vec<(usize, Vec<ObjectId>)>,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let layout = xbar.layout().clone();
        if layout.is_empty() {
            return Err(Error::Structural(format!("cover node {id} is empty")));
        }
        if let Some(&(obj, m)) = layout.entries().iter().find(|e| e.1 > cfg.universe_size) {
            return Err(Error::Config(format!(
                "universe size {} is smaller than object {obj} with {m} points",
                cfg.universe_size
            )));
        }
        let d = layout.dim();
        let mut links = Vec::with_capacity(overlaps.len());
        for (neighbor, mut shared) in overlaps {
            if shared.is_empty() {
                return Err(Error::EmptyOverlap(id, neighbor));
            }
            shared.sort_unstable();
            let slots = shared
                .iter()
                .map(|obj| {
                    layout.position(*obj).ok_or_else(|| {
                        Error::Structural(format!("overlap object {obj} is not in node {id}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let indices = layout.indices_of(&slots);
            let k = indices.len();
            links.push(Link { neighbor, objects: shared, indices, z: DMatrix::zeros(k, k) });
        }
        links.sort_by_key(|l| l.neighbor);

        let mut coef = DMatrix::from_element(d, d, cfg.mu);
        for l in &links {
            for &c in &l.indices {
                for &r in &l.indices {
                    coef[(r, c)] += 2.0 * cfg.beta;
                }
            }
        }

        let mut rng = crate::seeded_rng(cfg.seed, id as u64);
        let m = cfg.universe_size;
        let a = DMatrix::from_fn(d, m, |_, _| rng.random::<f64>());
        let b = DMatrix::from_fn(d, m, |_, _| rng.random::<f64>());
        let w = xbar.data().map(|v| cfg.alpha - v);
        let x = match cfg.x_init {
            XInit::Projected => project_c(xbar.data().clone(), &layout),
            XInit::Zero => project_c(DMatrix::zeros(d, d), &layout),
        };
        Ok(Self {
            id,
            x,
            w,
            y: DMatrix::zeros(d, d),
            product: DMatrix::zeros(d, d),
            a,
            b,
            links,
            coef,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn layout(&self) -> &Layout {
        self.x.layout()
    }

    pub fn x(&self) -> &BlockMatrix {
        &self.x
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, neighbor: usize) -> Option<&Link> {
        self.links.iter().find(|l| l.neighbor == neighbor)
    }

    /// Overwrites the primal/dual state; used to set up test configurations.
    pub fn set_state(&mut self, x: DMatrix<f64>, y: DMatrix<f64>, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<()> {
        let d = self.x.dim();
        if x.shape() != (d, d) || y.shape() != (d, d) || a.nrows() != d || b.shape() != a.shape() {
            return Err(Error::Structural("state shapes do not match the node layout".into()));
        }
        *self.x.data_mut() = x;
        self.y = y;
        self.a = a;
        self.b = b;
        Ok(())
    }

    pub fn set_z(&mut self, neighbor: usize, z: DMatrix<f64>) -> Result<()> {
        let link = self
            .links
            .iter_mut()
            .find(|l| l.neighbor == neighbor)
            .ok_or(Error::EmptyOverlap(self.id, neighbor))?;
        if z.shape() != link.z.shape() {
            return Err(Error::Structural("dual shape does not match the overlap".into()));
        }
        link.z = z;
        Ok(())
    }

    fn shifted_x(&self, cfg: &SolverConfig) -> DMatrix<f64> {
        let mut s = self.x.data().clone();
        s.zip_apply(&self.y, |x, y| *x += y / cfg.mu);
        s
    }

    /// `A = (X + Y/μ) B (BᵀB + (λ/μ) I)⁻¹` with the current `B`.
    pub fn update_a(&self, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
        factor_step(&self.shifted_x(cfg), &self.b, cfg)
    }

    /// `B = (X + Y/μ)ᵀ A (AᵀA + (λ/μ) I)⁻¹` with the current `A`.
    pub fn update_b(&self, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
        factor_step(&self.shifted_x(cfg).transpose(), &self.a, cfg)
    }

    /// Solution of the X-update linear system for the current factors and
    /// the neighbours' latest messages.
    ///
    /// Each `E E ᵀ` is a diagonal 0/1 projector, so the left-hand operator
    /// scales entry `(r, s)` by `μ + 2β·c(r, s)` where `c` counts the
    /// neighbours whose overlap holds both rows; the system is solved
    /// entrywise. The remote dual `Z_ji` is taken as `−Z_ij`.
    pub fn solve_x0(&self, incoming: &[Message], cfg: &SolverConfig) -> Result<DMatrix<f64>> {
        let product = &self.a * self.b.transpose();
        self.x0_from_product(&product, incoming, cfg)
    }

    fn x0_from_product(
        &self,
        product: &DMatrix<f64>,
        incoming: &[Message],
        cfg: &SolverConfig,
    ) -> Result<DMatrix<f64>> {
        let mut rhs = product * cfg.mu;
        rhs -= &self.w;
        rhs -= &self.y;
        for link in &self.links {
            let msg = incoming
                .iter()
                .find(|m| m.from == link.neighbor)
                .ok_or(Error::MissingMessage { node: self.id, neighbor: link.neighbor })?;
            let k = link.indices.len();
            if msg.payload.shape() != (k, k) {
                return Err(Error::Structural(format!(
                    "message from {} has shape {:?}, overlap is {k}x{k}",
                    msg.from,
                    msg.payload.shape()
                )));
            }
            let d = rhs.nrows();
            let data = rhs.as_mut_slice();
            let cols = msg.payload.as_slice().chunks_exact(k).zip(link.z.as_slice().chunks_exact(k));
            for (&cc, (p, z)) in link.indices.iter().zip(cols) {
                let col = &mut data[cc * d..(cc + 1) * d];
                for ((&rr, &pv), &zv) in link.indices.iter().zip(p).zip(z) {
                    col[rr] += 2.0 * cfg.beta * pv - 2.0 * zv;
                }
            }
        }
        rhs.component_div_assign(&self.coef);
        Ok(rhs)
    }

    /// Inner-node update: `A`, then `B` with the fresh `A`, then the
    /// projected X-update.
    pub fn compute(&mut self, incoming: &[Message], cfg: &SolverConfig) -> Result<()> {
        let shifted = self.shifted_x(cfg);
        self.a = factor_step(&shifted, &self.b, cfg)?;
        self.b = factor_step(&shifted.transpose(), &self.a, cfg)?;
        self.product = &self.a * self.b.transpose();
        let x0 = self.x0_from_product(&self.product, incoming, cfg)?;
        self.x = project_c(x0, self.x.layout());
        Ok(())
    }

    /// Overlap sub-block of `X_i` for `neighbor`.
    pub fn extract_message(&self, neighbor: usize, iteration: usize) -> Result<Message> {
        let link = self.link(neighbor).ok_or(Error::EmptyOverlap(self.id, neighbor))?;
        Ok(Message {
            from: self.id,
            to: neighbor,
            iteration,
            payload: DMatrix::from_fn(link.indices.len(), link.indices.len(), |r, c| {
                self.x.data()[(link.indices[r], link.indices[c])]
            }),
        })
    }

    /// One message per neighbour, ascending neighbour id.
    pub fn messages(&self, iteration: usize) -> Vec<Message> {
        self.links
            .iter()
            .map(|l| self.extract_message(l.neighbor, iteration).expect("link exists"))
            .collect()
    }

    /// Dual ascent `Y += μ(X − ABᵀ)` and `Z_ij += β(M_i→j − M_j→i)`, using
    /// the product cached by the last [`NodeState::compute`].
    pub fn update_duals(
        &mut self,
        outgoing: &[Message],
        incoming: &[Message],
        cfg: &SolverConfig,
    ) -> Result<NodeResidual> {
        let diff = self.x.data() - &self.product;
        let x_norm = self.x.data().norm();
        let factor = if x_norm > 0.0 { diff.norm() / x_norm } else { diff.norm() };
        self.y.zip_apply(&diff, |y, d| *y += cfg.mu * d);
        let mut consensus: f64 = 0.0;
        for link in &mut self.links {
            let out = outgoing
                .iter()
                .find(|m| m.to == link.neighbor)
                .ok_or(Error::MissingMessage { node: link.neighbor, neighbor: self.id })?;
            let inc = incoming
                .iter()
                .find(|m| m.from == link.neighbor)
                .ok_or(Error::MissingMessage { node: self.id, neighbor: link.neighbor })?;
            let gap = &out.payload - &inc.payload;
            consensus = consensus.max(gap.norm() / link.objects.len() as f64);
            link.z.zip_apply(&gap, |z, g| *z += cfg.beta * g);
        }
        Ok(NodeResidual { factor, consensus })
    }

    /// Caches `A Bᵀ` for [`NodeState::update_duals`] when the factors were
    /// set externally.
    pub fn refresh_product(&mut self) {
        self.product = &self.a * self.b.transpose();
    }
}

/// Least-squares factor update `target · other · (otherᵀother + (λ/μ) I)⁻¹`.
fn factor_step(target: &DMatrix<f64>, other: &DMatrix<f64>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
    let m = other.ncols();
    let mut gram = other.transpose() * other;
    for k in 0..m {
        gram[(k, k)] += cfg.lambda / cfg.mu;
    }
    let inv = Cholesky::new(gram)
        .ok_or_else(|| Error::Degenerate("regularized Gram matrix is not positive definite".into()))?
        .inverse();
    Ok(target * other * inv)
}

/// Euclidean projection onto symmetric matrices with entries in `[0, 1]`
/// and identity diagonal blocks: symmetrize, clamp, overwrite the diagonal
/// blocks.
///
/// Every off-diagonal-block entry pair `(r, s), (s, r)` is coupled only by
/// symmetry and bounded independently, so the three steps are exact.
pub fn project_c(mut x: DMatrix<f64>, layout: &Layout) -> BlockMatrix {
    let d = x.nrows();
    for c in 0..d {
        for r in c + 1..d {
            let v = (0.5 * (x[(r, c)] + x[(c, r)])).clamp(0.0, 1.0);
            x[(r, c)] = v;
            x[(c, r)] = v;
        }
        x[(c, c)] = x[(c, c)].clamp(0.0, 1.0);
    }
    let mut out = BlockMatrix::from_parts(layout.clone(), x).expect("projection keeps the layout");
    for s in 0..layout.len() {
        out.block_mut(s, s).fill_with_identity();
    }
    out
}
