//! Discrete boundary nodes `(G_h, L_h, K_h)`.
//!
//! The wave node keeps the end values of `u` as extra zero-weight unknowns;
//! `G_h` reads them (with the orientation signs `-u(1)`, `u(0)`) and `K_h`
//! reads `-v` at the same ends. The half-cell rows of `L_h` use them as the
//! boundary flux, so `Re⟨L_h x, x⟩_h = ⟨G_h x, K_h x⟩` holds exactly.
//!
//! The heat node shares one trace unknown per vertex. `G_h` reads it and
//! `K_h` is the signed sum of second-order one-sided end fluxes. The vertex
//! row of `L_h` is the lumped half-cell balance closed by that flux.

use super::assemble::{assemble, DofLayout, EndCondition};
use super::spec::{EdgeKind, NetworkSpec};
use super::system::edge_inputs;
use super::EdgeInput;
use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix, Scalar};
use crate::transfer::TransferMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Solves whose smallest/largest pivot ratio falls below this are rejected.
pub const MIN_PIVOT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodePart {
    /// Both wave edges, inputs `(-u₁(1), u₂(0), -u₂(1))`.
    WaveNode,
    /// The heat triangle, inputs `(w₁(0), w₂(0), w₃(0))`.
    HeatNode,
    /// A single heat edge with inputs `(w(0), w(1))`.
    HeatEdge { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftKind {
    /// Only the input unknowns are set.
    Trace,
    /// Inputs are extended linearly along each edge.
    Affine,
}

#[derive(Debug, Clone)]
pub struct DiscreteBoundaryNode {
    pub part: NodePart,
    pub layout: DofLayout,
    pub l: CsrMatrix<f64>,
    pub g: CsrMatrix<f64>,
    pub k: CsrMatrix<f64>,
    pub weights: Vec<f64>,
    input_dofs: Vec<usize>,
    input_signs: Vec<f64>,
    /// `(tail port, head port)` per layout edge.
    end_ports: Vec<[Option<usize>; 2]>,
}

fn port_rows_matrix(rows: &[Vec<(usize, f64)>], dim: usize) -> CsrMatrix<f64> {
    let t: Vec<_> = rows
        .iter()
        .enumerate()
        .flat_map(|(p, r)| r.iter().map(move |&(c, v)| (p, c, v)))
        .collect();
    CsrMatrix::from_triplets(rows.len(), dim, &t)
}

/// Builds the discrete boundary node for one subnetwork of `spec`. Ports are
/// numbered by the coupled vertices in increasing id order.
pub fn boundary_node(spec: &NetworkSpec, part: NodePart, n: usize) -> Result<DiscreteBoundaryNode> {
    let (inputs, n_ports) = match part {
        NodePart::WaveNode | NodePart::HeatNode => {
            spec.validate()?;
            let kind = if part == NodePart::WaveNode {
                EdgeKind::Wave
            } else {
                EdgeKind::Heat
            };
            let inputs = edge_inputs(spec, Some(kind), EndCondition::Port);
            (inputs, spec.coupled_vertices().len())
        }
        NodePart::HeatEdge { beta } => {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "diffusivity must be positive, got {beta}"
                )));
            }
            let e = EdgeInput {
                kind: EdgeKind::Heat,
                beta,
                tail: EndCondition::Port(0),
                head: EndCondition::Port(1),
                source: 0,
            };
            (vec![e], 2)
        }
    };
    if inputs.is_empty() {
        return Err(Error::InconsistentNetwork(format!("{part:?} has no edges")));
    }
    let asm = assemble(&inputs, 0, n_ports, n)?;
    let dim = asm.weights.len();
    let g = port_rows_matrix(&asm.ports.iter().map(|p| p.g.clone()).collect::<Vec<_>>(), dim);
    let k = port_rows_matrix(&asm.ports.iter().map(|p| p.k.clone()).collect::<Vec<_>>(), dim);
    let port_of = |c: EndCondition| match c {
        EndCondition::Port(p) => Some(p),
        _ => None,
    };
    Ok(DiscreteBoundaryNode {
        part,
        end_ports: inputs.iter().map(|e| [port_of(e.tail), port_of(e.head)]).collect(),
        layout: asm.layout,
        l: asm.generator,
        g,
        k,
        weights: asm.weights,
        input_dofs: asm.ports.iter().map(|p| p.input_dof).collect(),
        input_signs: asm.ports.iter().map(|p| p.input_sign).collect(),
    })
}

impl DiscreteBoundaryNode {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn n_ports(&self) -> usize {
        self.input_dofs.len()
    }

    pub fn input_dofs(&self) -> &[usize] {
        &self.input_dofs
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weights.iter().zip(x).zip(y).map(|((m, a), b)| m * a * b).sum()
    }

    /// `(Re⟨L_h x, x⟩_h, Re⟨G_h x, K_h x⟩)`.
    pub fn passivity_terms(&self, x: &[f64]) -> (f64, f64) {
        let lx = self.l.matvec(x);
        let gx = self.g.matvec(x);
        let kx = self.k.matvec(x);
        (self.inner(&lx, x), gx.iter().zip(&kx).map(|(a, b)| a * b).sum())
    }

    /// A state `x` with `G_h x = u`.
    pub fn lift<T: Scalar>(&self, u: &[T], kind: LiftKind) -> Vec<T> {
        assert_eq!(u.len(), self.n_ports());
        let mut x = vec![T::zero(); self.dim()];
        // value of the physical end trace (u for wave ports, w for heat ports)
        let trace = |p: usize| u[p] * T::from_real(self.input_signs[p]);
        for p in 0..self.n_ports() {
            x[self.input_dofs[p]] = trace(p);
        }
        if kind == LiftKind::Affine {
            let n = self.layout.n;
            let h = self.layout.h();
            for (e, ports) in self.layout.edges.iter().zip(&self.end_ports) {
                let a = ports[0].map_or(T::zero(), trace);
                let b = ports[1].map_or(T::zero(), trace);
                let at = |s: f64| a * T::from_real(1.0 - s) + b * T::from_real(s);
                match e.kind {
                    EdgeKind::Heat => {
                        for j in 1..n {
                            x[e.nodes[j].unwrap()] = at(j as f64 * h);
                        }
                    }
                    EdgeKind::Wave => {
                        for (i, &d) in e.midpoints.iter().enumerate() {
                            x[d] = at((i as f64 + 0.5) * h);
                        }
                    }
                }
            }
        }
        x
    }

    /// Samples smooth edge functions onto the grid. `f(edge, x)` is called with
    /// the layout edge index and returns `(u, v)` on wave edges (only the first
    /// component is used on heat edges, as `w`). Wave port unknowns receive
    /// `u` at the edge end; a shared heat trace takes the value of the last
    /// edge that touches it.
    pub fn sample(&self, f: impl Fn(usize, f64) -> (f64, f64)) -> Vec<f64> {
        let n = self.layout.n;
        let h = self.layout.h();
        let mut x = vec![0.0; self.dim()];
        for (k, e) in self.layout.edges.iter().enumerate() {
            match e.kind {
                EdgeKind::Wave => {
                    for (i, &d) in e.midpoints.iter().enumerate() {
                        x[d] = f(k, (i as f64 + 0.5) * h).0;
                    }
                    for (j, d) in e.nodes.iter().enumerate() {
                        if let Some(d) = d {
                            x[*d] = f(k, j as f64 * h).1;
                        }
                    }
                    for (side, port) in self.end_ports[k].iter().enumerate() {
                        if let Some(p) = port {
                            x[self.input_dofs[*p]] = f(k, side as f64).0;
                        }
                    }
                }
                EdgeKind::Heat => {
                    for j in 0..=n {
                        if let Some(d) = e.nodes[j] {
                            x[d] = f(k, j as f64 * h).0;
                        }
                    }
                }
            }
        }
        x
    }

    /// Factors the transfer problem at `lambda`.
    pub fn transfer_solver(&self, lambda: Complex64) -> Result<TransferSolver<'_>> {
        let dim = self.dim();
        let mut is_input = vec![false; dim];
        for &d in &self.input_dofs {
            is_input[d] = true;
        }
        let free: Vec<usize> = (0..dim).filter(|&i| !is_input[i]).collect();
        let shifted = self
            .l
            .map(Complex64::from_real)
            .shifted(lambda, Complex64::new(-1.0, 0.0));
        let block = shifted.submatrix(&free, &free);
        let lu = BandedLu::factor(&block)?;
        let pivot_ratio = lu.pivot_ratio();
        if pivot_ratio < MIN_PIVOT_RATIO {
            return Err(Error::IllConditioned { pivot_ratio });
        }
        Ok(TransferSolver {
            node: self,
            lambda,
            free,
            shifted,
            lu,
            pivot_ratio,
        })
    }
}

/// Factorization of `(λ - L_h)` restricted to the non-input unknowns.
pub struct TransferSolver<'a> {
    node: &'a DiscreteBoundaryNode,
    lambda: Complex64,
    free: Vec<usize>,
    shifted: CsrMatrix<Complex64>,
    lu: BandedLu<Complex64>,
    pivot_ratio: f64,
}

impl TransferSolver<'_> {
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// The unique state with `(λ - L_h) x = 0` on the non-input rows and `G_h x = u`.
    pub fn state(&self, u: &[Complex64], lift: LiftKind) -> Vec<Complex64> {
        let mut x = self.node.lift(u, lift);
        let r = self.shifted.matvec(&x);
        let mut rhs: Vec<Complex64> = self.free.iter().map(|&i| -r[i]).collect();
        self.lu.solve_in_place(&mut rhs);
        for (&i, y) in self.free.iter().zip(rhs) {
            x[i] += y;
        }
        x
    }

    /// `K_h x` for the state above.
    pub fn output(&self, u: &[Complex64], lift: LiftKind) -> Vec<Complex64> {
        let x = self.state(u, lift);
        self.node.k.map(Complex64::from_real).matvec(&x)
    }

    /// Columns are the outputs for unit inputs.
    pub fn matrix(&self, lift: LiftKind) -> TransferMatrix {
        let m = self.node.n_ports();
        let mut entries = vec![vec![Complex64::new(0.0, 0.0); m]; m];
        for j in 0..m {
            let mut e = vec![Complex64::new(0.0, 0.0); m];
            e[j] = Complex64::new(1.0, 0.0);
            for (i, y) in self.output(&e, lift).into_iter().enumerate() {
                entries[i][j] = y;
            }
        }
        TransferMatrix {
            lambda: self.lambda,
            entries,
        }
    }
}

/// Discrete transfer function applied to one input vector.
pub fn discrete_transfer(node: &DiscreteBoundaryNode, lambda: Complex64, u: &[Complex64]) -> Result<Vec<Complex64>> {
    if u.len() != node.n_ports() {
        return Err(Error::InvalidParameter(format!(
            "expected {} inputs, got {}",
            node.n_ports(),
            u.len()
        )));
    }
    Ok(node.transfer_solver(lambda)?.output(u, LiftKind::Affine))
}

/// Discrete transfer matrix at `lambda`.
pub fn discrete_transfer_matrix(node: &DiscreteBoundaryNode, lambda: Complex64) -> Result<TransferMatrix> {
    Ok(node.transfer_solver(lambda)?.matrix(LiftKind::Affine))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_paper_network, ExteriorBc};
    use crate::transfer::{heat_edge_transfer, network_transfer_p2, HeatEdgeParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec() -> NetworkSpec {
        build_paper_network(1.0, 2.0, 3.0, ExteriorBc::DirichletVelocity).unwrap()
    }

    #[test]
    fn lifts_are_right_inverses() {
        for part in [NodePart::WaveNode, NodePart::HeatNode, NodePart::HeatEdge { beta: 0.7 }] {
            let node = boundary_node(&spec(), part, 16).unwrap();
            let u: Vec<f64> = (0..node.n_ports()).map(|i| 0.3 + i as f64).collect();
            for kind in [LiftKind::Trace, LiftKind::Affine] {
                let x = node.lift(&u, kind);
                assert_eq!(node.g.matvec(&x), u, "{part:?} {kind:?}");
            }
        }
    }

    #[test]
    fn ranks_of_boundary_maps() {
        for part in [NodePart::WaveNode, NodePart::HeatNode] {
            let node = boundary_node(&spec(), part, 16).unwrap();
            assert_eq!(node.n_ports(), 3);
            // rows of G and K touch pairwise distinct unknowns, so both have full row rank
            for m in [&node.g, &node.k] {
                let mut cols: Vec<usize> = (0..3).map(|r| m.row(r).next().unwrap().0).collect();
                cols.sort_unstable();
                cols.dedup();
                assert_eq!(cols.len(), 3);
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let node = boundary_node(&spec(), NodePart::HeatNode, 16).unwrap();
        let y = discrete_transfer(&node, c(1.0, 2.0), &[c(0.0, 0.0); 3]).unwrap();
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn output_is_independent_of_the_lift() {
        for part in [NodePart::WaveNode, NodePart::HeatNode] {
            let node = boundary_node(&spec(), part, 32).unwrap();
            let solver = node.transfer_solver(c(0.5, 3.0)).unwrap();
            let a = solver.matrix(LiftKind::Trace);
            let b = solver.matrix(LiftKind::Affine);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a.get(i, j) - b.get(i, j)).norm() < 1e-10 * a.get(i, i).norm());
                }
            }
        }
    }

    #[test]
    fn heat_edge_close_to_closed_form() {
        let node = boundary_node(&spec(), NodePart::HeatEdge { beta: 1.0 }, 128).unwrap();
        let y = discrete_transfer(&node, c(1.0, 0.0), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = heat_edge_transfer(c(1.0, 0.0), HeatEdgeParams::new(1.0).unwrap()).unwrap();
        assert!((y[0] - p.get(0, 0)).norm() < 1e-4);
        assert!((y[1] - p.get(1, 0)).norm() < 1e-4);
    }

    #[test]
    fn heat_node_close_to_closed_form() {
        let node = boundary_node(&spec(), NodePart::HeatNode, 128).unwrap();
        let lam = c(2.0, 0.0);
        let d = discrete_transfer_matrix(&node, lam).unwrap();
        let p = network_transfer_p2(lam, &HeatEdgeParams::triple([1.0, 2.0, 3.0]).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((d.get(i, j) - p.get(i, j)).norm() < 1e-3, "{i}{j}");
                assert!((d.get(i, j) - d.get(j, i)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn wave_node_clamped_generator_is_singular_at_zero() {
        // constant v on the second wave edge satisfies u = 0 at both ends
        let node = boundary_node(&spec(), NodePart::WaveNode, 16).unwrap();
        assert!(node.transfer_solver(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let node = boundary_node(&spec(), NodePart::HeatNode, 16).unwrap();
        assert!(discrete_transfer(&node, c(1.0, 0.0), &[c(1.0, 0.0)]).is_err());
    }
}
