//! Staggered finite differences on the network edges.
//!
//! Grid: `x_j = j h`, `h = 1/n`. Wave edges carry `u = y_x` at the `n` cell
//! midpoints and `v = y_t` at the `n + 1` nodes; heat edges carry `w` at the
//! nodes. End nodes shared by several edges are a single unknown (continuity
//! is strong) whose equation is the sum of the half-cell balances of all
//! incident edges. The physical boundary fluxes in those half-cells cancel by
//! the Kirchhoff balance, so they never appear.
//!
//! With energy weights `h` on midpoints and interior nodes and `h/2` per
//! incident half-cell on end nodes, summation by parts is exact:
//!
//! ```text
//! ⟨A_h z, z⟩_h = -Σ_heat β h Σ_j ((w_{j+1} - w_j)/h)²  - Σ_absorbing v_end²
//! ```

use super::spec::EdgeKind;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use serde::Serialize;

/// Smallest admissible number of cells per edge.
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EndSide {
    Tail,
    Head,
}

/// Every orientation-dependent sign lives here.
impl EndSide {
    /// Sign of the end flux (`u` or `β w'`) in the vertex balance and in the
    /// half-cell boundary term: heads `+`, tails `-`.
    pub(crate) const fn flux_sign(self) -> f64 {
        match self {
            EndSide::Head => 1.0,
            EndSide::Tail => -1.0,
        }
    }

    /// Sign of the wave input functional `G`: `-u(1)` at a head, `u(0)` at a tail.
    pub(crate) const fn wave_input_sign(self) -> f64 {
        -self.flux_sign()
    }

    /// Sign of the wave output functional `K`: `-v` at either end.
    pub(crate) const fn wave_output_sign(self) -> f64 {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EndCondition {
    /// Shared unknown of a coupled vertex.
    Junction(usize),
    /// Trace eliminated (`v = 0` or `w = 0`).
    Dirichlet,
    /// Zero end flux.
    Neumann,
    /// `u = -v` at a head, `u = v` at a tail (wave only).
    Absorbing,
    /// Boundary-node port.
    Port(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct EdgeInput {
    pub kind: EdgeKind,
    pub beta: f64,
    pub tail: EndCondition,
    pub head: EndCondition,
    pub source: usize,
}

/// Unknowns belonging to one edge.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeDofs {
    /// Index of the edge in the originating network description.
    pub edge: usize,
    pub kind: EdgeKind,
    pub beta: f64,
    /// Wave edges: `u` at the `n` cell midpoints. Empty for heat edges.
    pub midpoints: Vec<usize>,
    /// `v` (wave) or `w` (heat) at nodes `0..=n`; `None` where eliminated.
    pub nodes: Vec<Option<usize>>,
}

/// Map from grid roles to unknown indices.
///
/// For the full five-edge network with `n` cells per edge the dimension is
/// `7n - 2` with a velocity condition at the exterior end (the end node is
/// eliminated) and `7n - 1` with a stress condition.
#[derive(Debug, Clone, Serialize)]
pub struct DofLayout {
    pub n: usize,
    pub dim: usize,
    pub edges: Vec<EdgeDofs>,
    /// One shared unknown per coupled vertex.
    pub junctions: Vec<usize>,
}

impl DofLayout {
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PortRows {
    pub input_dof: usize,
    pub input_sign: f64,
    pub g: Vec<(usize, f64)>,
    pub k: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Assembled {
    pub layout: DofLayout,
    pub generator: CsrMatrix<f64>,
    pub weights: Vec<f64>,
    pub ports: Vec<PortRows>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PortKind {
    Wave,
    Heat,
}

pub(crate) fn assemble(edges: &[EdgeInput], n_junctions: usize, n_ports: usize, n: usize) -> Result<Assembled> {
    if n < MIN_CELLS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_CELLS} cells per edge, got {n}"
        )));
    }
    let h = 1.0 / n as f64;
    let mut weights: Vec<f64> = Vec::new();
    let add = |weights: &mut Vec<f64>, w: f64| {
        weights.push(w);
        weights.len() - 1
    };

    let junctions: Vec<usize> = (0..n_junctions).map(|_| add(&mut weights, 0.0)).collect();

    let mut port_kind: Vec<Option<PortKind>> = vec![None; n_ports];
    let mut heat_port_dof: Vec<Option<usize>> = vec![None; n_ports];
    let mut ports: Vec<Option<PortRows>> = vec![None; n_ports];

    let mut f: Vec<(usize, usize, f64)> = Vec::new();
    let mut layout_edges = Vec::with_capacity(edges.len());

    for e in edges {
        if !(e.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "edge {}: coefficient must be positive",
                e.source
            )));
        }
        let mut nodes: Vec<Option<usize>> = vec![None; n + 1];
        for node in nodes.iter_mut().take(n).skip(1) {
            *node = Some(add(&mut weights, h));
        }
        let mut wave_port_u: [Option<usize>; 2] = [None, None];
        for (side, cond) in [(EndSide::Tail, e.tail), (EndSide::Head, e.head)] {
            let j = if side == EndSide::Tail { 0 } else { n };
            nodes[j] = match cond {
                EndCondition::Junction(k) => {
                    let d = *junctions
                        .get(k)
                        .ok_or_else(|| Error::InconsistentNetwork(format!("junction {k} out of range")))?;
                    weights[d] += 0.5 * h;
                    Some(d)
                }
                EndCondition::Dirichlet => None,
                EndCondition::Neumann => Some(add(&mut weights, 0.5 * h)),
                EndCondition::Absorbing => {
                    if e.kind != EdgeKind::Wave {
                        return Err(Error::InconsistentNetwork("absorbing ends need a wave edge".into()));
                    }
                    Some(add(&mut weights, 0.5 * h))
                }
                EndCondition::Port(p) => {
                    if p >= n_ports {
                        return Err(Error::InconsistentNetwork(format!("port {p} out of range")));
                    }
                    let kind = match e.kind {
                        EdgeKind::Wave => PortKind::Wave,
                        EdgeKind::Heat => PortKind::Heat,
                    };
                    match port_kind[p] {
                        None => port_kind[p] = Some(kind),
                        Some(k) if k == kind && kind == PortKind::Heat => {}
                        Some(_) => {
                            return Err(Error::InconsistentNetwork(format!(
                                "port {p} shared by incompatible edge ends"
                            )))
                        }
                    }
                    match kind {
                        PortKind::Wave => {
                            let v = add(&mut weights, 0.5 * h);
                            let u = add(&mut weights, 0.0);
                            wave_port_u[(side == EndSide::Head) as usize] = Some(u);
                            ports[p] = Some(PortRows {
                                input_dof: u,
                                input_sign: side.wave_input_sign(),
                                g: vec![(u, side.wave_input_sign())],
                                k: vec![(v, side.wave_output_sign())],
                            });
                            Some(v)
                        }
                        PortKind::Heat => {
                            let d = *heat_port_dof[p].get_or_insert_with(|| add(&mut weights, 0.0));
                            weights[d] += 0.5 * h;
                            ports[p].get_or_insert_with(|| PortRows {
                                input_dof: d,
                                input_sign: 1.0,
                                g: vec![(d, 1.0)],
                                k: Vec::new(),
                            });
                            Some(d)
                        }
                    }
                }
            };
        }

        let mut midpoints = Vec::new();
        match e.kind {
            EdgeKind::Wave => {
                midpoints = (0..n).map(|_| add(&mut weights, h)).collect();
                // u_{i+1/2}' = (v_{i+1} - v_i) / h, mass-weighted by h
                for i in 0..n {
                    if let Some(d) = nodes[i + 1] {
                        f.push((midpoints[i], d, 1.0));
                    }
                    if let Some(d) = nodes[i] {
                        f.push((midpoints[i], d, -1.0));
                    }
                }
                for j in 1..n {
                    let d = nodes[j].unwrap();
                    f.push((d, midpoints[j], 1.0));
                    f.push((d, midpoints[j - 1], -1.0));
                }
                for (side, cond) in [(EndSide::Tail, e.tail), (EndSide::Head, e.head)] {
                    let (j, inner) = if side == EndSide::Tail {
                        (0, midpoints[0])
                    } else {
                        (n, midpoints[n - 1])
                    };
                    let Some(d) = nodes[j] else { continue };
                    // half-cell: (h/2) v' = ±(u_end - u_inner); the u_end term is the boundary flux
                    f.push((d, inner, -side.flux_sign()));
                    match cond {
                        EndCondition::Absorbing => f.push((d, d, -1.0)),
                        EndCondition::Port(_) => {
                            let u = wave_port_u[(side == EndSide::Head) as usize].unwrap();
                            f.push((d, u, side.flux_sign()));
                        }
                        _ => {}
                    }
                }
            }
            EdgeKind::Heat => {
                let c = e.beta / h;
                let val = |j: usize| nodes[j];
                for j in 1..n {
                    let d = val(j).unwrap();
                    for (jj, coef) in [(j - 1, c), (j, -2.0 * c), (j + 1, c)] {
                        if let Some(o) = val(jj) {
                            f.push((d, o, coef));
                        }
                    }
                }
                for (side, cond) in [(EndSide::Tail, e.tail), (EndSide::Head, e.head)] {
                    let (j, inner) = if side == EndSide::Tail { (0, 1) } else { (n, n - 1) };
                    let Some(d) = val(j) else { continue };
                    f.push((d, d, -c));
                    if let Some(o) = val(inner) {
                        f.push((d, o, c));
                    }
                    if let EndCondition::Port(p) = cond {
                        // flux_sign * β w'(end) is β times the outward derivative, which the
                        // second-order one-sided stencil gives as (3 w_end - 4 w_1 + w_2) / 2h
                        let (j1, j2) = if side == EndSide::Tail { (1, 2) } else { (n - 1, n - 2) };
                        let scale = e.beta / (2.0 * h);
                        let rows = ports[p].as_mut().unwrap();
                        for (jj, coef) in [(j, 3.0), (j1, -4.0), (j2, 1.0)] {
                            if let Some(o) = val(jj) {
                                rows.k.push((o, scale * coef));
                            }
                        }
                    }
                }
            }
        }

        layout_edges.push(EdgeDofs {
            edge: e.source,
            kind: e.kind,
            beta: e.beta,
            midpoints,
            nodes,
        });
    }

    let ports: Vec<PortRows> = ports
        .into_iter()
        .enumerate()
        .map(|(p, r)| r.ok_or_else(|| Error::InconsistentNetwork(format!("port {p} has no edge end"))))
        .collect::<Result<_>>()?;

    // heat port rows also carry the boundary flux: m θ' = K θ + natural terms
    for (p, rows) in ports.iter().enumerate() {
        if port_kind[p] == Some(PortKind::Heat) {
            for &(c, v) in &rows.k {
                f.push((rows.input_dof, c, v));
            }
        }
    }

    let dim = weights.len();
    for (i, &w) in weights.iter().enumerate() {
        let wave_input = ports
            .iter()
            .zip(&port_kind)
            .any(|(r, k)| r.input_dof == i && *k == Some(PortKind::Wave));
        if w == 0.0 && !wave_input {
            return Err(Error::InconsistentNetwork(format!(
                "unknown {i} has no incident half-cell"
            )));
        }
    }
    let mut generator = CsrMatrix::from_triplets(dim, dim, &f);
    let inv: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { 1.0 / w } else { 0.0 }).collect();
    generator.scale_rows(&inv);

    Ok(Assembled {
        layout: DofLayout {
            n,
            dim,
            edges: layout_edges,
            junctions,
        },
        generator,
        weights,
        ports,
    })
}
