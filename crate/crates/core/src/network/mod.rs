//! The wave-heat network: its description, its discretization and its two
//! boundary nodes.

mod assemble;
mod node;
mod spec;
mod system;

pub(crate) use assemble::EdgeInput;
pub use assemble::{DofLayout, EdgeDofs, MIN_CELLS};
pub use node::{
    boundary_node, discrete_transfer, discrete_transfer_matrix, DiscreteBoundaryNode, LiftKind, NodePart,
    TransferSolver, MIN_PIVOT_RATIO,
};
pub use spec::{build_paper_network, EdgeKind, EdgeSpec, ExteriorBc, NetworkSpec};
pub use system::{discretize, discretize_heat_dirichlet, discretize_wave_damped, DiscreteSystem, Variant};
