//! Numerical laboratory for a network of two wave edges and three heat edges
//! coupled through Kirchhoff-type vertex conditions.
//!
//! The crate is organised bottom-up:
//!
//! - [`transfer`]: closed-form transfer functions of the heat edges and the
//!   heat triangle, and the frequency-domain bound `μ(s)/η(s)`.
//! - [`network`]: the metric-graph description, an exactly dissipative
//!   finite-difference discretization, and discrete boundary nodes.
//! - [`spectral`]: resolvent norms along the imaginary axis, kernel checks and
//!   power-law fits.
//! - [`time`]: contractive time stepping and energy-decay measurements.
//! - [`checks`]: the quantitative checks that make up the acceptance report.
//!
//! The `book/` directory next to the workspace explains the model and the
//! numerics chapter by chapter; its code listings are compiled as doc-tests
//! of this crate.

pub mod checks;
pub mod error;
pub mod io;
pub mod linalg;
pub mod network;
pub mod spectral;
pub mod time;
pub mod transfer;

pub use error::{Error, Result};
pub use network::{
    boundary_node, build_paper_network, discrete_transfer, discretize, discretize_heat_dirichlet,
    discretize_wave_damped, DiscreteBoundaryNode, DiscreteSystem, EdgeKind, EdgeSpec, ExteriorBc, NetworkSpec,
    NodePart,
};
pub use spectral::{fit_power_law, kernel_check, resolvent_norm, scan_resolvent, PowerLawFit, ResolventScan};
pub use time::{classical_initial_data, decay_exponent, simulate, DecayFit, EnergyTrace, InitialData};
pub use transfer::{
    eta_lower_bound, heat_edge_transfer, mu, network_transfer_p2, re_p2_on_axis, resolvent_bound_estimate,
    HeatEdgeParams, RealPartMatrix, TransferMatrix,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/transfer.md")]
    pub struct Transfer;
    #[doc = include_str!("../../../book/src/discretization.md")]
    pub struct Discretization;
    #[doc = include_str!("../../../book/src/resolvent.md")]
    pub struct Resolvent;
    #[doc = include_str!("../../../book/src/decay.md")]
    pub struct Decay;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
