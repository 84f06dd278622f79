//! Minimum convex-cost network flow on uncapacitated directed networks.
//!
//! The problem: route flow through a directed network so that every node's
//! net outflow equals its supply, all arc flows stay nonnegative, and the
//! sum of per-arc costs is minimal. Each arc carries its own convex,
//! continuously differentiable cost curve with zero cost at zero flow.
//!
//! The solver keeps a spanning-tree basis rooted at a designated node and
//! pivots in the style of the convex simplex method: node potentials are
//! propagated along the tree, reduced gradients price the remaining arcs,
//! and each pivot pushes flow around one fundamental loop with a golden
//! section line search deciding how far to go. Because costs are convex
//! rather than linear, nonbasic arcs may carry positive flow after partial
//! steps; a pivot that makes no progress ends the run with the best iterate
//! seen so far.
//!
//! [`solver::solve`] is the entry point. [`oracle`] holds brute-force
//! references (spanning-tree enumeration, cycle-space grid search, a
//! basis-free optimality residual) used to cross-check the solver.
//!
//! The crate is `no_std` compatible: disable the `std` feature and enable
//! `libm` to supply the float intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("cvxflow-core needs either the `std` feature or the `libm` feature");

mod math;

pub mod cost;
pub mod network;
pub mod oracle;
pub mod solver;

pub use cost::{CostCurve, CostError, CostFn};
pub use network::{
    tree_solve_flows, Arc, IncidenceColumn, Network, NetworkError, OrientedLoop, TreeBasis,
};
pub use oracle::{cycle_space_bruteforce, enumerate_tree_solutions, kkt_residual, OracleError, OracleMethod, OracleResult};
pub use solver::{
    solve, FlowState, NodePotentials, PivotKind, SolveResult, SolverError, SolverParams,
    Termination, TraceRecord,
};
