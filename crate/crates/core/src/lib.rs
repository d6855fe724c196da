//! Measurement design and simulation for overlapping quantum tomography.
//!
//! The crate is split along the life cycle of an experiment:
//!
//! - [`marginal_design`]: connectivity (hyper)graphs, the requirement universe a
//!   Pauli set has to cover, cover verification, colouring and recursive
//!   constructions, and analytic bounds on the minimal number of settings.
//! - [`cover_solver`]: exact branch-and-bound and greedy solvers for the
//!   minimal Pauli cover, plus CPLEX LP export for external MILP solvers.
//! - [`direction_design`]: general (non-Pauli) Bloch direction sets, measurement
//!   maps and their pseudoinverses, confidence radii and direction optimisation.
//! - [`tomography_sim`]: state preparation, Born probabilities, count sampling,
//!   linear inversion, maximum-likelihood reconstruction and fidelities.
//!
//! All randomized routines take an explicit `u64` seed and are reproducible.

pub mod cover_solver;
pub mod direction_design;
pub mod json;
pub mod linalg;
pub mod marginal_design;
pub mod tomography_sim;

pub use cover_solver::{CoverInstance, SolveBudget, SolveReport};
pub use direction_design::{BlochDirection, DirectionSet, MeasurementMap};
pub use marginal_design::{ConnectivityHypergraph, PauliAxis, PauliSet, PauliString, Requirement};
pub use tomography_sim::{CountsRecord, DensityMatrix};

