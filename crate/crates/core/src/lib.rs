//! Simulation and pulse-synthesis library for quantum control in dissipative
//! spin systems.
//!
//! A spin obeying `dS/dt = gyro B x S - L S` with a positive-semidefinite
//! damping tensor `L` can be held on any dissipationless trajectory by
//! superimposing a corrective field on the drive; only the norm decays, by
//! the accumulated factor `exp(-F(t))`. This crate provides the corrective
//! field in closed form, deterministic integrators to verify it, and
//! scenario runners for fast three-level transfer, noisy two-level
//! inversion, entangling two Ising-coupled spins, and the energy cost of the
//! correction.

pub mod correction;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod stirap;
pub mod stochastic;
pub mod testutil;
pub mod twospin;

pub use error::{CoreError, Result};
pub use geometry::{
    AngularPath, ComplexMatrix, ComplexState, DissipationTensor, Polynomial, RealVec3,
    SphericalFrame, TimeGrid, Tolerances,
};
