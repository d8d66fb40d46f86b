//! Exactly divergence-free Scott–Vogelius finite elements for the 2D Oseen problem
//!
//! ```text
//!   -mu Δu + (β·∇)u + σu + ∇p = f,   div u = 0   in Ω = (0,1)²
//! ```
//!
//! discretized with continuous `P_k` velocities and discontinuous `P_{k-1}` pressures on
//! barycentrically refined (Clough–Tocher) triangulations, and stabilized by penalizing
//! interior-facet jumps of `(β·∇)u × n`, `curl((β·∇)u)` and `∇curl((β·∇)u)`.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`]: unit-square triangulations, red and barycentric refinement, facet topology
//! * [`basis`] / [`quadrature`]: reference Lagrange bases with derivatives up to third order
//! * [`problem`]: coefficient fields and the shipped test cases
//! * [`fespace`]: the Scott–Vogelius velocity/pressure pair and discrete fields
//! * [`assembly`]: Galerkin blocks, facet stabilization, loads and Dirichlet lifting
//! * [`solver`]: bordered saddle-point solve with a pressure-mean multiplier
//! * [`analysis`]: error norms, rates, cross sections
//! * [`driver`] / [`cli`]: end-to-end runs and the command-line front end

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cli;
pub mod driver;
pub mod error;
pub mod fespace;
pub mod mesh;
pub mod output;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];
