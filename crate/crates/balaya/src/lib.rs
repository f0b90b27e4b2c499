//! Finite balayage spaces and a constructive solver for semilinear equations
//! `u + K φ(·, u) = h`.
//!
//! The crate has four layers:
//!
//! - [`markov_core`]: sub-Markov kernels on finite state spaces, the Poisson
//!   transition semigroup, the potential kernel `K = Σ Pᵏ`, the supermedian
//!   cone and the balayage-space criterion.
//! - [`potential_ops`]: harmonic kernels (exit distributions), reduced
//!   functions, killed-chain Green functions, Hunt's formula and the
//!   domination principle.
//! - [`semilinear`]: the solver for `u + K^φ u = h`, truncation operators
//!   `T^φ` / `P^φ`, comparison and subadditivity checks, and the search for
//!   sub-level solutions when the full-level problem is not solvable.
//! - [`continuum`]: closed-form Green functions and transition densities
//!   (Newtonian / Riesz / heat / space-time), their quadrature cross-checks,
//!   and radial discretized operators that feed the semilinear layer.
//!
//! Everything is a pure function of immutable inputs; batch drivers in
//! [`verify`] may fan out over instances freely.

pub mod continuum;
pub mod error;
pub mod gen;
pub mod io;
pub mod markov_core;
pub mod potential_ops;
pub mod quad;
pub mod semilinear;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
