//! Escape instantons, pseudo-potentials and the first-order phase boundary of
//! the two-photon driven Kerr oscillator in its classical-stochastic limit.
//!
//! The crate is organized around the pipeline
//!
//! * [`model`] — parameters, 2D primitives, the Kerr / Ornstein-Uhlenbeck
//!   force fields and their Helmholtz data;
//! * [`meanfield`] — fixed points and the vacuum / cat / bistable phase map;
//! * [`instanton`] — the auxiliary Hamiltonian flow, incremental-τ shooting
//!   for least-action escape paths, action and constraint-angle diagnostics;
//! * [`quasipotential`] — the θ dynamics, the Ornstein-Uhlenbeck
//!   pseudo-potential, the frozen-θ ansatz and the analytic phase boundary;
//! * [`langevin`] — Euler-Maruyama sampling of the equivalent stochastic
//!   process (the truncated Wigner layer) and first-passage statistics;
//! * [`lindblad`] — a truncated-Fock Liouvillian steady-state oracle;
//! * [`boundary`] — the three interchangeable boundary-locating strategies
//!   behind one trait, selected by name.

pub mod boundary;
pub mod instanton;
pub mod langevin;
pub mod lindblad;
pub mod meanfield;
pub mod model;
pub mod numerics;
pub mod ode;
pub mod quasipotential;

pub use model::{KerrParams, OUParams, Vec2};
