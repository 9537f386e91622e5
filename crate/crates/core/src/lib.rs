//! Numerical core for a three-dimensional tumor-immune chemotaxis system
//! with Neumann boundary conditions.
//!
//! The crate covers four concerns:
//!
//! * [`grid`] — uniform box lattices, Neumann ghost stencils, and
//!   deterministic reductions (trapezoidal integrals, norms);
//! * [`model`] — model parameters, initial data, maximum-principle bounds
//!   and the global-boundedness certificate built on an auxiliary
//!   exponential weight;
//! * [`solver`] — Crank-Nicolson diffusion, Lax-Friedrichs chemotactic
//!   transport, per-step elliptic solves in the parabolic-elliptic regime,
//!   and the time-integration driver;
//! * [`bound`] — the rigorous lower bound on the blow-up time from the
//!   energy-functional differential inequality, with [`diagnostics`]
//!   supplying the per-step observables.
//!
//! The crate is `no_std`-compatible (with `alloc`); file formats, the CLI
//! and thread-pool wiring live in the companion `kschem` crate. With the
//! `parallel` feature, stencils and reductions run over z-plane slabs and
//! produce bitwise-identical results for any worker count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bound;
mod dd;
pub mod diagnostics;
pub mod grid;
mod math;
pub mod model;
pub mod quad;
pub mod solver;

pub use bound::{BoundConstants, BoundError, PayneConstants, ScriptConstants};
pub use diagnostics::{BlowupReport, DiagnosticsRecord};
pub use grid::{Grid, GridError, GridSpec, ScalarField};
pub use model::{
    CertificateReport, InitialData, MaxBounds, ModelError, ModelParams, PhiCertificate, Regime,
};
pub use solver::{
    NullSink, RunResult, SimState, Sink, SolverConfig, SolverError, Termination,
};
