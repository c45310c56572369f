//! Numerical core for the rescaled fast-diffusion equation
//! `v_t = (v^m)_xx + v - v^m`, `m = (n-2)/(n+2)`.
//!
//! Everything here is `no_std` with `alloc`; IO and configuration live in the
//! companion `yamabe-lab` crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod math;

pub mod barriers;
pub mod error;
pub mod executor;
pub mod experiments;
pub mod exponents;
pub mod fit;
pub mod grid;
pub mod ode;
pub mod solver;
pub mod transforms;
pub mod wave;

pub use barriers::{BarrierParams, Barriers, CrossingPoints, Family};
pub use error::{Error, Result};
pub use executor::{Executor, Sequential};
pub use exponents::{gamma_roots, rate_d, Exponents, GammaPair};
pub use grid::{Field, Grid1D};
pub use solver::{BoundaryMode, EvolutionResult, Scheme, Solver, SolverConfig};
pub use wave::{solve_wave, TailFit, WaveProfile};
