//! Semiclassical quasiparticle solutions of the one-dimensional nonlocal
//! Fisher-KPP equation
//!
//! ```text
//! u_t = D u_xx + a(x,t) u - kappa u int b(x,y,t) u(y,t) dy
//! ```
//!
//! in the weak-diffusion regime, together with a finite-difference reference
//! solver to check them against.
//!
//! The pipeline is: a [`model::Scenario`] describes coefficients and two
//! Gaussian packets; [`ees`] integrates the moment system of the two
//! quasiparticles; [`asymptotics`] turns the moment trajectory into the
//! leading term and the first two corrections on a grid; [`pde`] solves the
//! equation directly; [`compare`] measures the distances.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod compare;
pub mod ees;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod ode;
pub mod pde;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Grid, GridField};
pub use model::{CoefficientProvider, GaussianPacket, PhysicalParams, Scenario};
