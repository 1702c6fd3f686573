//! Numerics for two-species mass-conserved reaction–diffusion systems of cell
//! polarity type:
//!
//! ```text
//! u_t = D Δu + f(u, v),   τ v_t = Δv − f(u, v),   ∂ν(u, v) = 0
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides the
//! Neumann grid and quadrature ([`grid`]), the reaction kinetics of the three
//! supported models ([`kinetics`]), homogeneous equilibria and the reduced ODE
//! flow ([`equilibrium`]), mode-wise linear analysis ([`linearization`]), a
//! mass-conservative IMEX integrator ([`solver`]) and the measurements built on
//! top of it ([`diagnostics`]).
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod kinetics;
pub mod linalg;
pub mod linearization;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use kinetics::{Model1Params, Model2Params, Model4Params, ModelParams};
