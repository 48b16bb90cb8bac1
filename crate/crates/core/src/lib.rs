//! Pseudo-spectral simulation of the random fractional Navier-Stokes
//! equations on the 3-torus, driven through the Ornstein-Uhlenbeck
//! conjugation `u = v + h z(θ_t ω)`, together with numerical probes of
//! pullback absorption, Lipschitz smoothing and attractor dimension.

pub mod error;
pub mod spectral;

pub use error::{Error, Result};
pub mod integrator;
pub mod noise;
pub mod lab;
pub mod io;
