//! Divergence-free spectral fields on the periodic torus and the operators
//! `A^p`, `P` and `B` acting on them.

mod field;
mod lattice;
mod ops;
mod transform;

pub use field::{ModeValue, RawSpectrum, Sobolev, SpectralField, Vec3c};
pub use lattice::{dealiased_grid_size, Lattice, DEFAULT_DEALIAS};
pub use ops::{
    apply_fractional_power, leray_project, nonlinear_self, nonlinear_term, sobolev_norm, sup_gradient_norm,
    GradientNorm,
};
pub use rustfft::num_complex::Complex64;
pub use transform::Grid;
