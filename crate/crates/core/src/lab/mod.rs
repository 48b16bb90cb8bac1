//! Experiments that probe the estimate ladder numerically: noise
//! admissibility, pullback absorption, the deterministic-comparison route,
//! Lipschitz smoothing, the path functional `ζ₁` and box-counting dimension.
//!
//! Every report embeds the simulation parameters and the seeds it used.

mod absorbing;
mod admissibility;
mod comparison;
mod dimension;
mod lipschitz;
mod zeta;

pub use absorbing::{absorbing_entry_time, absorbing_experiment, plateau, AbsorbingReport, EntryTime, SeedRadii};
pub use admissibility::{
    admissibility_from_sup, verify_noise_admissibility, verify_noise_admissibility_with, AdmissibilityReport,
    DEFAULT_OVERSAMPLE,
};
pub use comparison::{
    attractor_sample_deterministic, comparison_experiment, comparison_norms, direct_radius, empirical_rho,
    ComparisonReport,
};
pub use dimension::{box_counting_dimension, box_counting_points, project_modes, DimensionReport};
pub use lipschitz::{linearized_response, lipschitz_ratio, LipschitzEntry, LipschitzReport, MIN_DELTA};
pub use zeta::{zeta_path_functional, ZetaParams, ZetaReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Integrator;
use crate::noise::OuTrajectory;
use crate::spectral::{Lattice, SpectralField};

/// A finite sample of the ball of H-radius `radius`: `size` random solenoidal
/// fields rescaled onto its boundary sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub radius: f64,
    pub size: usize,
    pub seed: u64,
    /// Spectral decay exponent of the random fields, `(1 + |j|²)^{−decay}`.
    pub decay: f64,
}

impl Ensemble {
    pub fn new(radius: f64, size: usize, seed: u64) -> Self {
        Ensemble {
            radius,
            size,
            seed,
            decay: 1.0,
        }
    }

    /// Member `k` uses ChaCha stream `k` of the ensemble seed.
    pub fn members(&self, lattice: &Lattice) -> Vec<SpectralField> {
        (0..self.size)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(k as u64);
                SpectralField::random(lattice, &mut rng, self.decay, self.radius)
            })
            .collect()
    }
}

/// Path index of `−t`.
pub(crate) fn start_index(it: &Integrator, traj: &OuTrajectory, t: f64) -> Result<usize> {
    it.check_alignment(traj)?;
    let steps = it.steps_in(t)?;
    traj.path().origin().checked_sub(steps).ok_or_else(|| {
        Error::Range(format!(
            "pullback horizon {t} exceeds the path window (t_min = {})",
            traj.path().t_min()
        ))
    })
}

/// Relative spread `(max − min) / max` of nonnegative values.
pub(crate) fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi <= 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

/// `+∞` written as `null` and read back.
pub(crate) mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
