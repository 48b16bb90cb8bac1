use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::spectral::{sup_gradient_norm, GradientNorm, Lattice, SpectralField};

/// Oversampling of the physical grid used for `sup |∇h|`.
pub const DEFAULT_OVERSAMPLE: usize = 4;

/// Noise-admissibility check and the splitting constants it induces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub grad_h_sup: f64,
    /// `√π ν λ₁^{5/4}`
    pub threshold: f64,
    pub satisfied: bool,
    /// `α = 1 − sup|∇h| / threshold`; `None` when not satisfied.
    pub alpha_split: Option<f64>,
    /// `β = ν (1 − α/2) λ₁^{5/4} √π / sup|∇h| − 1`; `None` when `h = 0` or not satisfied.
    pub beta_split: Option<f64>,
    /// `λ = α ν λ₁^{5/4} / 4`
    pub lambda_rate: Option<f64>,
    pub nu: f64,
    pub lambda1: f64,
    pub gradient_norm: GradientNorm,
    pub oversample: usize,
}

/// Evaluate `sup |∇h|` (largest singular value, oversample 4) and derive the
/// splitting constants.
pub fn verify_noise_admissibility(h: &SpectralField, nu: f64, lattice: &Lattice) -> AdmissibilityReport {
    verify_noise_admissibility_with(h, nu, lattice, DEFAULT_OVERSAMPLE, GradientNorm::Spectral)
}

pub fn verify_noise_admissibility_with(
    h: &SpectralField,
    nu: f64,
    lattice: &Lattice,
    oversample: usize,
    norm: GradientNorm,
) -> AdmissibilityReport {
    let g = sup_gradient_norm(h, oversample, norm);
    let mut r = admissibility_from_sup(g, nu, lattice.lambda1());
    r.gradient_norm = norm;
    r.oversample = oversample;
    r
}

/// Splitting constants for a given `sup |∇h|`.
pub fn admissibility_from_sup(grad_h_sup: f64, nu: f64, lambda1: f64) -> AdmissibilityReport {
    let scale = nu * lambda1.powf(1.25);
    let threshold = PI.sqrt() * scale;
    let satisfied = grad_h_sup < threshold;
    let (alpha, beta, lambda) = if satisfied {
        let alpha = 1.0 - grad_h_sup / threshold;
        let beta = (grad_h_sup > 0.0).then(|| scale * (1.0 - alpha / 2.0) * PI.sqrt() / grad_h_sup - 1.0);
        (Some(alpha), beta, Some(alpha * scale / 4.0))
    } else {
        (None, None, None)
    };
    AdmissibilityReport {
        grad_h_sup,
        threshold,
        satisfied,
        alpha_split: alpha,
        beta_split: beta,
        lambda_rate: lambda,
        nu,
        lambda1,
        gradient_norm: GradientNorm::Spectral,
        oversample: DEFAULT_OVERSAMPLE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Complex64;

    #[test]
    fn zero_noise() {
        let lat = Lattice::periodic(3).unwrap();
        let r = verify_noise_admissibility(&SpectralField::zeros(&lat), 1.0, &lat);
        assert!((r.threshold - 1.772_453_850_905_516).abs() < 1e-14);
        assert!(r.satisfied);
        assert_eq!(r.alpha_split, Some(1.0));
        assert_eq!(r.lambda_rate, Some(0.25));
        assert_eq!(r.beta_split, None);
    }

    #[test]
    fn half_threshold() {
        let r = admissibility_from_sup(PI.sqrt() / 2.0, 1.0, 1.0);
        assert!((r.alpha_split.unwrap() - 0.5).abs() < 1e-12);
        assert!((r.beta_split.unwrap() - 0.5).abs() < 1e-12);
        assert!((r.lambda_rate.unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_not_admissible() {
        let t = PI.sqrt() * 2.0_f64.powf(1.25);
        let r = admissibility_from_sup(t, 2.0, 1.0);
        assert!(!r.satisfied);
        assert_eq!(r.alpha_split, None);
        assert_eq!(r.beta_split, None);
    }

    #[test]
    fn splitting_identities() {
        for &(g, nu, l1) in &[(0.3, 1.0, 1.0), (0.01, 0.5, 4.0), (1.7, 1.0, 1.0)] {
            let r = admissibility_from_sup(g, nu, l1);
            let a = r.alpha_split.unwrap();
            let b = r.beta_split.unwrap();
            let s = nu * l1.powf(1.25);
            assert!(((1.0 - a) * s - g / PI.sqrt()).abs() < 1e-12);
            assert!((g * (1.0 + b) / PI.sqrt() - s * (1.0 - a / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn shear_profile_from_field() {
        let lat = Lattice::periodic(4).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let h = SpectralField::single_pair(&lat, [1, 0, 0], [z, Complex64::new(0.0, -0.05), z]);
        let r = verify_noise_admissibility(&h, 1.0, &lat);
        assert!((r.grad_h_sup - 0.1).abs() < 1e-12);
        assert!(r.satisfied);
    }
}
