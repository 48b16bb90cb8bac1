use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::spectral::lattice::Lattice;
use crate::spectral::transform::Grid;

pub type Vec3c = [Complex64; 3];

pub(crate) const ZERO3: Vec3c = [Complex64 { re: 0.0, im: 0.0 }; 3];

/// Sobolev exponent `s`; norms are `‖A^{s/2} u‖`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
pub struct Sobolev(pub f64);

impl Sobolev {
    pub const H: Sobolev = Sobolev(0.0);
    /// `‖A^{5/8}·‖`
    pub const H54: Sobolev = Sobolev(1.25);
    /// `‖A^{5/4}·‖`
    pub const H52: Sobolev = Sobolev(2.5);
}

/// One stored mode with its coefficient, as written to reports.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModeValue {
    pub j: [i32; 3],
    pub re: [f64; 3],
    pub im: [f64; 3],
}

/// A spectral 3-vector field that need not be solenoidal or mean-free.
#[derive(Clone, Debug)]
pub struct RawSpectrum {
    lattice: Lattice,
    pub mean: [f64; 3],
    coeffs: Vec<Vec3c>,
}

impl RawSpectrum {
    pub fn zeros(lattice: &Lattice) -> Self {
        RawSpectrum {
            lattice: lattice.clone(),
            mean: [0.0; 3],
            coeffs: vec![ZERO3; lattice.mode_count()],
        }
    }

    pub fn from_coeffs(lattice: &Lattice, coeffs: Vec<Vec3c>) -> Self {
        assert_eq!(coeffs.len(), lattice.mode_count());
        RawSpectrum {
            lattice: lattice.clone(),
            mean: [0.0; 3],
            coeffs,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Vec3c] {
        &self.coeffs
    }

    /// Set the coefficient at `j`; the partner `-j` follows by conjugation.
    /// Panics when `j` lies outside the truncation.
    pub fn set(&mut self, j: [i32; 3], value: Vec3c) {
        if j == [0, 0, 0] {
            self.mean = [value[0].re, value[1].re, value[2].re];
            return;
        }
        let (slot, conj) = self
            .lattice
            .slot(j)
            .unwrap_or_else(|| panic!("mode {j:?} outside lattice"));
        self.coeffs[slot] = if conj { value.map(|c| c.conj()) } else { value };
    }

    pub fn get(&self, j: [i32; 3]) -> Vec3c {
        coeff_at(&self.lattice, &self.coeffs, j)
    }

    /// Spectral inner product, including the mean component.
    pub fn inner(&self, other: &RawSpectrum) -> f64 {
        let mean: f64 = (0..3).map(|c| self.mean[c] * other.mean[c]).sum();
        mean + pair_inner(&self.coeffs, &other.coeffs)
    }

    pub fn random<R: Rng + ?Sized>(lattice: &Lattice, rng: &mut R) -> Self {
        let coeffs = lattice
            .modes()
            .iter()
            .map(|_| {
                [0; 3].map(|_| {
                    Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
                })
            })
            .collect();
        let mean = [0; 3].map(|_| rng.sample::<f64, _>(StandardNormal));
        RawSpectrum {
            lattice: lattice.clone(),
            mean,
            coeffs,
        }
    }

    /// Project onto divergence-free, mean-free fields.
    pub fn leray_project(&self) -> SpectralField {
        let coeffs = self
            .lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(j, c)| project_mode(*j, *c))
            .collect();
        SpectralField {
            lattice: self.lattice.clone(),
            coeffs,
        }
    }
}

/// Truncated, divergence-free, zero-mean real velocity field.
///
/// `u(x) = Σ_{j≠0} c_j e^{2πi j·x/L}` with `c_{-j} = conj(c_j)`; only the upper
/// half-space is stored, so reality holds by construction and the `j = 0`
/// slot does not exist. Norms are normalised by volume:
/// `‖u‖² = L^{-3} ∫ |u|² dx = Σ_{j≠0} |c_j|²`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    lattice: Lattice,
    coeffs: Vec<Vec3c>,
}

impl SpectralField {
    pub fn zeros(lattice: &Lattice) -> Self {
        SpectralField {
            lattice: lattice.clone(),
            coeffs: vec![ZERO3; lattice.mode_count()],
        }
    }

    /// Wrap coefficients that are already solenoidal. Callers are trusted;
    /// use [`RawSpectrum::leray_project`] otherwise.
    pub(crate) fn from_coeffs_unchecked(lattice: &Lattice, coeffs: Vec<Vec3c>) -> Self {
        debug_assert_eq!(coeffs.len(), lattice.mode_count());
        SpectralField {
            lattice: lattice.clone(),
            coeffs,
        }
    }

    /// Single conjugate pair `c e^{ik·x} + conj(c) e^{-ik·x}`, projected.
    pub fn single_pair(lattice: &Lattice, j: [i32; 3], amplitude: Vec3c) -> Self {
        let mut raw = RawSpectrum::zeros(lattice);
        raw.set(j, amplitude);
        raw.leray_project()
    }

    /// Random solenoidal field with spectrum `~ (1 + |j|^2)^{-decay}`, rescaled
    /// to the given H-norm.
    pub fn random<R: Rng + ?Sized>(lattice: &Lattice, rng: &mut R, decay: f64, radius: f64) -> Self {
        let mut raw = RawSpectrum::random(lattice, rng);
        for (c, j) in raw.coeffs.iter_mut().zip(lattice.modes()) {
            let w = (1.0 + crate::spectral::lattice::norm_sq_i(*j) as f64).powf(-decay);
            for x in c.iter_mut() {
                *x *= w;
            }
        }
        let u = raw.leray_project();
        let n = u.norm();
        if n > 0.0 {
            u * (radius / n)
        } else {
            u
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Upper half-space coefficients aligned with [`Lattice::modes`].
    pub fn coeffs(&self) -> &[Vec3c] {
        &self.coeffs
    }

    /// Coefficient at any lattice mode, including the implicit lower half.
    pub fn coeff(&self, j: [i32; 3]) -> Vec3c {
        coeff_at(&self.lattice, &self.coeffs, j)
    }

    pub fn to_raw(&self) -> RawSpectrum {
        RawSpectrum {
            lattice: self.lattice.clone(),
            mean: [0.0; 3],
            coeffs: self.coeffs.clone(),
        }
    }

    /// `(u, v) = L^{-3} ∫ u·v dx`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.lattice.check_same(&other.lattice).expect("inner product across lattices");
        pair_inner(&self.coeffs, &other.coeffs)
    }

    pub fn norm(&self) -> f64 {
        self.sobolev_norm(Sobolev::H)
    }

    /// `‖A^{s/2} u‖ = (Σ_{j≠0} μ(j)^s |c_j|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: Sobolev) -> f64 {
        let mu = self.lattice.eigenvalues();
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(mu)
            .map(|(c, &m)| {
                let w = if s.0 == 0.0 { 1.0 } else { m.powf(s.0) };
                w * mag_sq(c)
            })
            .sum();
        (2.0 * sum).sqrt()
    }

    /// `A^p u`: every coefficient multiplied by `μ(j)^p`.
    pub fn fractional_power(&self, p: f64) -> SpectralField {
        let mu = self.lattice.eigenvalues();
        let coeffs = self
            .coeffs
            .iter()
            .zip(mu)
            .map(|(c, &m)| {
                let w = m.powf(p);
                c.map(|x| x * w)
            })
            .collect();
        SpectralField::from_coeffs_unchecked(&self.lattice, coeffs)
    }

    /// Largest `|j·c_j| / (|j| |c_j|)` over modes; zero for an exactly
    /// solenoidal field.
    pub fn divergence_residual(&self) -> f64 {
        let scale = self.coeffs.iter().map(mag_sq).fold(0.0, f64::max).sqrt();
        if scale == 0.0 {
            return 0.0;
        }
        self.lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(j, c)| {
                let jn = (crate::spectral::lattice::norm_sq_i(*j) as f64).sqrt();
                let d = c[0] * j[0] as f64 + c[1] * j[1] as f64 + c[2] * j[2] as f64;
                d.norm() / (jn * scale)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.iter().all(|x| x.re.is_finite() && x.im.is_finite()))
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        self.lattice.check_same(&x.lattice).expect("axpy across lattices");
        for (y, x) in self.coeffs.iter_mut().zip(&x.coeffs) {
            for c in 0..3 {
                y[c] += x[c] * a;
            }
        }
    }

    /// Component values on `grid` (three real arrays of `M^3` points).
    pub fn to_grid(&self, grid: &Grid) -> [Vec<f64>; 3] {
        let comp = |c: usize| -> Vec<Complex64> { self.coeffs.iter().map(|v| v[c]).collect() };
        let (a, b, c) = (comp(0), comp(1), comp(2));
        let mut buf = Vec::new();
        grid.synthesize(&a, Some(&b), &mut buf);
        let u0 = buf.iter().map(|z| z.re).collect();
        let u1 = buf.iter().map(|z| z.im).collect();
        grid.synthesize(&c, None, &mut buf);
        let u2 = buf.iter().map(|z| z.re).collect();
        [u0, u1, u2]
    }

    /// Stored modes with a nonzero coefficient, in storage order.
    pub fn nonzero_modes(&self) -> Vec<ModeValue> {
        self.lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != ZERO3)
            .map(|(j, c)| ModeValue {
                j: *j,
                re: c.map(|x| x.re),
                im: c.map(|x| x.im),
            })
            .collect()
    }

    /// Inverse of [`SpectralField::nonzero_modes`]. Modes given in the lower
    /// half-space are conjugated into place; the result is Leray-projected.
    pub fn from_modes(lattice: &Lattice, modes: &[ModeValue]) -> crate::Result<Self> {
        let mut raw = RawSpectrum::zeros(lattice);
        let mut bad = Vec::new();
        for m in modes {
            if m.j == [0, 0, 0] {
                bad.push("mode (0, 0, 0) cannot carry a coefficient".to_string());
            } else if lattice.slot(m.j).is_none() {
                bad.push(format!("mode {:?} lies outside the truncation", m.j));
            } else {
                raw.set(m.j, [0, 1, 2].map(|i| Complex64::new(m.re[i], m.im[i])));
            }
        }
        if bad.is_empty() {
            Ok(raw.leray_project())
        } else {
            Err(crate::Error::Config(bad))
        }
    }

    pub(crate) fn component(&self, c: usize) -> Vec<Complex64> {
        self.coeffs.iter().map(|v| v[c]).collect()
    }
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.coeffs == other.coeffs
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.lattice.check_same(&rhs.lattice).expect("subtraction across lattices");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
            .collect();
        SpectralField::from_coeffs_unchecked(&self.lattice, coeffs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        let coeffs = self.coeffs.iter().map(|c| c.map(|x| x * a)).collect();
        SpectralField::from_coeffs_unchecked(&self.lattice, coeffs)
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(mut self, a: f64) -> SpectralField {
        for c in self.coeffs.iter_mut() {
            for x in c.iter_mut() {
                *x *= a;
            }
        }
        self
    }
}

/// `(I - j jᵀ/|j|²) c`
pub(crate) fn project_mode(j: [i32; 3], c: Vec3c) -> Vec3c {
    let jf = [j[0] as f64, j[1] as f64, j[2] as f64];
    let jj = jf[0] * jf[0] + jf[1] * jf[1] + jf[2] * jf[2];
    let d = (c[0] * jf[0] + c[1] * jf[1] + c[2] * jf[2]) / jj;
    [c[0] - d * jf[0], c[1] - d * jf[1], c[2] - d * jf[2]]
}

pub(crate) fn mag_sq(c: &Vec3c) -> f64 {
    c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()
}

fn pair_inner(a: &[Vec3c], b: &[Vec3c]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (0..3).map(|c| (x[c] * y[c].conj()).re).sum::<f64>())
        .sum();
    2.0 * s
}

fn coeff_at(lattice: &Lattice, coeffs: &[Vec3c], j: [i32; 3]) -> Vec3c {
    match lattice.slot(j) {
        Some((s, false)) => coeffs[s],
        Some((s, true)) => coeffs[s].map(|c| c.conj()),
        None => ZERO3,
    }
}
