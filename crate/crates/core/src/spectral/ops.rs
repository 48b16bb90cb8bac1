use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::field::{project_mode, RawSpectrum, Sobolev, SpectralField, Vec3c, ZERO3};
use crate::spectral::lattice::dealiased_grid_size;
use crate::spectral::transform::{with_buffers, Grid};

/// Helmholtz-Leray projection `P`.
pub fn leray_project(raw: &RawSpectrum) -> SpectralField {
    raw.leray_project()
}

/// `A^p u`.
pub fn apply_fractional_power(u: &SpectralField, p: f64) -> SpectralField {
    u.fractional_power(p)
}

/// `‖A^{s/2} u‖`.
pub fn sobolev_norm(u: &SpectralField, s: Sobolev) -> f64 {
    u.sobolev_norm(s)
}

/// `B(u, v) = P((u·∇)v)`, dealiased and truncated to the lattice.
pub fn nonlinear_term(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.lattice().check_same(v.lattice())?;
    let lat = u.lattice();
    if [u, v].iter().any(|f| f.coeffs().iter().all(|c| *c == ZERO3)) {
        return Ok(SpectralField::zeros(lat));
    }
    let grid = lat.grid();
    let nm = lat.mode_count();

    // 12 real fields: u_0..u_2 then ∂_k v_i for (i, k) row-major
    let mut spectra: Vec<Vec<Complex64>> = (0..3).map(|c| u.component(c)).collect();
    let kvecs: Vec<[f64; 3]> = lat.modes().iter().map(|&j| lat.wavevector(j)).collect();
    for i in 0..3 {
        for k in 0..3 {
            spectra.push(
                v.coeffs()
                    .iter()
                    .zip(&kvecs)
                    .map(|(c, kv)| Complex64::new(0.0, kv[k]) * c[i])
                    .collect(),
            );
        }
    }
    let mut a = vec![Complex64::new(0.0, 0.0); nm];
    let mut b = vec![Complex64::new(0.0, 0.0); nm];
    let mut c = vec![Complex64::new(0.0, 0.0); nm];
    with_buffers(7, |bufs| {
        let (phys, out) = bufs.split_at_mut(6);
        for (pair, buf) in spectra.chunks(2).zip(phys.iter_mut()) {
            grid.synthesize(&pair[0], Some(&pair[1]), buf);
        }
        let real = |f: usize, p: usize| -> f64 {
            let z = phys[f / 2][p];
            if f.is_multiple_of(2) {
                z.re
            } else {
                z.im
            }
        };
        let out01 = &mut out[0];
        out01.clear();
        out01.resize(grid.len(), Complex64::new(0.0, 0.0));
        let mut r2 = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let uu = [real(0, p), real(1, p), real(2, p)];
            let mut r = [0.0; 3];
            for (i, ri) in r.iter_mut().enumerate() {
                *ri = (0..3).map(|k| uu[k] * real(3 + 3 * i + k, p)).sum();
            }
            out01[p] = Complex64::new(r[0], r[1]);
            r2.push(r[2]);
        }
        grid.analyze(out01, &mut a, Some(&mut b));
        let out2 = &mut phys[0];
        for (z, r) in out2.iter_mut().zip(r2) {
            *z = Complex64::new(r, 0.0);
        }
        grid.analyze(out2, &mut c, None);
    });

    let coeffs = lat
        .modes()
        .iter()
        .enumerate()
        .map(|(s, &j)| project_mode(j, [a[s], b[s], c[s]]))
        .collect();
    Ok(SpectralField::from_coeffs_unchecked(lat, coeffs))
}

/// `B(w, w)` in conservative form `P ∇·(w ⊗ w)`; equal to
/// [`nonlinear_term`]`(w, w)` for solenoidal `w`, with 5 instead of 8 grid
/// transforms.
pub fn nonlinear_self(w: &SpectralField) -> SpectralField {
    let lat = w.lattice();
    let grid = lat.grid();
    let nm = lat.mode_count();

    let (w0, w1, w2) = (w.component(0), w.component(1), w.component(2));
    let zero = || vec![Complex64::new(0.0, 0.0); nm];
    let (mut s00, mut s01, mut s02, mut s11, mut s12, mut s22) = (zero(), zero(), zero(), zero(), zero(), zero());
    with_buffers(3, |bufs| {
        let [g01, g2, p] = bufs else { unreachable!() };
        grid.synthesize(&w0, Some(&w1), g01);
        grid.synthesize(&w2, None, g2);
        // products packed as (00, 01), (02, 11), (12, 22)
        let len = grid.len();
        p.clear();
        p.resize(len, Complex64::new(0.0, 0.0));
        for k in 0..len {
            let (x, y) = (g01[k].re, g01[k].im);
            p[k] = Complex64::new(x * x, x * y);
        }
        grid.analyze(p, &mut s00, Some(&mut s01));
        for k in 0..len {
            let (x, y, z) = (g01[k].re, g01[k].im, g2[k].re);
            p[k] = Complex64::new(x * z, y * y);
        }
        grid.analyze(p, &mut s02, Some(&mut s11));
        for k in 0..len {
            let (y, z) = (g01[k].im, g2[k].re);
            g2[k] = Complex64::new(y * z, z * z);
        }
        grid.analyze(g2, &mut s12, Some(&mut s22));
    });

    let coeffs = lat
        .modes()
        .iter()
        .enumerate()
        .map(|(s, &j)| {
            let k = lat.wavevector(j);
            let ik = k.map(|x| Complex64::new(0.0, x));
            let r: Vec3c = [
                ik[0] * s00[s] + ik[1] * s01[s] + ik[2] * s02[s],
                ik[0] * s01[s] + ik[1] * s11[s] + ik[2] * s12[s],
                ik[0] * s02[s] + ik[1] * s12[s] + ik[2] * s22[s],
            ];
            project_mode(j, r)
        })
        .collect();
    SpectralField::from_coeffs_unchecked(lat, coeffs)
}

/// Pointwise matrix norm applied to `∇h(x)` before taking the supremum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientNorm {
    /// Largest singular value.
    #[default]
    Spectral,
    Frobenius,
}

/// `max_x |∇h(x)|` over the dealiasing grid refined `oversample` times.
pub fn sup_gradient_norm(h: &SpectralField, oversample: usize, norm: GradientNorm) -> f64 {
    assert!(oversample >= 1, "oversample must be at least 1");
    let lat = h.lattice();
    let m = dealiased_grid_size(lat.truncation(), lat.dealias_fraction()) * oversample;
    let grid = Grid::new(m, lat.truncation(), lat.modes());
    if h.coeffs().iter().all(|c| *c == ZERO3) {
        return 0.0;
    }

    let kvecs: Vec<[f64; 3]> = lat.modes().iter().map(|&j| lat.wavevector(j)).collect();
    // ∂_k h_i, row-major in (i, k)
    let spectra: Vec<Vec<Complex64>> = (0..9)
        .map(|ik| {
            let (i, k) = (ik / 3, ik % 3);
            h.coeffs()
                .iter()
                .zip(&kvecs)
                .map(|(c, kv)| Complex64::new(0.0, kv[k]) * c[i])
                .collect()
        })
        .collect();
    let mut phys = Vec::with_capacity(5);
    for pair in spectra.chunks(2) {
        let mut buf = Vec::new();
        grid.synthesize(&pair[0], pair.get(1).map(|v| v.as_slice()), &mut buf);
        phys.push(buf);
    }

    let mut best = 0.0f64;
    for p in 0..grid.len() {
        let mut g = [[0.0; 3]; 3];
        for ik in 0..9 {
            let z = phys[ik / 2][p];
            g[ik / 3][ik % 3] = if ik % 2 == 0 { z.re } else { z.im };
        }
        let v = match norm {
            GradientNorm::Spectral => largest_singular_value(&g),
            GradientNorm::Frobenius => g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt(),
        };
        best = best.max(v);
    }
    best
}

pub(crate) fn largest_singular_value(g: &[[f64; 3]; 3]) -> f64 {
    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = (0..3).map(|k| g[k][i] * g[k][j]).sum();
        }
    }
    sym3_max_eigenvalue(&a).max(0.0).sqrt()
}

// Closed-form largest eigenvalue of a symmetric 3x3 matrix (trigonometric method).
fn sym3_max_eigenvalue(a: &[[f64; 3]; 3]) -> f64 {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        return a[0][0].max(a[1][1]).max(a[2][2]);
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (a[i][j] - if i == j { q } else { 0.0 }) / p;
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::lattice::Lattice;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn singular_value_of_simple_matrices() {
        let g = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!((largest_singular_value(&g) - 2.0).abs() < 1e-14);
        let g = [[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]];
        // singular values of [[1,2],[0,1]] are sqrt(3 ± 2 sqrt 2) = 1 ± sqrt 2
        assert!((largest_singular_value(&g) - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        let g = [[3.0, 0.0, 0.0], [0.0, -4.0, 0.0], [0.0, 0.0, 1.0]];
        assert!((largest_singular_value(&g) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_sup_of_shear_mode() {
        // h = (0, a sin x1, 0) = (0, -i a/2, 0) e^{i x1} + cc
        let lat = Lattice::periodic(3).unwrap();
        let a = 0.7;
        let h = SpectralField::single_pair(&lat, [1, 0, 0], [c(0.0, 0.0), c(0.0, -a / 2.0), c(0.0, 0.0)]);
        for o in [1, 2, 4] {
            let g = sup_gradient_norm(&h, o, GradientNorm::Spectral);
            assert!((g - a).abs() < 1e-12, "oversample {o}: {g}");
        }
        assert_eq!(sup_gradient_norm(&SpectralField::zeros(&lat), 4, GradientNorm::Spectral), 0.0);
    }

    #[test]
    fn oversampling_never_decreases_the_sup() {
        let lat = Lattice::periodic(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = SpectralField::random(&lat, &mut rng, 1.0, 1.0);
        let mut prev = 0.0;
        for o in [1, 2, 4] {
            let g = sup_gradient_norm(&h, o, GradientNorm::Spectral);
            assert!(g >= prev);
            prev = g;
        }
        let f = sup_gradient_norm(&h, 2, GradientNorm::Frobenius);
        assert!(f >= sup_gradient_norm(&h, 2, GradientNorm::Spectral));
    }

    #[test]
    fn conservative_and_advective_forms_agree() {
        let lat = Lattice::periodic(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = SpectralField::random(&lat, &mut rng, 1.0, 2.0);
        let a = nonlinear_term(&u, &u).unwrap();
        let b = nonlinear_self(&u);
        let d = (&a - &b).norm();
        assert!(d <= 1e-12 * a.norm(), "{d}");
    }

    #[test]
    fn lattice_mismatch_is_rejected() {
        let u = SpectralField::zeros(&Lattice::periodic(2).unwrap());
        let v = SpectralField::zeros(&Lattice::periodic(3).unwrap());
        assert!(matches!(nonlinear_term(&u, &v), Err(crate::Error::LatticeMismatch(_))));
    }
}
