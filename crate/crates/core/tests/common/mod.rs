//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use tsns::spectral::{Complex64, RawSpectrum, SpectralField, Vec3c};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `P((u·∇)v)` by direct summation over every pair of full-space modes.
pub fn convolution_oracle(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let lat = u.lattice();
    let n = lat.truncation() as i32;
    let mut full = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            for d in -n..=n {
                if [a, b, d] != [0, 0, 0] {
                    full.push([a, b, d]);
                }
            }
        }
    }
    let inside = |j: [i32; 3]| j.iter().all(|x| x.abs() <= n) && j != [0, 0, 0];
    let mut out = RawSpectrum::zeros(lat);
    for &k in lat.modes() {
        let mut acc: Vec3c = [c(0.0, 0.0); 3];
        for &p in &full {
            let q = [k[0] - p[0], k[1] - p[1], k[2] - p[2]];
            if !inside(q) {
                continue;
            }
            let up = u.coeff(p);
            let vq = v.coeff(q);
            let kq = lat.wavevector(q);
            let adv: Complex64 = (0..3).map(|l| up[l] * c(0.0, kq[l])).sum();
            for i in 0..3 {
                acc[i] += adv * vq[i];
            }
        }
        out.set(k, acc);
    }
    out.leray_project()
}

/// Largest coefficient-wise difference.
pub fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .flat_map(|(x, y)| (0..3).map(move |i| (x[i] - y[i]).norm()))
        .fold(0.0, f64::max)
}

/// Largest coefficient magnitude.
pub fn max_coeff(a: &SpectralField) -> f64 {
    a.coeffs().iter().flat_map(|x| x.iter().map(|z| z.norm())).fold(0.0, f64::max)
}
