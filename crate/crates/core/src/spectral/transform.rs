//! Pruned 3D FFTs between half-space spectra and a uniform physical grid.
//!
//! Two real fields are packed into one complex transform (real part / imaginary
//! part). Only lines that touch the retained band `|j_i| <= N` are transformed.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static POOL: RefCell<Vec<Vec<Complex64>>> = const { RefCell::new(Vec::new()) };
}

/// Borrow `k` grid-sized buffers from a per-thread pool for the duration of `f`.
pub(crate) fn with_buffers<R>(k: usize, f: impl FnOnce(&mut [Vec<Complex64>]) -> R) -> R {
    let mut bufs: Vec<Vec<Complex64>> = POOL.with(|p| {
        let mut p = p.borrow_mut();
        (0..k).map(|_| p.pop().unwrap_or_default()).collect()
    });
    let out = f(&mut bufs);
    POOL.with(|p| p.borrow_mut().extend(bufs));
    out
}

/// Uniform `M^3` grid carrying spectra supported on `|j_i| <= N`.
#[derive(Clone)]
pub struct Grid {
    m: usize,
    band: Vec<usize>,
    plus: Vec<usize>,
    minus: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(m: usize, n: usize, modes: &[[i32; 3]]) -> Self {
        assert!(m > 2 * n, "grid of {m} points cannot resolve |j| <= {n}");
        let wrap = |c: i32| -> usize { c.rem_euclid(m as i32) as usize };
        let flat = |j: [i32; 3]| (wrap(j[0]) * m + wrap(j[1])) * m + wrap(j[2]);
        let plus = modes.iter().map(|&j| flat(j)).collect();
        let minus = modes.iter().map(|&j| flat([-j[0], -j[1], -j[2]])).collect();
        let mut band: Vec<usize> = (0..=n).collect();
        band.extend(m - n..m);
        let mut planner = FftPlanner::new();
        Grid {
            m,
            band,
            plus,
            minus,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    /// Points per direction.
    pub fn points(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Evaluate `a` (real part) and `b` (imaginary part) on the grid.
    ///
    /// The spectra are upper half-space coefficients of real fields with
    /// `u(x) = Σ_j c_j e^{i k_j·x}`.
    pub fn synthesize(&self, a: &[Complex64], b: Option<&[Complex64]>, buf: &mut Vec<Complex64>) {
        debug_assert_eq!(a.len(), self.plus.len());
        buf.clear();
        buf.resize(self.len(), Complex64::new(0.0, 0.0));
        let i = Complex64::new(0.0, 1.0);
        match b {
            Some(b) => {
                for s in 0..a.len() {
                    buf[self.plus[s]] = a[s] + i * b[s];
                    buf[self.minus[s]] = a[s].conj() + i * b[s].conj();
                }
            }
            None => {
                for s in 0..a.len() {
                    buf[self.plus[s]] = a[s];
                    buf[self.minus[s]] = a[s].conj();
                }
            }
        }
        self.inverse_3d(buf);
    }

    /// Inverse of [`Grid::synthesize`] restricted to the retained band.
    /// `buf` holds a real field in `re` and optionally a second one in `im`;
    /// it is overwritten.
    pub fn analyze(&self, buf: &mut [Complex64], a: &mut [Complex64], b: Option<&mut [Complex64]>) {
        debug_assert_eq!(buf.len(), self.len());
        self.forward_3d(buf);
        let scale = 1.0 / self.len() as f64;
        match b {
            Some(b) => {
                for s in 0..a.len() {
                    let xp = buf[self.plus[s]] * scale;
                    let xm = buf[self.minus[s]].conj() * scale;
                    a[s] = (xp + xm) * 0.5;
                    b[s] = (xp - xm) * Complex64::new(0.0, -0.5);
                }
            }
            None => {
                for s in 0..a.len() {
                    let xp = buf[self.plus[s]] * scale;
                    let xm = buf[self.minus[s]].conj() * scale;
                    a[s] = (xp + xm) * 0.5;
                }
            }
        }
    }

    fn inverse_3d(&self, buf: &mut [Complex64]) {
        let fft = &self.inverse;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        self.contiguous_pass(buf, fft.as_ref(), &mut scratch);
        self.middle_pass(buf, fft.as_ref(), &mut scratch);
        self.outer_pass(buf, fft.as_ref(), &mut scratch);
    }

    fn forward_3d(&self, buf: &mut [Complex64]) {
        let fft = &self.forward;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        self.outer_pass(buf, fft.as_ref(), &mut scratch);
        self.middle_pass(buf, fft.as_ref(), &mut scratch);
        self.contiguous_pass(buf, fft.as_ref(), &mut scratch);
    }

    // axis 3, only lines whose (i1, i2) both lie in the band
    fn contiguous_pass(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>, scratch: &mut [Complex64]) {
        let m = self.m;
        for &i1 in &self.band {
            for &i2 in &self.band {
                let off = (i1 * m + i2) * m;
                fft.process_with_scratch(&mut buf[off..off + m], scratch);
            }
        }
    }

    // axis 2, only planes whose i1 lies in the band
    fn middle_pass(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>, scratch: &mut [Complex64]) {
        let m = self.m;
        let mut tmp = vec![Complex64::new(0.0, 0.0); m * m];
        for &i1 in &self.band {
            let plane = &mut buf[i1 * m * m..(i1 + 1) * m * m];
            for i2 in 0..m {
                for i3 in 0..m {
                    tmp[i3 * m + i2] = plane[i2 * m + i3];
                }
            }
            fft.process_with_scratch(&mut tmp, scratch);
            for i2 in 0..m {
                for i3 in 0..m {
                    plane[i2 * m + i3] = tmp[i3 * m + i2];
                }
            }
        }
    }

    // axis 1, all lines
    fn outer_pass(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>, scratch: &mut [Complex64]) {
        let m = self.m;
        let mut tmp = vec![Complex64::new(0.0, 0.0); m * m];
        for i2 in 0..m {
            for i1 in 0..m {
                let row = (i1 * m + i2) * m;
                for i3 in 0..m {
                    tmp[i3 * m + i1] = buf[row + i3];
                }
            }
            fft.process_with_scratch(&mut tmp, scratch);
            for i1 in 0..m {
                let row = (i1 * m + i2) * m;
                for i3 in 0..m {
                    buf[row + i3] = tmp[i3 * m + i1];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::lattice::Lattice;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn synthesize_matches_direct_sum() {
        let lat = Lattice::periodic(2).unwrap();
        let grid = lat.grid();
        let n = lat.mode_count();
        let a: Vec<_> = (0..n).map(|s| c((s as f64).sin(), (s as f64 * 0.7).cos())).collect();
        let b: Vec<_> = (0..n).map(|s| c((s as f64 * 1.3).cos(), 0.1 * s as f64)).collect();
        let mut buf = Vec::new();
        grid.synthesize(&a, Some(&b), &mut buf);
        let m = grid.points();
        for (i1, i2, i3) in [(0, 0, 0), (1, 2, 3), (4, 0, 6), (6, 6, 6)] {
            let x = [i1, i2, i3].map(|i| 2.0 * PI * i as f64 / m as f64);
            let mut ua = 0.0;
            let mut ub = 0.0;
            for (s, j) in lat.modes().iter().enumerate() {
                let ph = j[0] as f64 * x[0] + j[1] as f64 * x[1] + j[2] as f64 * x[2];
                let e = c(ph.cos(), ph.sin());
                ua += 2.0 * (a[s] * e).re;
                ub += 2.0 * (b[s] * e).re;
            }
            let v = buf[(i1 * m + i2) * m + i3];
            assert!((v.re - ua).abs() < 1e-12, "{} vs {}", v.re, ua);
            assert!((v.im - ub).abs() < 1e-12);
        }
    }

    #[test]
    fn analyze_inverts_synthesize() {
        let lat = Lattice::periodic(3).unwrap();
        let grid = lat.grid();
        let n = lat.mode_count();
        let a: Vec<_> = (0..n).map(|s| c((s as f64 * 0.37).sin(), (s as f64).cos())).collect();
        let b: Vec<_> = (0..n).map(|s| c(1.0 / (1.0 + s as f64), -0.5)).collect();
        let mut buf = Vec::new();
        grid.synthesize(&a, Some(&b), &mut buf);
        let mut ra = vec![c(0.0, 0.0); n];
        let mut rb = vec![c(0.0, 0.0); n];
        grid.analyze(&mut buf, &mut ra, Some(&mut rb));
        for s in 0..n {
            assert!((ra[s] - a[s]).norm() < 1e-13);
            assert!((rb[s] - b[s]).norm() < 1e-13);
        }
    }
}
