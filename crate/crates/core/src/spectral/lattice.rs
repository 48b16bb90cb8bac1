use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::transform::Grid;

/// Default retained fraction for quadratic products (2/3 rule).
pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

/// Truncated wavenumber lattice on the torus `[0, L]^3`.
///
/// Modes `j` with `|j_i| <= N` are kept. Only one representative of each
/// conjugate pair is stored: `j3 > 0`, or `j3 == 0 && j2 > 0`, or
/// `j3 == 0 && j2 == 0 && j1 > 0`. The partner `-j` carries the conjugate
/// coefficient implicitly.
#[derive(Clone)]
pub struct Lattice {
    inner: Arc<Inner>,
}

struct Inner {
    length: f64,
    n: usize,
    dealias_fraction: f64,
    modes: Vec<[i32; 3]>,
    mu: Vec<f64>,
    // dense (2N+1)^3 table: slot + 1 for stored modes, -(slot + 1) for partners, 0 for j = 0
    lookup: Vec<i32>,
    grid: Grid,
}

impl Lattice {
    pub fn new(length: f64, n: usize, dealias_fraction: f64) -> Result<Self> {
        let mut violations = Vec::new();
        if !(length.is_finite() && length > 0.0) {
            violations.push(format!("L must be positive (got {length})"));
        }
        if n < 1 {
            violations.push("N must be at least 1".to_string());
        }
        if n > 256 {
            violations.push(format!("N = {n} exceeds the supported maximum 256"));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            violations.push(format!(
                "dealias fraction must lie in (0, 1] (got {dealias_fraction})"
            ));
        }
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }

        let side = 2 * n + 1;
        let ni = n as i32;
        let mut modes = Vec::with_capacity((side * side * side - 1) / 2);
        for j3 in 0..=ni {
            for j2 in -ni..=ni {
                for j1 in -ni..=ni {
                    if is_upper_half([j1, j2, j3]) {
                        modes.push([j1, j2, j3]);
                    }
                }
            }
        }
        let k0 = 2.0 * PI / length;
        let mu = modes
            .iter()
            .map(|j| k0 * k0 * norm_sq_i(*j) as f64)
            .collect();

        let mut lookup = vec![0i32; side * side * side];
        for (slot, j) in modes.iter().enumerate() {
            lookup[dense_index(*j, n)] = slot as i32 + 1;
            lookup[dense_index([-j[0], -j[1], -j[2]], n)] = -(slot as i32 + 1);
        }

        let m = dealiased_grid_size(n, dealias_fraction);
        let grid = Grid::new(m, n, &modes);
        Ok(Lattice {
            inner: Arc::new(Inner {
                length,
                n,
                dealias_fraction,
                modes,
                mu,
                lookup,
                grid,
            }),
        })
    }

    /// `L = 2π`, 2/3 dealiasing.
    pub fn periodic(n: usize) -> Result<Self> {
        Lattice::new(2.0 * PI, n, DEFAULT_DEALIAS)
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn truncation(&self) -> usize {
        self.inner.n
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.inner.dealias_fraction
    }

    /// Stored (upper half-space) modes, in storage order.
    pub fn modes(&self) -> &[[i32; 3]] {
        &self.inner.modes
    }

    pub fn mode_count(&self) -> usize {
        self.inner.modes.len()
    }

    /// Stokes eigenvalues `μ(j) = (2π/L)^2 |j|^2`, aligned with [`Lattice::modes`].
    pub fn eigenvalues(&self) -> &[f64] {
        &self.inner.mu
    }

    /// Physical wavevector `2π j / L`.
    pub fn wavevector(&self, j: [i32; 3]) -> [f64; 3] {
        let k0 = 2.0 * PI / self.inner.length;
        [k0 * j[0] as f64, k0 * j[1] as f64, k0 * j[2] as f64]
    }

    /// First Stokes eigenvalue `4π^2 / L^2`.
    pub fn lambda1(&self) -> f64 {
        let k0 = 2.0 * PI / self.inner.length;
        k0 * k0
    }

    /// Locate `j`: storage slot and whether the stored coefficient must be
    /// conjugated. `None` for `j = 0` or modes outside the truncation.
    pub fn slot(&self, j: [i32; 3]) -> Option<(usize, bool)> {
        let n = self.inner.n as i32;
        if j.iter().any(|c| c.abs() > n) {
            return None;
        }
        let code = self.inner.lookup[dense_index(j, self.inner.n)];
        match code.cmp(&0) {
            std::cmp::Ordering::Greater => Some((code as usize - 1, false)),
            std::cmp::Ordering::Less => Some(((-code) as usize - 1, true)),
            std::cmp::Ordering::Equal => None,
        }
    }

    /// Physical grid used for dealiased quadratic products.
    pub fn grid(&self) -> &Grid {
        &self.inner.grid
    }

    pub fn same_as(&self, other: &Lattice) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    pub(crate) fn check_same(&self, other: &Lattice) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.inner.length == other.inner.length
            && self.inner.n == other.inner.n
            && self.inner.dealias_fraction == other.inner.dealias_fraction
    }
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("length", &self.inner.length)
            .field("n", &self.inner.n)
            .field("dealias_fraction", &self.inner.dealias_fraction)
            .finish()
    }
}

pub(crate) fn is_upper_half(j: [i32; 3]) -> bool {
    j[2] > 0 || (j[2] == 0 && (j[1] > 0 || (j[1] == 0 && j[0] > 0)))
}

pub(crate) fn norm_sq_i(j: [i32; 3]) -> i64 {
    j.iter().map(|&c| (c as i64) * (c as i64)).sum()
}

fn dense_index(j: [i32; 3], n: usize) -> usize {
    let side = 2 * n + 1;
    let off = |c: i32| (c + n as i32) as usize;
    (off(j[0]) * side + off(j[1])) * side + off(j[2])
}

/// Grid points per direction so that products of two degree-`N` fields are
/// alias-free on the retained modes: at least `ceil(2N / fraction) + 1`
/// (`3N + 1` for the 2/3 rule, `2N + 1` at fraction 1), rounded up to the
/// next size of the form `2^a 3^b`.
pub fn dealiased_grid_size(n: usize, dealias_fraction: f64) -> usize {
    let m = (2.0 * n as f64 / dealias_fraction - 1e-9).ceil() as usize + 1;
    next_smooth(m.max(2 * n + 1))
}

fn next_smooth(mut m: usize) -> usize {
    loop {
        let mut r = m;
        while r.is_multiple_of(2) {
            r /= 2;
        }
        while r.is_multiple_of(3) {
            r /= 3;
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
