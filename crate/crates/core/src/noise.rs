//! Seeded two-sided Wiener paths and the stationary Ornstein-Uhlenbeck process
//! `dz + z dt = dω` sampled exactly on the path grid.
//!
//! Increments to the right of `t = 0` come from ChaCha stream 0, increments to
//! the left from stream 1 and the stationary initial value of `z` from stream
//! 2, so two paths with the same seed and `dt` agree wherever their windows
//! overlap.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STREAM_RIGHT: u64 = 0;
const STREAM_LEFT: u64 = 1;
const STREAM_INIT: u64 = 2;

/// Grid-aligned sample of a two-sided Brownian path with `ω(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    seed: u64,
    dt: f64,
    origin: usize,
    increments: Vec<f64>,
    values: Vec<f64>,
}

fn steps_for(t: f64, dt: f64) -> Option<usize> {
    let r = t.abs() / dt;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample `ω` on `t_min, t_min + dt, …, t_max`.
pub fn sample_two_sided_wiener(seed: u64, t_min: f64, t_max: f64, dt: f64) -> Result<WienerPath> {
    let mut violations = Vec::new();
    if !(dt.is_finite() && dt > 0.0) {
        violations.push(format!("dt must be positive (got {dt})"));
    }
    if !(t_min <= 0.0 && t_max >= 0.0 && t_min.is_finite() && t_max.is_finite()) {
        violations.push(format!("window [{t_min}, {t_max}] must contain 0"));
    }
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    let (left, right) = match (steps_for(t_min, dt), steps_for(t_max, dt)) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return Err(Error::config(format!(
                "grid with dt = {dt} on [{t_min}, {t_max}] does not contain 0"
            )))
        }
    };

    let sd = dt.sqrt();
    let mut increments = vec![0.0; left + right];
    let mut rng = rng_for(seed, STREAM_RIGHT);
    for inc in increments[left..].iter_mut() {
        let x: f64 = StandardNormal.sample(&mut rng);
        *inc = sd * x;
    }
    let mut rng = rng_for(seed, STREAM_LEFT);
    for inc in increments[..left].iter_mut().rev() {
        let x: f64 = StandardNormal.sample(&mut rng);
        *inc = sd * x;
    }
    Ok(WienerPath::assemble(seed, dt, left, increments))
}

impl WienerPath {
    /// Path with prescribed increments; cell `k` spans `[t_k, t_{k+1}]` and
    /// `origin` is the index of `t = 0`.
    pub fn from_increments(seed: u64, dt: f64, origin: usize, increments: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config(format!("dt must be positive (got {dt})")));
        }
        if origin > increments.len() {
            return Err(Error::Range(format!(
                "origin index {origin} beyond {} grid cells",
                increments.len()
            )));
        }
        Ok(WienerPath::assemble(seed, dt, origin, increments))
    }

    fn assemble(seed: u64, dt: f64, origin: usize, increments: Vec<f64>) -> Self {
        let n = increments.len() + 1;
        let mut values = vec![0.0; n];
        for k in origin + 1..n {
            values[k] = values[k - 1] + increments[k - 1];
        }
        for k in (0..origin).rev() {
            values[k] = values[k + 1] - increments[k];
        }
        WienerPath {
            seed,
            dt,
            origin,
            increments,
            values,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of `t = 0`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn t_min(&self) -> f64 {
        self.time(0)
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn time(&self, index: usize) -> f64 {
        (index as f64 - self.origin as f64) * self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Grid index of `t`; range error when `t` is off-grid or outside the window.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let steps = steps_for(t, self.dt)
            .ok_or_else(|| Error::Range(format!("t = {t} is not on the grid of spacing {}", self.dt)))?;
        let idx = if t < 0.0 {
            self.origin.checked_sub(steps)
        } else {
            Some(self.origin + steps)
        };
        idx.filter(|&i| i < self.len()).ok_or_else(|| {
            Error::Range(format!(
                "t = {t} outside path window [{}, {}]",
                self.t_min(),
                self.t_max()
            ))
        })
    }

    /// Path of `θ_s ω`: `t ↦ ω(t + s) − ω(s)`, on the same cells.
    pub fn shift_origin(&self, s: f64) -> Result<WienerPath> {
        let idx = self.index_of(s)?;
        Ok(WienerPath::assemble(self.seed, self.dt, idx, self.increments.clone()))
    }
}

/// How `z` is initialised at the left end of the path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZInit {
    /// Draw from the stationary law `N(0, 1/2)` using the path seed.
    Stationary,
    Fixed(f64),
}

/// Exact samples of `z(θ_t ω)` on the path grid.
///
/// `z_{n+1} = e^{-dt} z_n + ρ ΔW_n / √dt` with `ρ² = (1 − e^{−2dt})/2`, which
/// leaves `N(0, 1/2)` invariant for every `dt`.
#[derive(Clone, Debug)]
pub struct OuTrajectory {
    path: WienerPath,
    z: Vec<f64>,
    init: ZInit,
}

pub fn ou_trajectory(path: &WienerPath) -> OuTrajectory {
    OuTrajectory::new(path, ZInit::Stationary)
}

impl OuTrajectory {
    pub fn new(path: &WienerPath, init: ZInit) -> Self {
        let z0 = match init {
            ZInit::Stationary => {
                let x: f64 = StandardNormal.sample(&mut rng_for(path.seed, STREAM_INIT));
                x * 0.5f64.sqrt()
            }
            ZInit::Fixed(v) => v,
        };
        let dt = path.dt;
        let decay = (-dt).exp();
        let gain = (-(-2.0 * dt).exp_m1() / 2.0).sqrt() / dt.sqrt();
        let mut z = Vec::with_capacity(path.len());
        z.push(z0);
        for (k, inc) in path.increments.iter().enumerate() {
            z.push(decay * z[k] + gain * inc);
        }
        OuTrajectory {
            path: path.clone(),
            z,
            init,
        }
    }

    pub fn path(&self) -> &WienerPath {
        &self.path
    }

    pub fn init_policy(&self) -> ZInit {
        self.init
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn at_index(&self, k: usize) -> f64 {
        self.z[k]
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.z[self.path.index_of(t)?])
    }
}

/// `(1/T) ∫_{t0}^{t1} |z|^m ds` by the trapezoidal rule, `T = t1 − t0`.
///
/// For the stationary process this tends to `Γ((1+m)/2)/√π` as `T → ∞`
/// (see [`ergodic_moment_limit`]).
pub fn ergodic_moment_average(traj: &OuTrajectory, m: f64, t0: f64, t1: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::config(format!("moment order must be positive (got {m})")));
    }
    if !(t1 > t0) {
        return Err(Error::Range(format!("empty averaging window [{t0}, {t1}]")));
    }
    let (a, b) = (traj.path.index_of(t0)?, traj.path.index_of(t1)?);
    let f = |k: usize| traj.z[k].abs().powf(m);
    let interior: f64 = (a + 1..b).map(f).sum();
    let integral = traj.path.dt * (interior + 0.5 * (f(a) + f(b)));
    Ok(integral / (t1 - t0))
}

/// `E|z|^m = Γ((1+m)/2)/√π` for `z ~ N(0, 1/2)`.
pub fn ergodic_moment_limit(m: f64) -> f64 {
    statrs::function::gamma::gamma((1.0 + m) / 2.0) / PI.sqrt()
}

/// `max_{t ∈ [−T, 0]} e^{εt} |z(θ_t ω)|`.
pub fn tempered_envelope(traj: &OuTrajectory, eps: f64, horizon: f64) -> Result<f64> {
    let a = traj.path.index_of(-horizon)?;
    let o = traj.path.origin;
    Ok((a..=o)
        .map(|k| (eps * traj.path.time(k)).exp() * traj.z[k].abs())
        .fold(0.0, f64::max))
}
