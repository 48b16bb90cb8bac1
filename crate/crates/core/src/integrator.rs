//! Time stepping for the conjugated random system
//!
//! `dv/dt + ν A^{5/4} v + B(v + h z) = f − ν A^{5/4} h z + h z`
//!
//! and for the deterministic system (`h = 0`). The dissipation is integrated
//! exactly per mode; the remainder uses the two-stage exponential
//! Runge-Kutta rule (ETD2, Cox-Matthews) with `z` taken at the two grid
//! endpoints of each step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::OuTrajectory;
use crate::spectral::{nonlinear_self, nonlinear_term, Lattice, ModeValue, Sobolev, SpectralField, Vec3c};

/// Dissipation exponent used throughout (the critical value).
pub const CRITICAL_EXPONENT: f64 = 1.25;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exponential time differencing, second order, Heun-type stages.
    #[default]
    Etd2,
}

#[derive(Clone, Debug)]
pub struct SimParams {
    pub nu: f64,
    pub lattice: Lattice,
    pub dt: f64,
    pub forcing: SpectralField,
    /// Noise profile `h`.
    pub noise: SpectralField,
    pub frac_exponent: f64,
    pub scheme: Scheme,
    /// Include `B`. Switching it off leaves the exactly integrable linear part.
    pub advection: bool,
    /// Runs abort once `‖v‖` exceeds this.
    pub guard: f64,
}

impl SimParams {
    /// Unforced, noise-free parameters.
    pub fn new(nu: f64, lattice: &Lattice, dt: f64) -> Self {
        SimParams {
            nu,
            lattice: lattice.clone(),
            dt,
            forcing: SpectralField::zeros(lattice),
            noise: SpectralField::zeros(lattice),
            frac_exponent: CRITICAL_EXPONENT,
            scheme: Scheme::Etd2,
            advection: true,
            guard: 1e8,
        }
    }

    pub fn with_forcing(mut self, f: SpectralField) -> Self {
        self.forcing = f;
        self
    }

    pub fn with_noise(mut self, h: SpectralField) -> Self {
        self.noise = h;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Same parameters with `h = 0`.
    pub fn deterministic(&self) -> Self {
        let mut p = self.clone();
        p.noise = SpectralField::zeros(&self.lattice);
        p
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.nu.is_finite() && self.nu > 0.0) {
            v.push(format!("nu must be positive (got {})", self.nu));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            v.push(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.frac_exponent.is_finite() && self.frac_exponent > 0.0) {
            v.push(format!("fractional exponent must be positive (got {})", self.frac_exponent));
        }
        if !(self.guard > 0.0) {
            v.push(format!("guard must be positive (got {})", self.guard));
        }
        if !self.forcing.lattice().same_as(&self.lattice) {
            v.push("forcing lives on a different lattice".into());
        }
        if !self.noise.lattice().same_as(&self.lattice) {
            v.push("noise profile lives on a different lattice".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Serializable form of [`SimParams`]; fields are listed by their nonzero modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParamsRecord {
    pub nu: f64,
    pub length: f64,
    pub truncation: usize,
    pub dealias_fraction: f64,
    pub dt: f64,
    pub frac_exponent: f64,
    pub scheme: Scheme,
    pub advection: bool,
    pub guard: f64,
    pub forcing: Vec<ModeValue>,
    pub noise: Vec<ModeValue>,
}

impl From<&SimParams> for SimParamsRecord {
    fn from(p: &SimParams) -> Self {
        SimParamsRecord {
            nu: p.nu,
            length: p.lattice.length(),
            truncation: p.lattice.truncation(),
            dealias_fraction: p.lattice.dealias_fraction(),
            dt: p.dt,
            frac_exponent: p.frac_exponent,
            scheme: p.scheme,
            advection: p.advection,
            guard: p.guard,
            forcing: p.forcing.nonzero_modes(),
            noise: p.noise.nonzero_modes(),
        }
    }
}

impl SimParamsRecord {
    /// Rebuild the parameters (and their lattice).
    pub fn to_params(&self) -> Result<SimParams> {
        let lat = Lattice::new(self.length, self.truncation, self.dealias_fraction)?;
        let mut p = SimParams::new(self.nu, &lat, self.dt)
            .with_forcing(SpectralField::from_modes(&lat, &self.forcing)?)
            .with_noise(SpectralField::from_modes(&lat, &self.noise)?);
        p.frac_exponent = self.frac_exponent;
        p.scheme = self.scheme;
        p.advection = self.advection;
        p.guard = self.guard;
        p.validate()?;
        Ok(p)
    }
}

/// Precomputed per-mode propagators for one parameter set.
#[derive(Clone, Debug)]
pub struct Integrator {
    params: SimParams,
    decay: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    // h − ν A^{α} h
    noise_drive: SpectralField,
    has_noise: bool,
}

/// `dt·φ1(−c dt)` and `dt·φ2(−c dt)` with `φ1(x) = (e^x − 1)/x`,
/// `φ2(x) = (e^x − 1 − x)/x²`.
fn phi_weights(c: f64, dt: f64) -> (f64, f64) {
    let x = -c * dt;
    if x.abs() < 1e-3 {
        let p1 = 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
        let p2 = 0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0;
        (dt * p1, dt * p2)
    } else {
        let em1 = x.exp_m1();
        (dt * em1 / x, dt * (em1 - x) / (x * x))
    }
}

impl Integrator {
    pub fn new(params: &SimParams) -> Result<Self> {
        params.validate()?;
        let mut decay = Vec::with_capacity(params.lattice.mode_count());
        let mut phi1 = Vec::with_capacity(decay.capacity());
        let mut phi2 = Vec::with_capacity(decay.capacity());
        for &mu in params.lattice.eigenvalues() {
            let c = params.nu * mu.powf(params.frac_exponent);
            decay.push((-c * params.dt).exp());
            let (a, b) = phi_weights(c, params.dt);
            phi1.push(a);
            phi2.push(b);
        }
        let h = &params.noise;
        let noise_drive = h - &(&h.fractional_power(params.frac_exponent) * params.nu);
        let has_noise = h.norm() > 0.0;
        Ok(Integrator {
            params: params.clone(),
            decay,
            phi1,
            phi2,
            noise_drive,
            has_noise,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// Explicit part `−B(v + z h) + f + z (h − ν A^{α} h)`.
    fn explicit_part(&self, v: &SpectralField, z: f64) -> SpectralField {
        let noisy = self.has_noise && z != 0.0;
        let mut out = if self.params.advection {
            let b = if noisy {
                let mut w = v.clone();
                w.axpy(z, &self.params.noise);
                nonlinear_self(&w)
            } else {
                nonlinear_self(v)
            };
            b * -1.0
        } else {
            SpectralField::zeros(&self.params.lattice)
        };
        out.axpy(1.0, &self.params.forcing);
        if noisy {
            out.axpy(z, &self.noise_drive);
        }
        out
    }

    /// One step from `v` at noise value `z0` to the next grid point (`z1`).
    pub fn step(&self, v: &SpectralField, z0: f64, z1: f64) -> SpectralField {
        let n0 = self.explicit_part(v, z0);
        let stage: Vec<Vec3c> = v
            .coeffs()
            .iter()
            .zip(n0.coeffs())
            .enumerate()
            .map(|(s, (c, n))| [0, 1, 2].map(|i| c[i] * self.decay[s] + n[i] * self.phi1[s]))
            .collect();
        let a = SpectralField::from_coeffs_unchecked(&self.params.lattice, stage);
        let n1 = self.explicit_part(&a, z1);
        let next: Vec<Vec3c> = a
            .coeffs()
            .iter()
            .zip(n1.coeffs().iter().zip(n0.coeffs()))
            .enumerate()
            .map(|(s, (c, (p, q)))| [0, 1, 2].map(|i| c[i] + (p[i] - q[i]) * self.phi2[s]))
            .collect();
        SpectralField::from_coeffs_unchecked(&self.params.lattice, next)
    }

    /// Step together with the exact derivative of the discrete map applied to
    /// `dv`.
    pub fn tangent_step(&self, v: &SpectralField, dv: &SpectralField, z0: f64, z1: f64) -> (SpectralField, SpectralField) {
        let lat = &self.params.lattice;
        let d_explicit = |w: &SpectralField, d: &SpectralField, z: f64| -> SpectralField {
            if !self.params.advection {
                return SpectralField::zeros(lat);
            }
            let mut base = w.clone();
            if self.has_noise && z != 0.0 {
                base.axpy(z, &self.params.noise);
            }
            let mut s = nonlinear_term(&base, d).expect("same lattice");
            s.axpy(1.0, &nonlinear_term(d, &base).expect("same lattice"));
            s * -1.0
        };
        let combine = |x: &SpectralField, y: &SpectralField, wx: &[f64], wy: &[f64]| -> SpectralField {
            let c = x
                .coeffs()
                .iter()
                .zip(y.coeffs())
                .enumerate()
                .map(|(s, (a, b))| [0, 1, 2].map(|i| a[i] * wx[s] + b[i] * wy[s]))
                .collect();
            SpectralField::from_coeffs_unchecked(lat, c)
        };

        let n0 = self.explicit_part(v, z0);
        let a = combine(v, &n0, &self.decay, &self.phi1);
        let dn0 = d_explicit(v, dv, z0);
        let da = combine(dv, &dn0, &self.decay, &self.phi1);

        let n1 = self.explicit_part(&a, z1);
        let dn1 = d_explicit(&a, &da, z1);
        let ones = vec![1.0; self.decay.len()];
        let next = combine(&a, &(&n1 - &n0), &ones, &self.phi2);
        let dnext = combine(&da, &(&dn1 - &dn0), &ones, &self.phi2);
        (next, dnext)
    }

    pub(crate) fn check(&self, v: &SpectralField, step: usize, time: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::BlowUp {
                step,
                time,
                reason: "non-finite coefficients".into(),
            });
        }
        let n = v.norm();
        if n > self.params.guard {
            return Err(Error::BlowUp {
                step,
                time,
                reason: format!("‖v‖ = {n:e} exceeds guard {:e}", self.params.guard),
            });
        }
        Ok(())
    }

    /// Advance `steps` grid cells starting at path index `start`.
    pub fn run(
        &self,
        traj: &OuTrajectory,
        start: usize,
        steps: usize,
        v0: &SpectralField,
        mut record: Option<&mut TrajectoryRecord>,
    ) -> Result<SpectralField> {
        self.check_alignment(traj)?;
        let path = traj.path();
        if start + steps >= path.len() {
            return Err(Error::Range(format!(
                "run of {steps} steps from t = {} leaves the path window (t_max = {})",
                path.time(start),
                path.t_max()
            )));
        }
        v0.lattice().check_same(&self.params.lattice)?;
        let mut v = v0.clone();
        if let Some(r) = record.as_deref_mut() {
            r.push(path.time(start), &v, traj.at_index(start), 0);
        }
        for n in 0..steps {
            let k = start + n;
            v = self.step(&v, traj.at_index(k), traj.at_index(k + 1));
            let t = path.time(k + 1);
            self.check(&v, n + 1, t)?;
            if let Some(r) = record.as_deref_mut() {
                r.push(t, &v, traj.at_index(k + 1), n + 1);
            }
        }
        Ok(v)
    }

    /// Deterministic run (`z ≡ 0`) for `steps` steps.
    pub fn run_deterministic(&self, steps: usize, u0: &SpectralField, mut record: Option<&mut TrajectoryRecord>) -> Result<SpectralField> {
        u0.lattice().check_same(&self.params.lattice)?;
        let mut u = u0.clone();
        if let Some(r) = record.as_deref_mut() {
            r.push(0.0, &u, 0.0, 0);
        }
        for n in 0..steps {
            u = self.step(&u, 0.0, 0.0);
            let t = (n + 1) as f64 * self.params.dt;
            self.check(&u, n + 1, t)?;
            if let Some(r) = record.as_deref_mut() {
                r.push(t, &u, 0.0, n + 1);
            }
        }
        Ok(u)
    }

    pub(crate) fn check_alignment(&self, traj: &OuTrajectory) -> Result<()> {
        let pd = traj.path().dt();
        if (pd - self.params.dt).abs() > 1e-12 * pd {
            return Err(Error::Range(format!(
                "simulation dt = {} is not aligned with the noise grid dt = {pd}",
                self.params.dt
            )));
        }
        Ok(())
    }

    /// Number of grid steps in a duration; range error when off-grid.
    pub fn steps_in(&self, t: f64) -> Result<usize> {
        let r = t / self.params.dt;
        let n = r.round();
        if t < 0.0 || (r - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Range(format!(
                "duration {t} is not a non-negative multiple of dt = {}",
                self.params.dt
            )));
        }
        Ok(n as usize)
    }
}

/// One ETD2 step of the random system.
pub fn step_random_pde(v: &SpectralField, z_t: f64, z_next: f64, p: &SimParams) -> Result<SpectralField> {
    let it = Integrator::new(p)?;
    let out = it.step(v, z_t, z_next);
    it.check(&out, 1, p.dt)?;
    Ok(out)
}

/// One ETD2 step of the deterministic system (`h` ignored).
pub fn step_deterministic_pde(u: &SpectralField, p: &SimParams) -> Result<SpectralField> {
    step_random_pde(u, 0.0, 0.0, p)
}

/// `v(t, θ_{−t} ω, v0)`: integrate from path time `−t` to `0`.
pub fn pullback_solve(p: &SimParams, traj: &OuTrajectory, t: f64, v0: &SpectralField) -> Result<SpectralField> {
    let it = Integrator::new(p)?;
    pullback_with(&it, traj, t, v0, None)
}

pub(crate) fn pullback_with(
    it: &Integrator,
    traj: &OuTrajectory,
    t: f64,
    v0: &SpectralField,
    record: Option<&mut TrajectoryRecord>,
) -> Result<SpectralField> {
    it.check_alignment(traj)?;
    let steps = it.steps_in(t)?;
    let origin = traj.path().origin();
    let start = origin.checked_sub(steps).ok_or_else(|| {
        Error::Range(format!(
            "pullback horizon {t} exceeds the path window (t_min = {})",
            traj.path().t_min()
        ))
    })?;
    it.run(traj, start, steps, v0, record)
}

/// `‖φ(t+s, θ_{−t−s}ω, v0) − φ(t, θ_{−t}ω, φ(s, θ_{−t−s}ω, v0))‖ / max(1, ‖v0‖)`.
pub fn cocycle_residual(p: &SimParams, traj: &OuTrajectory, t: f64, s: f64, v0: &SpectralField) -> Result<f64> {
    let it = Integrator::new(p)?;
    it.check_alignment(traj)?;
    let (nt, ns) = (it.steps_in(t)?, it.steps_in(s)?);
    let origin = traj.path().origin();
    let start = origin
        .checked_sub(nt + ns)
        .ok_or_else(|| Error::Range(format!("horizon {} exceeds the path window", t + s)))?;
    let whole = it.run(traj, start, nt + ns, v0, None)?;
    let mid = it.run(traj, start, ns, v0, None)?;
    let composed = it.run(traj, start + ns, nt, &mid, None)?;
    Ok((&whole - &composed).norm() / v0.norm().max(1.0))
}

/// Norms `‖A^{s/2}·‖` for a fixed list of `s`, sampled in time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub indices: Vec<f64>,
    pub times: Vec<f64>,
    /// `norms[i][n]`: index `i` at time `n`.
    pub norms: Vec<Vec<f64>>,
    pub z: Vec<f64>,
}

impl NormSeries {
    pub fn new(indices: &[f64]) -> Self {
        NormSeries {
            indices: indices.to_vec(),
            times: Vec::new(),
            norms: vec![Vec::new(); indices.len()],
            z: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, u: &SpectralField, z: f64) {
        self.times.push(t);
        for (i, &s) in self.indices.iter().enumerate() {
            self.norms[i].push(u.sobolev_norm(Sobolev(s)));
        }
        self.z.push(z);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Series for index `s`, if recorded.
    pub fn series(&self, s: f64) -> Option<&[f64]> {
        self.indices
            .iter()
            .position(|&x| x == s)
            .map(|i| self.norms[i].as_slice())
    }
}

/// Norm series every step plus thinned full states.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub norms: NormSeries,
    pub states: Vec<(f64, SpectralField)>,
    pub thin: usize,
}

impl TrajectoryRecord {
    pub fn new(indices: &[f64], thin: usize) -> Self {
        TrajectoryRecord {
            norms: NormSeries::new(indices),
            states: Vec::new(),
            thin,
        }
    }

    fn push(&mut self, t: f64, u: &SpectralField, z: f64, step: usize) {
        self.norms.push(t, u, z);
        if self.thin > 0 && step.is_multiple_of(self.thin) {
            self.states.push((t, u.clone()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_two_sided_wiener, ou_trajectory, OuTrajectory, WienerPath, ZInit};
    use crate::spectral::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shear(lat: &Lattice, a: f64) -> SpectralField {
        // (0, a sin x1, 0)
        SpectralField::single_pair(lat, [1, 0, 0], [c(0.0, 0.0), c(0.0, -a / 2.0), c(0.0, 0.0)])
    }

    #[test]
    fn phi_weights_are_continuous_across_the_series_switch() {
        for &dt in &[0.01, 0.1] {
            for &x in &[-0.999e-3, -1.001e-3, -0.5e-3] {
                let c = -x / dt;
                let (a, b) = phi_weights(c, dt);
                // closed forms evaluated in extended form away from cancellation
                let em1 = x.exp_m1();
                let a_ref = dt * em1 / x;
                let b_ref = dt * (em1 - x) / (x * x);
                assert!((a - a_ref).abs() < 1e-13 * dt);
                assert!((b - b_ref).abs() < 1e-9 * dt);
            }
        }
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let lat = Lattice::periodic(3).unwrap();
        let p = SimParams::new(1.0, &lat, 0.01);
        let u = step_deterministic_pde(&SpectralField::zeros(&lat), &p).unwrap();
        assert_eq!(u.norm(), 0.0);
    }

    #[test]
    fn single_pair_decays_exactly() {
        let lat = Lattice::periodic(4).unwrap();
        let nu = 0.7;
        let dt = 0.05;
        let p = SimParams::new(nu, &lat, dt);
        let v0 = SpectralField::single_pair(&lat, [0, 1, 0], [c(0.3, 0.1), c(0.0, 0.0), c(0.0, -0.2)]);
        let it = Integrator::new(&p).unwrap();
        let u = it.run_deterministic(40, &v0, None).unwrap();
        let factor = (-nu * 40.0 * dt).exp();
        let err = (&u - &(&v0 * factor)).norm() / v0.norm();
        assert!(err < 1e-12, "{err}");
        // random and deterministic paths coincide when h = 0
        let r = step_random_pde(&v0, 0.4, -0.3, &p).unwrap();
        let d = step_deterministic_pde(&v0, &p).unwrap();
        assert_eq!(r, d);
    }

    #[test]
    fn misaligned_dt_is_a_range_error() {
        let lat = Lattice::periodic(2).unwrap();
        let p = SimParams::new(1.0, &lat, 0.02);
        let path = sample_two_sided_wiener(1, -2.0, 0.0, 0.01).unwrap();
        let z = ou_trajectory(&path);
        let v0 = SpectralField::zeros(&lat);
        assert!(matches!(pullback_solve(&p, &z, 1.0, &v0), Err(Error::Range(_))));
        assert!(matches!(cocycle_residual(&p, &z, 1.0, 0.5, &v0), Err(Error::Range(_))));
        let p = p.with_dt(0.01);
        assert!(matches!(pullback_solve(&p, &z, 3.0, &v0), Err(Error::Range(_))));
        assert!(matches!(pullback_solve(&p, &z, 0.005, &v0), Err(Error::Range(_))));
    }

    #[test]
    fn pullback_at_zero_is_identity_and_cocycle_is_exact() {
        let lat = Lattice::periodic(3).unwrap();
        let p = SimParams::new(1.0, &lat, 0.01)
            .with_forcing(shear(&lat, 0.5))
            .with_noise(SpectralField::single_pair(&lat, [0, 0, 1], [c(0.0, -0.1), c(0.0, 0.0), c(0.0, 0.0)]));
        let path = sample_two_sided_wiener(3, -3.0, 0.0, 0.01).unwrap();
        let z = ou_trajectory(&path);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let v0 = SpectralField::random(&lat, &mut rng, 1.0, 2.0);
        assert_eq!(pullback_solve(&p, &z, 0.0, &v0).unwrap(), v0);
        assert_eq!(cocycle_residual(&p, &z, 1.0, 0.0, &v0).unwrap(), 0.0);
        assert!(cocycle_residual(&p, &z, 1.0, 1.0, &v0).unwrap() <= 1e-10);
    }

    #[test]
    fn blow_up_is_reported_with_step() {
        let lat = Lattice::periodic(2).unwrap();
        let mut p = SimParams::new(1.0, &lat, 0.01);
        p.guard = 1.0;
        p.forcing = shear(&lat, 1000.0);
        let path = WienerPath::from_increments(0, 0.01, 0, vec![0.0; 100]).unwrap();
        let z = OuTrajectory::new(&path, ZInit::Fixed(0.0));
        let it = Integrator::new(&p).unwrap();
        match it.run(&z, 0, 100, &SpectralField::zeros(&lat), None) {
            Err(Error::BlowUp { step, .. }) => assert!((1..100).contains(&step)),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
