use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Integrator, NormSeries, SimParams, SimParamsRecord};
use crate::lab::{start_index, Ensemble};
use crate::noise::{ou_trajectory, sample_two_sided_wiener, OuTrajectory};
use crate::spectral::{Sobolev, SpectralField};

/// Terminal states of the deterministic system after `burn_in`, started
/// from the ensemble; proxies for points of its global attractor. The noise
/// profile of `p` is ignored.
pub fn attractor_sample_deterministic(p: &SimParams, burn_in: f64, ensemble: &Ensemble) -> Result<Vec<SpectralField>> {
    if !(burn_in > 0.0) {
        return Err(Error::config(format!("burn_in must be positive (got {burn_in})")));
    }
    let it = Integrator::new(&p.deterministic())?;
    let steps = it.steps_in(burn_in)?;
    ensemble
        .members(&p.lattice)
        .par_iter()
        .map(|u0| it.run_deterministic(steps, u0, None))
        .collect()
}

struct CoRun {
    series: NormSeries,
    rho: f64,
    direct: f64,
}

// March v (random) and u (deterministic) together from path index `start`
// to the origin. Over the final `window` steps track sup ‖A^{5/4}(v − u)‖²
// and sup_t min_k ‖A^{5/4}(v − a_k)‖².
#[allow(clippy::too_many_arguments)]
fn co_integrate(
    iv: &Integrator,
    iu: &Integrator,
    traj: &OuTrajectory,
    start: usize,
    window: usize,
    v0: &SpectralField,
    u0: &SpectralField,
    cloud: &[SpectralField],
    record: bool,
) -> Result<CoRun> {
    let path = traj.path();
    let end = path.origin();
    let mut series = NormSeries::new(&[Sobolev::H54.0, Sobolev::H52.0]);
    let (mut v, mut u) = (v0.clone(), u0.clone());
    let (mut rho, mut direct) = (0.0f64, 0.0f64);
    for k in start..=end {
        if k > start {
            v = iv.step(&v, traj.at_index(k - 1), traj.at_index(k));
            u = iu.step(&u, 0.0, 0.0);
            iv.check(&v, k - start, path.time(k))?;
            iu.check(&u, k - start, path.time(k))?;
        }
        let w = &v - &u;
        if record {
            series.push(path.time(k), &w, traj.at_index(k));
        }
        if end - k <= window {
            rho = rho.max(w.sobolev_norm(Sobolev::H52).powi(2));
            if !cloud.is_empty() {
                let d = cloud
                    .iter()
                    .map(|a| (&v - a).sobolev_norm(Sobolev::H52).powi(2))
                    .fold(f64::INFINITY, f64::min);
                direct = direct.max(d);
            }
        }
    }
    Ok(CoRun { series, rho, direct })
}

/// Norms `‖A^{5/8}w‖`, `‖A^{5/4}w‖` of `w = v − u` along the pullback window
/// `[−t, 0]`, where `v` solves the random system from `v0` and `u` the
/// deterministic one from `u0`.
pub fn comparison_norms(
    p: &SimParams,
    traj: &OuTrajectory,
    t: f64,
    v0: &SpectralField,
    u0: &SpectralField,
) -> Result<NormSeries> {
    let iv = Integrator::new(p)?;
    let iu = Integrator::new(&p.deterministic())?;
    let start = start_index(&iv, traj, t)?;
    Ok(co_integrate(&iv, &iu, traj, start, 0, v0, u0, &[], true)?.series)
}

/// Empirical `ρ`: max over `v0s` of `sup ‖A^{5/4}w‖²` over the last `window`
/// time units of a pullback run of length `t_b + window`.
pub fn empirical_rho(
    p: &SimParams,
    traj: &OuTrajectory,
    t_b: f64,
    window: f64,
    v0s: &[SpectralField],
    u0: &SpectralField,
) -> Result<f64> {
    let iv = Integrator::new(p)?;
    let iu = Integrator::new(&p.deterministic())?;
    let start = start_index(&iv, traj, t_b + window)?;
    let w = iv.steps_in(window)?;
    let mut rho = 0.0f64;
    for v0 in v0s {
        rho = rho.max(co_integrate(&iv, &iu, traj, start, w, v0, u0, &[], false)?.rho);
    }
    Ok(rho)
}

/// Direct `H^{5/2}` radius about a sample cloud: max over `v0s` of
/// `sup_t min_k ‖A^{5/4}(v(t) − a_k)‖²` over the last `window` time units.
pub fn direct_radius(
    p: &SimParams,
    traj: &OuTrajectory,
    t_b: f64,
    window: f64,
    v0s: &[SpectralField],
    cloud: &[SpectralField],
) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::config("attractor sample cloud is empty"));
    }
    let iv = Integrator::new(p)?;
    let iu = Integrator::new(&p.deterministic())?;
    let start = start_index(&iv, traj, t_b + window)?;
    let w = iv.steps_in(window)?;
    let mut r = 0.0f64;
    for v0 in v0s {
        r = r.max(co_integrate(&iv, &iu, traj, start, w, v0, &cloud[0], cloud, false)?.direct);
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSeed {
    pub seed: u64,
    /// `ρ` with pullback horizon `t_b + window`.
    pub rho: f64,
    /// `ρ` with pullback horizon `2 t_b + window`.
    pub rho_doubled: f64,
    /// Direct radius about the sample cloud, horizon `t_b + window`.
    pub direct: f64,
    /// `|rho_doubled − rho| / rho_doubled`
    pub horizon_change: f64,
    /// `|direct − rho| / rho`
    pub route_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub params: SimParamsRecord,
    pub seeds: Vec<u64>,
    pub ensemble: Ensemble,
    pub attractor_ensemble: Ensemble,
    pub burn_in: f64,
    pub t_b: f64,
    pub window: f64,
    /// `‖A^{5/4}·‖²` of the sample cloud members.
    pub attractor_radii: Vec<f64>,
    pub per_seed: Vec<ComparisonSeed>,
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / b
    }
}

/// Comparison route against the direct route for each seed.
#[allow(clippy::too_many_arguments)]
pub fn comparison_experiment(
    p: &SimParams,
    seeds: &[u64],
    ensemble: &Ensemble,
    attractor_ensemble: &Ensemble,
    burn_in: f64,
    t_b: f64,
    window: f64,
) -> Result<ComparisonReport> {
    let cloud = attractor_sample_deterministic(p, burn_in, attractor_ensemble)?;
    let v0s = ensemble.members(&p.lattice);
    let iv = Integrator::new(p)?;
    let iu = Integrator::new(&p.deterministic())?;
    let w = iv.steps_in(window)?;
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<ComparisonSeed> {
            let path = sample_two_sided_wiener(seed, -(2.0 * t_b + window), 0.0, p.dt)?;
            let traj = ou_trajectory(&path);
            let short = start_index(&iv, &traj, t_b + window)?;
            let long = start_index(&iv, &traj, 2.0 * t_b + window)?;
            let (mut rho, mut rho_doubled, mut direct) = (0.0f64, 0.0f64, 0.0f64);
            for v0 in &v0s {
                let a = co_integrate(&iv, &iu, &traj, short, w, v0, &cloud[0], &cloud, false)?;
                rho = rho.max(a.rho);
                direct = direct.max(a.direct);
                let b = co_integrate(&iv, &iu, &traj, long, w, v0, &cloud[0], &[], false)?;
                rho_doubled = rho_doubled.max(b.rho);
            }
            Ok(ComparisonSeed {
                seed,
                rho,
                rho_doubled,
                direct,
                horizon_change: relative(rho, rho_doubled),
                route_mismatch: relative(direct, rho),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        params: p.into(),
        seeds: seeds.to_vec(),
        ensemble: ensemble.clone(),
        attractor_ensemble: attractor_ensemble.clone(),
        burn_in,
        t_b,
        window,
        attractor_radii: cloud.iter().map(|a| a.sobolev_norm(Sobolev::H52).powi(2)).collect(),
        per_seed,
    })
}
