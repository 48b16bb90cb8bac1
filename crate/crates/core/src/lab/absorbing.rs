use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{pullback_with, Integrator, SimParams, SimParamsRecord};
use crate::lab::{spread, Ensemble};
use crate::noise::{ou_trajectory, sample_two_sided_wiener};
use crate::spectral::Sobolev;

/// Pullback radii of one noise path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRadii {
    pub seed: u64,
    /// `radii[i][h]`: max over the ensemble of `‖A^{s_i/2} v(t_h, θ_{−t_h}ω, v0)‖²`.
    pub radii: Vec<Vec<f64>>,
    /// Mean of the last three radii per index when they spread by less than 10%.
    pub plateau: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryTime {
    pub seed: u64,
    pub s: f64,
    pub radius: f64,
    /// Infinite (serialized as `null`) when the radius is never reached.
    #[serde(with = "crate::lab::infinite_as_null")]
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingReport {
    pub params: SimParamsRecord,
    pub seeds: Vec<u64>,
    pub ensemble: Ensemble,
    pub horizons: Vec<f64>,
    pub indices: Vec<f64>,
    pub per_seed: Vec<SeedRadii>,
    pub entry_times: Vec<EntryTime>,
}

/// Smallest tested horizon from which every later radius is within `radius`,
/// with slack `1e−9 + 1e−6·radius`. `+∞` radius enters at 0; never entering
/// gives `+∞`.
pub fn absorbing_entry_time(horizons: &[f64], radii: &[f64], radius: f64) -> f64 {
    if radius == f64::INFINITY {
        return 0.0;
    }
    let bound = radius + 1e-9 + 1e-6 * radius;
    let mut entry = f64::INFINITY;
    for (t, r) in horizons.iter().zip(radii).rev() {
        if *r <= bound {
            entry = *t;
        } else {
            break;
        }
    }
    entry
}

/// Mean of the last three values when their relative spread is below 10%.
pub fn plateau(radii: &[f64]) -> Option<f64> {
    if radii.len() < 3 {
        return None;
    }
    let tail = &radii[radii.len() - 3..];
    (spread(tail) < 0.1).then(|| tail.iter().sum::<f64>() / 3.0)
}

/// Pullback radii at each horizon for each seed, starting from the same
/// initial ensemble. One path per seed covers the longest horizon, so all
/// horizons of a seed see the same noise near `t = 0`.
pub fn absorbing_experiment(
    p: &SimParams,
    seeds: &[u64],
    ensemble: &Ensemble,
    horizons: &[f64],
    indices: &[f64],
    entry_radii: &[f64],
) -> Result<AbsorbingReport> {
    let mut bad = Vec::new();
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] < 0.0 {
        bad.push("horizons must be non-negative and strictly increasing".to_string());
    }
    if seeds.is_empty() {
        bad.push("at least one seed is required".to_string());
    }
    if ensemble.size == 0 {
        bad.push("ensemble must not be empty".to_string());
    }
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    let it = Integrator::new(p)?;
    let members = ensemble.members(&p.lattice);
    let t_max = *horizons.last().unwrap();
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<SeedRadii> {
            let path = sample_two_sided_wiener(seed, -t_max, 0.0, p.dt)?;
            let traj = ou_trajectory(&path);
            let mut radii = vec![vec![0.0f64; horizons.len()]; indices.len()];
            for (h, &t) in horizons.iter().enumerate() {
                for v0 in &members {
                    let v = pullback_with(&it, &traj, t, v0, None)?;
                    for (i, &s) in indices.iter().enumerate() {
                        let r = v.sobolev_norm(Sobolev(s)).powi(2);
                        radii[i][h] = radii[i][h].max(r);
                    }
                }
            }
            let plateau = radii.iter().map(|r| plateau(r)).collect();
            Ok(SeedRadii { seed, radii, plateau })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entry_times = Vec::new();
    for sr in &per_seed {
        for (i, &s) in indices.iter().enumerate() {
            for &radius in entry_radii {
                entry_times.push(EntryTime {
                    seed: sr.seed,
                    s,
                    radius,
                    time: absorbing_entry_time(horizons, &sr.radii[i], radius),
                });
            }
        }
    }
    Ok(AbsorbingReport {
        params: p.into(),
        seeds: seeds.to_vec(),
        ensemble: ensemble.clone(),
        horizons: horizons.to_vec(),
        indices: indices.to_vec(),
        per_seed,
        entry_times,
    })
}
