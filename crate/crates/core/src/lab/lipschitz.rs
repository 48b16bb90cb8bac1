use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Integrator, SimParams, SimParamsRecord};
use crate::lab::start_index;
use crate::noise::OuTrajectory;
use crate::spectral::{Sobolev, SpectralField};

/// Perturbations below this size are dominated by roundoff.
pub const MIN_DELTA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEntry {
    pub delta: f64,
    /// `R_s(δ) = ‖A^{s/2} v̄(T)‖ / ‖v̄(0)‖`, one per index.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub params: SimParamsRecord,
    pub seeds: Vec<u64>,
    pub horizon: f64,
    pub indices: Vec<f64>,
    pub entries: Vec<LipschitzEntry>,
    /// `max_δ R_s / min_δ R_s` per index.
    pub spread_factor: Vec<f64>,
    /// Every spread factor below 2.
    pub stable: bool,
    /// Tangent-map response per index for the first direction, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linearized: Option<Vec<f64>>,
}

fn unit(direction: &SpectralField) -> Result<SpectralField> {
    let n = direction.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::config("perturbation direction must be a nonzero finite field"));
    }
    Ok(direction * (1.0 / n))
}

/// Pair `v0` with `v0 + δ d` over the pullback window `[−t, 0]` for each
/// `(δ, d)`; directions are normalized to unit H-norm.
pub fn lipschitz_ratio(
    p: &SimParams,
    traj: &OuTrajectory,
    t: f64,
    v0: &SpectralField,
    delta_dirs: &[(f64, SpectralField)],
    indices: &[f64],
) -> Result<LipschitzReport> {
    let mut bad = Vec::new();
    for (delta, d) in delta_dirs {
        if !(*delta >= MIN_DELTA && delta.is_finite()) {
            bad.push(format!("delta = {delta:e} below the roundoff floor {MIN_DELTA:e}"));
        }
        if !(d.norm() > 0.0) {
            bad.push(format!("direction for delta = {delta:e} is zero"));
        }
    }
    if delta_dirs.is_empty() {
        bad.push("at least one perturbation is required".into());
    }
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    let it = Integrator::new(p)?;
    let start = start_index(&it, traj, t)?;
    let steps = it.steps_in(t)?;
    let base = it.run(traj, start, steps, v0, None)?;
    let mut entries = Vec::with_capacity(delta_dirs.len());
    for (delta, d) in delta_dirs {
        let mut v2 = v0.clone();
        v2.axpy(*delta, &unit(d)?);
        let initial = (&v2 - v0).norm();
        let end = it.run(traj, start, steps, &v2, None)?;
        let diff = &end - &base;
        entries.push(LipschitzEntry {
            delta: *delta,
            ratios: indices.iter().map(|&s| diff.sobolev_norm(Sobolev(s)) / initial).collect(),
        });
    }
    let spread_factor: Vec<f64> = (0..indices.len())
        .map(|i| {
            let r: Vec<f64> = entries.iter().map(|e| e.ratios[i]).collect();
            let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            hi / lo
        })
        .collect();
    let stable = spread_factor.iter().all(|&f| f < 2.0);
    Ok(LipschitzReport {
        params: p.into(),
        seeds: vec![traj.path().seed()],
        horizon: t,
        indices: indices.to_vec(),
        entries,
        spread_factor,
        stable,
        linearized: None,
    })
}

/// `‖A^{s/2} Dφ · d‖ / ‖d‖` for the discrete flow map over `[−t, 0]`,
/// propagated with the exact tangent of each step.
pub fn linearized_response(
    p: &SimParams,
    traj: &OuTrajectory,
    t: f64,
    v0: &SpectralField,
    direction: &SpectralField,
    indices: &[f64],
) -> Result<Vec<f64>> {
    let d = unit(direction)?;
    let it = Integrator::new(p)?;
    let start = start_index(&it, traj, t)?;
    let steps = it.steps_in(t)?;
    let (mut v, mut dv) = (v0.clone(), d);
    for k in start..start + steps {
        (v, dv) = it.tangent_step(&v, &dv, traj.at_index(k), traj.at_index(k + 1));
        it.check(&v, k + 1 - start, traj.path().time(k + 1))?;
    }
    Ok(indices.iter().map(|&s| dv.sobolev_norm(Sobolev(s))).collect())
}
