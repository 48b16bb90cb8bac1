//! Dispatch of a parsed [`RunConfig`] to the experiment drivers, writing every
//! artifact into the output directory.

use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{Integrator, NormSeries, SimParams, SimParamsRecord, TrajectoryRecord};
use crate::io::checkpoint::save_checkpoint;
use crate::io::config::{ExperimentKind, HorizonUnit, RunConfig};
use crate::io::output::{norm_series_tsv, path_tsv, write_atomic, write_json, ErrorRecord};
use crate::lab::{
    absorbing_experiment, box_counting_dimension, comparison_experiment, linearized_response, lipschitz_ratio,
    verify_noise_admissibility_with, zeta_path_functional, AdmissibilityReport, Ensemble, ZetaParams, ZetaReport,
};
use crate::noise::{ergodic_moment_average, ergodic_moment_limit, ou_trajectory, sample_two_sided_wiener};
use crate::spectral::{GradientNorm, Sobolev, SpectralField};

/// Run `cfg`, returning the files written.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = cfg.out_dir().to_path_buf();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut w = Writer { dir: out, files: Vec::new() };
    w.json("config.json", cfg)?;
    match cfg.kind {
        ExperimentKind::Simulate | ExperimentKind::Pullback => trajectory(cfg, &mut w)?,
        ExperimentKind::Absorbing => absorbing(cfg, &mut w)?,
        ExperimentKind::Lipschitz => lipschitz(cfg, &mut w)?,
        ExperimentKind::Comparison => comparison(cfg, &mut w)?,
        ExperimentKind::OuCheck => ou_check(cfg, &mut w)?,
        ExperimentKind::Dimension => dimension(cfg, &mut w)?,
        ExperimentKind::Admissibility => admissibility(cfg, &mut w)?,
    }
    Ok(w.files)
}

/// Run `cfg`; on failure write `error.json` next to the other artifacts.
/// Returns the process exit code.
pub fn run_and_report(cfg: &RunConfig) -> (i32, Option<ErrorRecord>) {
    match run_experiment(cfg) {
        Ok(_) => (0, None),
        Err(e) => {
            let rec = ErrorRecord::from(&e);
            let _ = fs::create_dir_all(cfg.out_dir());
            let _ = write_json(&cfg.out_dir().join("error.json"), &rec);
            (e.exit_code(), Some(rec))
        }
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        write_json(&p, value)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        write_atomic(&p, text.as_bytes())
    }

    fn checkpoint(&mut self, name: &str, field: &SpectralField) -> Result<()> {
        let p = self.path(name);
        save_checkpoint(field, &p)
    }
}

/// Every `thin`-th row, always keeping the last one.
fn thinned(s: &NormSeries, thin: usize) -> NormSeries {
    let n = s.len();
    let keep: Vec<usize> = (0..n).filter(|&k| k % thin == 0 || k + 1 == n).collect();
    NormSeries {
        indices: s.indices.clone(),
        times: keep.iter().map(|&k| s.times[k]).collect(),
        norms: s.norms.iter().map(|c| keep.iter().map(|&k| c[k]).collect()).collect(),
        z: keep.iter().map(|&k| s.z[k]).collect(),
    }
}

fn seed_path(p: &SimParams, seed: u64, t0: f64, t1: f64) -> Result<crate::noise::OuTrajectory> {
    Ok(ou_trajectory(&sample_two_sided_wiener(seed, t0, t1, p.dt)?))
}

#[derive(Serialize)]
struct RunSidecar {
    kind: ExperimentKind,
    seed: u64,
    t_start: f64,
    t_end: f64,
    dt: f64,
    steps: usize,
    thin: usize,
    params: SimParamsRecord,
    indices: Vec<f64>,
    final_norms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorRecord>,
}

#[derive(Serialize)]
struct TrajectoryReport {
    kind: ExperimentKind,
    seeds: Vec<u64>,
    t: f64,
    initial_norm: f64,
    final_norms: Vec<Vec<f64>>,
}

/// Forward run on `[0, T]` (simulate) or pullback over `[−T, 0]` from the
/// first initial field.
fn trajectory(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let p = cfg.sim_params()?;
    let lat = p.lattice.clone();
    let v0 = cfg.initial_fields(&lat)?.swap_remove(0);
    let it = Integrator::new(&p)?;
    let t = cfg.duration();
    let steps = it.steps_in(t)?;
    let indices = cfg.indices();
    let (t0, t1) = match cfg.kind {
        ExperimentKind::Pullback => (-t, 0.0),
        _ => (0.0, t),
    };
    let runs: Vec<(u64, TrajectoryRecord, Result<SpectralField>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut rec = TrajectoryRecord::new(&indices, 0);
            let res = seed_path(&p, seed, t0, t1).and_then(|traj| {
                let start = traj.path().index_of(t0)?;
                it.run(&traj, start, steps, &v0, Some(&mut rec))
            });
            (seed, rec, res)
        })
        .collect();
    let mut first_err = None;
    let mut final_norms = Vec::new();
    for (seed, rec, res) in runs {
        let series = thinned(&rec.norms, cfg.thin);
        w.text(&format!("norms_seed{seed}.tsv"), &norm_series_tsv(&series))?;
        let last: Vec<f64> = rec.norms.norms.iter().map(|c| c.last().copied().unwrap_or(f64::NAN)).collect();
        let error = res.as_ref().err().map(ErrorRecord::from);
        w.json(
            &format!("run_seed{seed}.json"),
            &RunSidecar {
                kind: cfg.kind,
                seed,
                t_start: t0,
                t_end: t1,
                dt: p.dt,
                steps,
                thin: cfg.thin,
                params: (&p).into(),
                indices: indices.clone(),
                final_norms: last.clone(),
                error,
            },
        )?;
        match res {
            Ok(v) => {
                w.checkpoint(&format!("final_seed{seed}.tsns"), &v)?;
                final_norms.push(last);
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    w.json(
        "report.json",
        &TrajectoryReport {
            kind: cfg.kind,
            seeds: cfg.seeds.clone(),
            t,
            initial_norm: v0.norm(),
            final_norms,
        },
    )
}

fn admissibility_report(cfg: &RunConfig, p: &SimParams) -> AdmissibilityReport {
    verify_noise_admissibility_with(&p.noise, p.nu, &p.lattice, cfg.oversample, GradientNorm::Spectral)
}

fn absorbing(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let p = cfg.sim_params()?;
    let horizons: Vec<f64> = match cfg.horizon_unit {
        HorizonUnit::Time => cfg.horizons.clone(),
        HorizonUnit::InverseLambda => {
            let lambda = admissibility_report(cfg, &p).lambda_rate.ok_or_else(|| {
                Error::config("horizon_unit = lambda needs admissible noise (no decay rate otherwise)")
            })?;
            // Round to the time grid so every horizon is a whole number of steps.
            cfg.horizons.iter().map(|h| (h / lambda / p.dt).round() * p.dt).collect()
        }
    };
    let r = absorbing_experiment(&p, &cfg.seeds, &cfg.initial_ensemble(), &horizons, &cfg.indices(), &cfg.entry_radii)?;
    w.json("report.json", &r)
}

fn direction(cfg: &RunConfig, p: &SimParams) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.direction_seed);
    SpectralField::random(&p.lattice, &mut rng, cfg.decay, 1.0)
}

fn lipschitz(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let p = cfg.sim_params()?;
    let v0 = cfg.initial_fields(&p.lattice)?.swap_remove(0);
    let d = direction(cfg, &p);
    let t = cfg.duration();
    let pairs: Vec<(f64, SpectralField)> = cfg.deltas.iter().map(|&dl| (dl, d.clone())).collect();
    let indices = cfg.indices();
    let reports = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let traj = seed_path(&p, seed, -t, 0.0)?;
            let mut r = lipschitz_ratio(&p, &traj, t, &v0, &pairs, &indices)?;
            if cfg.jvp {
                r.linearized = Some(linearized_response(&p, &traj, t, &v0, &d, &indices)?);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    w.json("report.json", &reports)
}

fn comparison(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let p = cfg.sim_params()?;
    let ens = cfg.initial_ensemble();
    let cloud = Ensemble {
        seed: ens.seed.wrapping_add(1),
        ..ens.clone()
    };
    let r = comparison_experiment(&p, &cfg.seeds, &ens, &cloud, cfg.burn_in, cfg.duration(), cfg.window)?;
    w.json("report.json", &r)
}

#[derive(Serialize)]
struct MomentCheck {
    m: f64,
    average: f64,
    limit: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct OuSeed {
    seed: u64,
    moments: Vec<MomentCheck>,
}

#[derive(Serialize)]
struct OuReport {
    t: f64,
    dt: f64,
    per_seed: Vec<OuSeed>,
}

fn ou_check(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let dt = cfg.dt.unwrap_or(0.01);
    let t = cfg.duration();
    let mut per_seed = Vec::new();
    for &seed in &cfg.seeds {
        let traj = ou_trajectory(&sample_two_sided_wiener(seed, 0.0, t, dt)?);
        let mut moments = Vec::new();
        for &m in &cfg.moments {
            let average = ergodic_moment_average(&traj, m, 0.0, t)?;
            let limit = ergodic_moment_limit(m);
            moments.push(MomentCheck {
                m,
                average,
                limit,
                relative_error: (average - limit).abs() / limit,
            });
        }
        if cfg.export_path {
            w.text(&format!("path_seed{seed}.tsv"), &path_tsv(&traj))?;
        }
        per_seed.push(OuSeed { seed, moments });
    }
    w.json("report.json", &OuReport { t, dt, per_seed })
}

/// States every `thin` steps after `burn_in`, pooled over seeds and initial
/// fields.
fn dimension(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let p = cfg.sim_params()?;
    let it = Integrator::new(&p)?;
    let t = cfg.duration();
    if cfg.burn_in >= t {
        return Err(Error::Range(format!("burn_in {} must be shorter than T = {t}", cfg.burn_in)));
    }
    let steps = it.steps_in(t)?;
    let v0s = cfg.initial_fields(&p.lattice)?;
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let traj = seed_path(&p, seed, 0.0, t)?;
            let mut states = Vec::new();
            for v0 in &v0s {
                let mut rec = TrajectoryRecord::new(&[], cfg.thin);
                it.run(&traj, traj.path().origin(), steps, v0, Some(&mut rec))?;
                states.extend(rec.states.into_iter().filter(|(s, _)| *s >= cfg.burn_in).map(|(_, u)| u));
            }
            Ok(states)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<SpectralField> = runs.into_iter().flatten().collect();
    let mut r = box_counting_dimension(&samples, Sobolev(cfg.metric), &cfg.scales, cfg.rank)?;
    r.params = Some((&p).into());
    r.seeds = cfg.seeds.clone();
    w.json("report.json", &r)
}

#[derive(Serialize)]
struct AdmissibilityOutput {
    #[serde(flatten)]
    report: AdmissibilityReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    zeta: Vec<ZetaReport>,
}

fn admissibility(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let p = cfg.sim_params()?;
    let report = admissibility_report(cfg, &p);
    let mut zeta = Vec::new();
    if let (Some(t), Some(alpha), Some(lambda)) = (cfg.t, report.alpha_split, report.lambda_rate) {
        let params = ZetaParams {
            alpha_split: alpha,
            lambda_rate: lambda,
            grad_h_sup: report.grad_h_sup,
            c: cfg.c,
        };
        for &seed in &cfg.seeds {
            let traj = seed_path(&p, seed, -t, 0.0)?;
            zeta.push(zeta_path_functional(&traj, params, t)?);
        }
    }
    w.json("report.json", &AdmissibilityOutput { report, zeta })
}

