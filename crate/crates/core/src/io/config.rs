//! Run configuration in TOML. Every key belongs to exactly one table
//! (`[run]`, `[physics]`, `[forcing]`, `[noise]`, `[initial]`, `[analysis]`);
//! top-level keys are accepted for any table. Command-line overrides use the
//! same keys with plain-text values, lists comma-separated.
//!
//! ```toml
//! [run]
//! kind = "ou-check"
//! seed = 1
//! T = 100
//! dt = 0.01
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SimParams;
use crate::io::checkpoint::load_checkpoint_on;
use crate::lab::Ensemble;
use crate::spectral::{Complex64, Lattice, SpectralField, DEFAULT_DEALIAS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Pullback,
    Absorbing,
    Lipschitz,
    Comparison,
    OuCheck,
    Dimension,
    Admissibility,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Simulate,
        ExperimentKind::Pullback,
        ExperimentKind::Absorbing,
        ExperimentKind::Lipschitz,
        ExperimentKind::Comparison,
        ExperimentKind::OuCheck,
        ExperimentKind::Dimension,
        ExperimentKind::Admissibility,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Pullback => "pullback",
            ExperimentKind::Absorbing => "absorbing",
            ExperimentKind::Lipschitz => "lipschitz",
            ExperimentKind::Comparison => "comparison",
            ExperimentKind::OuCheck => "ou-check",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::Admissibility => "admissibility",
        }
    }

    fn needs_duration(self) -> bool {
        !matches!(self, ExperimentKind::Absorbing | ExperimentKind::Admissibility)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown experiment kind '{s}'"))
    }
}

/// Where a forcing or noise profile comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    None,
    /// `(a sin(2π x₂/L), 0, 0)`
    Kolmogorov { amp: f64 },
    /// `(0, 0, a sin(2π x₁/L))`
    Shear { amp: f64 },
    File { path: PathBuf },
}

impl Profile {
    pub fn field(&self, lat: &Lattice) -> Result<SpectralField> {
        let z = Complex64::new(0.0, 0.0);
        let s = |a: f64| Complex64::new(0.0, -a / 2.0);
        Ok(match self {
            Profile::None => SpectralField::zeros(lat),
            Profile::Kolmogorov { amp } => SpectralField::single_pair(lat, [0, 1, 0], [s(*amp), z, z]),
            Profile::Shear { amp } => SpectralField::single_pair(lat, [1, 0, 0], [z, z, s(*amp)]),
            Profile::File { path } => load_checkpoint_on(path, lat)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonUnit {
    Time,
    /// Multiples of `1/λ` from the admissibility report.
    InverseLambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    /// Duration, horizon or `T_B`, depending on the kind.
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub horizons: Vec<f64>,
    pub horizon_unit: HorizonUnit,
    pub thin: usize,
    pub guard: f64,
    pub out: PathBuf,

    pub nu: f64,
    pub length: f64,
    pub truncation: usize,
    pub dealias: f64,

    pub forcing: Profile,
    pub noise: Profile,

    pub radius: f64,
    pub ensemble: usize,
    pub init_seed: u64,
    pub decay: f64,
    pub init_file: Option<PathBuf>,

    pub sobolev: Vec<f64>,
    pub k: Option<f64>,
    pub c: f64,
    pub deltas: Vec<f64>,
    pub burn_in: f64,
    pub window: f64,
    pub scales: Vec<f64>,
    pub rank: usize,
    pub metric: f64,
    pub moments: Vec<f64>,
    pub oversample: usize,
    pub export_path: bool,
    pub entry_radii: Vec<f64>,
    pub jvp: bool,
    pub direction_seed: u64,
}

/// Every accepted key and its section.
pub const KEYS: &[(&str, &str)] = &[
    ("kind", "run"),
    ("seed", "run"),
    ("seeds", "run"),
    ("T", "run"),
    ("dt", "run"),
    ("horizons", "run"),
    ("horizon_unit", "run"),
    ("thin", "run"),
    ("guard", "run"),
    ("out", "run"),
    ("nu", "physics"),
    ("L", "physics"),
    ("N", "physics"),
    ("dealias", "physics"),
    ("forcing", "forcing"),
    ("forcing_amp", "forcing"),
    ("forcing_file", "forcing"),
    ("noise", "noise"),
    ("noise_amp", "noise"),
    ("noise_file", "noise"),
    ("radius", "initial"),
    ("ensemble", "initial"),
    ("init_seed", "initial"),
    ("decay", "initial"),
    ("init_file", "initial"),
    ("sobolev", "analysis"),
    ("k", "analysis"),
    ("C", "analysis"),
    ("deltas", "analysis"),
    ("burn_in", "analysis"),
    ("window", "analysis"),
    ("scales", "analysis"),
    ("rank", "analysis"),
    ("metric", "analysis"),
    ("moments", "analysis"),
    ("oversample", "analysis"),
    ("export_path", "analysis"),
    ("entry_radii", "analysis"),
    ("jvp", "analysis"),
    ("direction_seed", "analysis"),
];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, s)| *s)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

/// Parse `text`, then apply `overrides` (same keys, later wins).
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    parse(text, overrides, None)
}

/// Read and parse a config file. Relative `*_file` paths written in the file
/// resolve against its directory; those given as overrides, and `out`, stay
/// relative to the working directory.
pub fn parse_config_file(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, overrides, Some(base))
}

fn parse(text: &str, overrides: &[(String, String)], base: Option<PathBuf>) -> Result<RunConfig> {
    let mut v = Vec::new();
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    match text.parse::<toml::Table>() {
        Err(e) => v.push(format!("TOML syntax: {}", e.message())),
        Ok(doc) => {
            for (name, item) in doc {
                match item {
                    toml::Value::Table(t) => {
                        if !KEYS.iter().any(|(_, s)| *s == name) {
                            v.push(format!("unknown section [{name}]"));
                            continue;
                        }
                        for (key, value) in t {
                            match section_of(&key) {
                                None => v.push(format!("unknown key '{key}' in [{name}]")),
                                Some(home) if home != name => {
                                    v.push(format!("key '{key}' belongs in [{home}], found in [{name}]"))
                                }
                                Some(_) => insert(&mut map, &mut v, key, value),
                            }
                        }
                    }
                    value => match section_of(&name) {
                        None => v.push(format!("unknown key '{name}'")),
                        Some(_) => insert(&mut map, &mut v, name, value),
                    },
                }
            }
        }
    }
    let mut overridden: Vec<String> = Vec::new();
    for (key, value) in overrides {
        if section_of(key).is_none() {
            v.push(format!("unknown key '{key}'"));
        } else {
            // a seed override replaces the file's seed selection
            if key == "seed" || key == "seeds" {
                map.retain(|k, _| k != "seed" && k != "seeds" || overridden.contains(k));
            }
            map.insert(key.clone(), value.clone());
            overridden.push(key.clone());
        }
    }
    let mut f = Fields {
        map,
        v,
        base,
        overridden,
    };
    let cfg = build(&mut f);
    if f.v.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(f.v))
    }
}

/// Store a TOML value in the flat string form shared with command-line
/// overrides; arrays become comma-separated lists.
fn insert(map: &mut BTreeMap<String, String>, v: &mut Vec<String>, key: String, value: toml::Value) {
    fn scalar(x: &toml::Value) -> Option<String> {
        match x {
            toml::Value::String(s) => Some(s.clone()),
            toml::Value::Integer(i) => Some(i.to_string()),
            toml::Value::Float(f) => Some(format!("{f:?}")),
            toml::Value::Boolean(b) => Some(b.to_string()),
            _ => None,
        }
    }
    let flat = match &value {
        toml::Value::Array(items) => items.iter().map(scalar).collect::<Option<Vec<_>>>().map(|x| x.join(", ")),
        other => scalar(other),
    };
    match flat {
        Some(s) => {
            map.insert(key, s);
        }
        None => v.push(format!("{key}: unsupported value {value}")),
    }
}

struct Fields {
    map: BTreeMap<String, String>,
    v: Vec<String>,
    base: Option<PathBuf>,
    overridden: Vec<String>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Option<T> {
        let raw = self.raw(key)?.to_string();
        match raw.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.v.push(format!("{key}: cannot parse '{raw}'"));
                None
            }
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> T {
        self.parse(key).unwrap_or(default)
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Option<Vec<T>> {
        let raw = self.raw(key)?.to_string();
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse() {
                Ok(x) => out.push(x),
                Err(_) => {
                    self.v.push(format!("{key}: cannot parse list item '{item}'"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.v.push(msg());
        }
    }

    fn file(&mut self, key: &str) -> Option<PathBuf> {
        let mut p = PathBuf::from(self.raw(key)?);
        if let Some(base) = &self.base {
            if p.is_relative() && !self.overridden.iter().any(|k| k == key) {
                p = base.join(p);
            }
        }
        if !p.is_file() {
            self.v.push(format!("{key}: file '{}' does not exist", p.display()));
        }
        Some(p)
    }

    fn profile(&mut self, key: &str, default_amp: f64, allowed: &str) -> Profile {
        let amp: f64 = self.or(&format!("{key}_amp"), default_amp);
        self.check(amp.is_finite(), || format!("{key}_amp must be finite"));
        let kind = self.raw(key).unwrap_or("none").to_string();
        match kind.as_str() {
            "none" => Profile::None,
            "file" => match self.file(&format!("{key}_file")) {
                Some(path) => Profile::File { path },
                None => {
                    self.v.push(format!("{key} = file requires {key}_file"));
                    Profile::None
                }
            },
            k if k == allowed && k == "kolmogorov" => Profile::Kolmogorov { amp },
            k if k == allowed && k == "shear" => Profile::Shear { amp },
            other => {
                self.v.push(format!("{key}: unknown profile '{other}' (none, {allowed}, file)"));
                Profile::None
            }
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn build(f: &mut Fields) -> RunConfig {
    let kind = match f.raw("kind") {
        None => {
            f.v.push("missing required key 'kind'".into());
            ExperimentKind::Admissibility
        }
        Some(k) => match k.parse() {
            Ok(k) => k,
            Err(e) => {
                f.v.push(e);
                ExperimentKind::Admissibility
            }
        },
    };
    let mut seeds: Vec<u64> = f.list("seeds").unwrap_or_default();
    if let Some(s) = f.parse::<u64>("seed") {
        if f.raw("seeds").is_some() {
            f.v.push("give either 'seed' or 'seeds', not both".into());
        }
        seeds = vec![s];
    }
    if seeds.is_empty() && kind != ExperimentKind::Admissibility {
        f.v.push("missing required key 'seed' (or 'seeds')".into());
    }
    let t: Option<f64> = f.parse("T");
    let dt: Option<f64> = f.parse("dt");
    if kind.needs_duration() && f.raw("T").is_none() {
        f.v.push(format!("missing required key 'T' for kind {kind}"));
    }
    if kind != ExperimentKind::Admissibility && f.raw("dt").is_none() {
        f.v.push("missing required key 'dt'".into());
    }
    if let Some(t) = t {
        f.check(positive(t), || format!("T must be positive (got {t})"));
    }
    if let Some(dt) = dt {
        f.check(positive(dt), || format!("dt must be positive (got {dt})"));
    }
    let horizons: Vec<f64> = f.list("horizons").unwrap_or_default();
    if kind == ExperimentKind::Absorbing {
        f.check(!horizons.is_empty(), || "missing required key 'horizons' for kind absorbing".into());
    }
    f.check(
        horizons.iter().all(|&h| positive(h)) && horizons.windows(2).all(|w| w[1] > w[0]),
        || "horizons must be positive and strictly increasing".into(),
    );
    let horizon_unit = match f.raw("horizon_unit").unwrap_or("time") {
        "time" => HorizonUnit::Time,
        "lambda" => HorizonUnit::InverseLambda,
        other => {
            f.v.push(format!("horizon_unit: expected 'time' or 'lambda' (got '{other}')"));
            HorizonUnit::Time
        }
    };
    let thin: usize = f.or("thin", 100);
    f.check(thin >= 1, || "thin must be at least 1".into());
    let guard: f64 = f.or("guard", 1e8);
    f.check(positive(guard), || "guard must be positive".into());
    let out = PathBuf::from(f.raw("out").unwrap_or("out"));

    let nu: f64 = f.or("nu", 1.0);
    f.check(positive(nu), || format!("nu must be positive (got {nu})"));
    let length: f64 = f.or("L", 2.0 * PI);
    f.check(positive(length), || format!("L must be positive (got {length})"));
    let truncation: usize = f.or("N", 8);
    f.check((1..=256).contains(&truncation), || format!("N must lie in 1..=256 (got {truncation})"));
    let dealias: f64 = f.or("dealias", DEFAULT_DEALIAS);
    f.check(dealias > 0.0 && dealias <= 1.0, || format!("dealias must lie in (0, 1] (got {dealias})"));

    let forcing = f.profile("forcing", 1.0, "kolmogorov");
    let noise = f.profile("noise", 0.1, "shear");

    let radius: f64 = f.or("radius", 1.0);
    f.check(radius.is_finite() && radius >= 0.0, || "radius must be non-negative".into());
    let ensemble: usize = f.or("ensemble", 1);
    f.check(ensemble >= 1, || "ensemble must be at least 1".into());
    let init_seed: u64 = f.or("init_seed", 0);
    let decay: f64 = f.or("decay", 1.0);
    f.check(decay.is_finite(), || "decay must be finite".into());
    let init_file = f.file("init_file");

    let sobolev: Vec<f64> = f.list("sobolev").unwrap_or_else(|| vec![0.0, 1.25, 2.5]);
    f.check(sobolev.iter().all(|s| s.is_finite() && *s >= 0.0), || "sobolev indices must be non-negative".into());
    let k: Option<f64> = f.parse("k");
    if let Some(k) = k {
        f.check(k.is_finite() && k >= 0.0, || "k must be non-negative".into());
    }
    let c: f64 = f.or("C", 1.0);
    f.check(positive(c), || format!("C must be positive (got {c})"));
    let deltas: Vec<f64> = f.list("deltas").unwrap_or_else(|| vec![1e-3, 1e-4, 1e-5]);
    f.check(
        !deltas.is_empty() && deltas.iter().all(|&d| d.is_finite() && d >= crate::lab::MIN_DELTA),
        || format!("deltas must be at least {:e}", crate::lab::MIN_DELTA),
    );
    let burn_in: f64 = f.or("burn_in", 40.0);
    f.check(positive(burn_in), || "burn_in must be positive".into());
    let window: f64 = f.or("window", 10.0);
    f.check(positive(window), || "window must be positive".into());
    let scales: Vec<f64> = f.list("scales").unwrap_or_else(|| vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    f.check(
        scales.len() >= 2 && scales.iter().all(|&e| positive(e)) && scales.windows(2).all(|w| w[1] < w[0]),
        || "scales must be at least two positive, strictly decreasing values".into(),
    );
    let rank: usize = f.or("rank", 24);
    f.check(rank >= 1, || "rank must be at least 1".into());
    let metric: f64 = f.or("metric", 0.0);
    f.check(metric.is_finite() && metric >= 0.0, || "metric must be non-negative".into());
    let moments: Vec<f64> = f.list("moments").unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    f.check(moments.iter().all(|&m| positive(m)), || "moments must be positive".into());
    let oversample: usize = f.or("oversample", crate::lab::DEFAULT_OVERSAMPLE);
    f.check(oversample >= 1, || "oversample must be at least 1".into());
    let export_path: bool = f.or("export_path", false);
    let entry_radii: Vec<f64> = f.list("entry_radii").unwrap_or_default();
    f.check(entry_radii.iter().all(|r| *r >= 0.0), || "entry_radii must be non-negative".into());
    let jvp: bool = f.or("jvp", false);
    let direction_seed: u64 = f.or("direction_seed", 1);

    RunConfig {
        kind,
        seeds,
        t,
        dt,
        horizons,
        horizon_unit,
        thin,
        guard,
        out,
        nu,
        length,
        truncation,
        dealias,
        forcing,
        noise,
        radius,
        ensemble,
        init_seed,
        decay,
        init_file,
        sobolev,
        k,
        c,
        deltas,
        burn_in,
        window,
        scales,
        rank,
        metric,
        moments,
        oversample,
        export_path,
        entry_radii,
        jvp,
        direction_seed,
    }
}

impl RunConfig {
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.length, self.truncation, self.dealias)
    }

    /// Simulation parameters; `dt` defaults to 0.01 for kinds that do not
    /// integrate.
    pub fn sim_params(&self) -> Result<SimParams> {
        let lat = self.lattice()?;
        let mut p = SimParams::new(self.nu, &lat, self.dt.unwrap_or(0.01))
            .with_forcing(self.forcing.field(&lat)?)
            .with_noise(self.noise.field(&lat)?);
        p.guard = self.guard;
        p.validate()?;
        Ok(p)
    }

    /// Sobolev indices to record, with `k` appended when set.
    pub fn indices(&self) -> Vec<f64> {
        let mut s = self.sobolev.clone();
        if let Some(k) = self.k {
            if !s.contains(&k) {
                s.push(k);
            }
        }
        s
    }

    pub fn initial_ensemble(&self) -> Ensemble {
        Ensemble {
            radius: self.radius,
            size: self.ensemble,
            seed: self.init_seed,
            decay: self.decay,
        }
    }

    /// Initial fields: the checkpoint in `init_file` if given, else the ensemble.
    pub fn initial_fields(&self, lat: &Lattice) -> Result<Vec<SpectralField>> {
        match &self.init_file {
            Some(p) => Ok(vec![load_checkpoint_on(p, lat)?]),
            None => Ok(self.initial_ensemble().members(lat)),
        }
    }

    /// Required duration (validated at parse time for kinds that need it).
    pub fn duration(&self) -> f64 {
        self.t.unwrap_or(0.0)
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }
}
