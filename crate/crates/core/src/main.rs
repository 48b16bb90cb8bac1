use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use tsns::io::{parse_config_file, parse_config_with, run_and_report, ErrorRecord, ExperimentKind};
use tsns::Error;

/// Random fractional Navier-Stokes spectral lab.
///
/// Any config key can be overridden after the options, e.g.
/// `tsns simulate --config run.toml --dt 0.02 --N=12`.
#[derive(Parser, Debug)]
#[command(name = "tsns", version)]
struct Cli {
    /// simulate, pullback, absorbing, lipschitz, comparison, ou-check,
    /// dimension or admissibility
    #[arg(value_parser = parse_kind)]
    kind: ExperimentKind,

    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Single noise seed, replacing `seed`/`seeds` from the file.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Validate and print the resolved configuration without running.
    #[arg(long)]
    dry_run: bool,

    /// `--key value` or `--key=value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
    overrides: Vec<String>,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse()
}

/// Splits the trailing arguments into config overrides. Once the first
/// override is seen clap hands over everything that follows, so the real
/// options are recognised here too.
fn parse_overrides(args: &[String], cli: &mut Cli) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            bad.push(format!("unexpected argument '{a}'"));
            continue;
        };
        if key == "dry-run" {
            cli.dry_run = true;
            continue;
        }
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (key, it.next().cloned()),
        };
        let Some(value) = value else {
            bad.push(format!("override --{key} has no value"));
            continue;
        };
        match key {
            "config" => cli.config = Some(PathBuf::from(value)),
            "seed" => out.push(("seeds".to_string(), value)),
            _ => out.push((key.to_string(), value)),
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(Error::Config(bad))
    }
}

fn fail(e: &Error, out: Option<&PathBuf>) -> ExitCode {
    let rec = ErrorRecord::from(e);
    if let Some(dir) = out {
        if fs::create_dir_all(dir).is_ok() {
            let _ = tsns::io::write_json(&dir.join("error.json"), &rec);
        }
    }
    report(&rec);
    ExitCode::from(rec.exit_code as u8)
}

fn report(rec: &ErrorRecord) {
    eprintln!("{}", serde_json::to_string(rec).unwrap_or_else(|_| rec.message.clone()));
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    let mut overrides = vec![("kind".to_string(), cli.kind.as_str().to_string())];
    let trailing = std::mem::take(&mut cli.overrides);
    match parse_overrides(&trailing, &mut cli) {
        Ok(o) => overrides.extend(o),
        Err(e) => return fail(&e, cli.out.as_ref()),
    }
    if let Some(s) = cli.seed {
        overrides.push(("seeds".into(), s.to_string()));
    }
    if let Some(o) = &cli.out {
        overrides.push(("out".into(), o.display().to_string()));
    }
    let out = overrides.iter().rev().find(|(k, _)| k == "out").map(|(_, v)| PathBuf::from(v));
    let parsed = match &cli.config {
        Some(path) => parse_config_file(path, &overrides),
        None => parse_config_with("", &overrides),
    };
    let cfg = match parsed.and_then(|c| c.sim_params().map(|_| c)) {
        Ok(c) => c,
        Err(e) => return fail(&e, out.as_ref()),
    };
    if cli.dry_run {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return ExitCode::SUCCESS;
    }
    match run_and_report(&cfg) {
        (0, _) => {
            println!("{}", cfg.out_dir().display());
            ExitCode::SUCCESS
        }
        (code, rec) => {
            if let Some(r) = rec {
                report(&r);
            }
            ExitCode::from(code as u8)
        }
    }
}
