mod render;
mod settings;

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use nvdd::attacks::CentroidAttackStats;
use nvdd::metrics::cost_report;
use nvdd::models::{anonymize, ModelError, ModelKind, ModelParams};
use nvdd::sim::{
    fmt_g6, run_attack_stats, run_comparison, run_sweep, write_attack_csv, write_comparison_csv, write_sweep_csv,
    ComparisonRecord, SweepConfig, SweepRecord,
};
use nvdd::wire::{encode_upstream, AnonymizedQuery};
use nvdd::Point;
use serde::Serialize;

use settings::{Format, Opts, Settings};

#[derive(Parser, Debug)]
#[command(name = "nvdd", version, about = "Voronoi-Delaunay location anonymizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Anonymize one location and print the query (JSON, or upstream bytes as hex)
    Anonymize(Opts),
    /// Monte Carlo sweep of cost and privacy over model, n, kappa and r
    Sweep(Opts),
    /// Centroid attack statistics
    Attack(Opts),
    /// Paired comparison against the concealing-disk baseline
    Compare(Opts),
    /// SVG of the Delaunay polygon, Voronoi polygon and anonymity zone
    Render(Opts),
}

/// Usage errors exit with 2, everything else with 3.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::NotApplicable | ModelError::InvalidParams(_) => Failure::Usage(e.to_string()),
        other => Failure::Runtime(other.into()),
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Anonymize(o) => Settings::load(o).and_then(|s| cmd_anonymize(&s)),
        Command::Sweep(o) => Settings::load(o).and_then(|s| cmd_sweep(&s)),
        Command::Attack(o) => Settings::load(o).and_then(|s| cmd_attack(&s)),
        Command::Compare(o) => Settings::load(o).and_then(|s| cmd_compare(&s)),
        Command::Render(o) => Settings::load(o).and_then(|s| cmd_render(&s)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("NVDD_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("NVDD_THREADS = '{v}' is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn model_params(s: &Settings) -> Result<(ModelKind, ModelParams), Failure> {
    let kind: ModelKind = s.parse("model", ModelKind::I)?;
    let params = ModelParams {
        n: s.parse("n", 5)?,
        r: s.parse("r", 1000.0)?,
        iota: s.parse_opt("iota")?,
        kappa: s.parse("kappa", if kind.sector_shift() { 0.1 } else { 0.0 })?,
        mu: s.parse("mu", 2.0)?,
        rng_seed: s.parse("seed", 0)?,
        ..ModelParams::new(3, 1.0)
    };
    Ok((kind, params))
}

#[derive(Serialize)]
struct AnonymizeOutput {
    model: String,
    n: usize,
    uid: u64,
    poi_category: u16,
    lambda: f64,
    d0: f64,
    psi: f64,
    gamma: f64,
    ratio: f64,
    upstream_bytes: usize,
    attempts: u32,
    concealing: Vec<[f64; 2]>,
    zone: Vec<[f64; 2]>,
}

fn coords(pts: &[Point]) -> Vec<[f64; 2]> {
    pts.iter().map(|p| [p.x, p.y]).collect()
}

fn cmd_anonymize(s: &Settings) -> Outcome {
    let (kind, params) = model_params(s)?;
    let o = Point::new(s.parse("x", 0.0)?, s.parse("y", 0.0)?);
    let uid: u64 = s.parse("uid", 0)?;
    let poi: u16 = s.parse("poi", 0)?;
    let format = s.format(Format::Json)?;
    let res = anonymize(o, kind, &params).map_err(model_failure)?;
    let query = AnonymizedQuery {
        uid,
        concealing: res.concealing.clone(),
        poi_category: poi,
    };
    let text = match format {
        Format::Hex => {
            let bytes = encode_upstream(&query).context("encoding upstream query")?;
            hex::encode(bytes) + "\n"
        }
        Format::Json => {
            let cost = cost_report(&res, 0);
            let out = AnonymizeOutput {
                model: kind.label().to_string(),
                n: params.n,
                uid,
                poi_category: poi,
                lambda: res.lambda,
                d0: res.d0,
                psi: cost.psi,
                gamma: cost.gamma,
                ratio: cost.ratio,
                upstream_bytes: cost.upstream_bytes,
                attempts: res.attempts,
                concealing: coords(res.concealing.vertices()),
                zone: coords(res.zone_scaled.polygon().vertices()),
            };
            serde_json::to_string_pretty(&out).context("serializing output")? + "\n"
        }
        other => return Err(Failure::Usage(format!("anonymize does not support --format {other}"))),
    };
    emit(s.out(), text.as_bytes())
}

fn sweep_config(s: &Settings, models: &str, n: &str, kappa: &str) -> Result<SweepConfig, Failure> {
    let cfg = SweepConfig {
        region: s.parse("region", 1e4)?,
        models: s.list("model", models)?,
        n_values: s.n_list(n)?,
        kappa_values: s.list("kappa", kappa)?,
        r_values: s.list("r", "1000")?,
        iterations: s.parse("iterations", 1000)?,
        master_seed: s.parse("seed", 0)?,
        iota: s.parse_opt("iota")?,
        mu: s.parse("mu", 2.0)?,
        ..SweepConfig::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

/// Writes `bytes` to `out`, or stdout when no path is given.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

/// Table output goes to stdout only when the data went to a file.
fn summary(s: &Settings, header: &str, rows: impl Iterator<Item = String>) -> Outcome {
    if s.out().is_none() {
        return Ok(());
    }
    let mut out = io::stdout().lock();
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn tabular<T: Serialize>(
    s: &Settings,
    records: &[T],
    csv: impl Fn(&[T], &mut Vec<u8>) -> Result<(), nvdd::sim::SimError>,
) -> Outcome {
    let bytes = match s.format(Format::Csv)? {
        Format::Csv => {
            let mut buf = Vec::new();
            csv(records, &mut buf).context("writing CSV")?;
            buf
        }
        Format::Json => (serde_json::to_string_pretty(records).context("serializing output")? + "\n").into_bytes(),
        other => return Err(Failure::Usage(format!("--format {other} is not available here"))),
    };
    emit(s.out(), &bytes)
}

fn cmd_sweep(s: &Settings) -> Outcome {
    let cfg = sweep_config(s, "I,II,III,Ia,IIa,IIIa", "3..10", "0,0.02,0.04,0.06,0.08,0.1")?;
    let records = run_sweep(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    tabular(s, &records, |r, w| write_sweep_csv(r, w))?;
    summary(
        s,
        "model  n  kappa      r         mean_psi       mean_gamma     ratio  failures",
        records.iter().map(|r: &SweepRecord| {
            format!(
                "{:<5} {:>2} {:>6} {:>6} {:>16} {:>16} {:>9} {:>9}",
                r.model.label(),
                r.n,
                fmt_g6(r.kappa),
                fmt_g6(r.r),
                fmt_g6(r.mean_psi),
                fmt_g6(r.mean_gamma),
                fmt_g6(r.mean_ratio),
                r.failures
            )
        }),
    )
}

fn cmd_attack(s: &Settings) -> Outcome {
    let cfg = sweep_config(s, "II", "5..10", "0.1")?;
    let stats = run_attack_stats(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    tabular(s, &stats, |r, w| write_attack_csv(r, w))?;
    summary(
        s,
        "model  n  kappa  mean_dist_pv/r  circle_hit_fraction",
        stats.iter().map(|st: &CentroidAttackStats| {
            format!(
                "{:<5} {:>2} {:>6} {:>15} {:>20}",
                st.model.label(),
                st.n,
                fmt_g6(st.kappa),
                fmt_g6(st.mean_dist_pv / st.r),
                fmt_g6(st.circle_hit_fraction)
            )
        }),
    )
}

fn cmd_compare(s: &Settings) -> Outcome {
    let cfg = sweep_config(s, "I,II,III", "3..10", "0.02")?;
    let records = run_comparison(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    tabular(s, &records, |r, w| write_comparison_csv(r, w))?;
    summary(
        s,
        "method  n        mean_psi       mean_gamma      ratio  upstream",
        records.iter().map(|c: &ComparisonRecord| {
            format!(
                "{:<6} {:>2} {:>16} {:>16} {:>10} {:>9}",
                c.method,
                c.n,
                fmt_g6(c.mean_psi),
                fmt_g6(c.mean_gamma),
                fmt_g6(c.mean_ratio),
                c.upstream_bytes
            )
        }),
    )
}

fn cmd_render(s: &Settings) -> Outcome {
    let (kind, params) = model_params(s)?;
    let o = Point::new(s.parse("x", 0.0)?, s.parse("y", 0.0)?);
    match s.format(Format::Svg)? {
        Format::Svg => {}
        other => return Err(Failure::Usage(format!("render does not support --format {other}"))),
    }
    let res = anonymize(o, kind, &params).map_err(model_failure)?;
    emit(s.out(), render::svg(&res).as_bytes())
}
