//! Monte Carlo sweeps over model, n, kappa and r.
//!
//! Every trial owns a ChaCha8 stream seeded from `(master_seed, cell, trial)`,
//! where the cell key leaves out `r`. Runs that differ only in `r` therefore
//! see the same random draws, and results do not depend on thread scheduling.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::{centroid_attack, two_centroid_circle_test, CentroidAttackStats};
use crate::geometry::Point;
use crate::metrics::{cost_report, upstream_bytes_ncd, upstream_bytes_vdd, CostReport};
use crate::models::{anonymize_with_rng, AnonymizationResult, ModelError, ModelKind, ModelParams};
use crate::ncd::{generate_ncd, ncd_costs, NcdError, DEFAULT_CIRCLE_SEGMENTS};

#[derive(Error, Debug)]
pub enum SimError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Side of the square network region (meters).
    pub region: f64,
    pub models: Vec<ModelKind>,
    pub n_values: Vec<usize>,
    /// Only used by sector-shifting models; the others run at kappa = 0.
    pub kappa_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub iterations: usize,
    pub master_seed: u64,
    pub iota: Option<f64>,
    pub mu: f64,
    pub max_retries: u32,
    pub circle_segments: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            region: 1e4,
            models: vec![ModelKind::I, ModelKind::II, ModelKind::III],
            n_values: (3..=10).collect(),
            kappa_values: vec![0.0, 0.02, 0.04, 0.06, 0.08, 0.1],
            r_values: vec![1000.0],
            iterations: 1000,
            master_seed: 0,
            iota: None,
            mu: 2.0,
            max_retries: 100,
            circle_segments: DEFAULT_CIRCLE_SEGMENTS,
        }
    }
}

/// One parameter combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub model: ModelKind,
    pub n: usize,
    pub kappa: f64,
    pub r: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if !(self.region > 0.0) || !self.region.is_finite() {
            return bad(format!("region = {}", self.region));
        }
        if self.n_values.iter().any(|&n| n < 3) {
            return bad("n values must be at least 3".into());
        }
        if self.models.contains(&ModelKind::AlphaOnly) {
            return bad("model alpha is not applicable".into());
        }
        for &r in &self.r_values {
            if !(r > 0.0) || 2.0 * r >= self.region {
                return bad(format!("r = {r} does not fit in the region"));
            }
        }
        if self.kappa_values.iter().any(|k| !(0.0..0.5).contains(k)) {
            return bad("kappa values must lie in [0, 0.5)".into());
        }
        for c in self.cells() {
            self.params(&c, 0)
                .validate()
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    /// Cells in output order: model, n, kappa, r.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &model in &self.models {
            let kappas: Vec<f64> = if model.sector_shift() {
                self.kappa_values.clone()
            } else {
                vec![0.0]
            };
            for &n in &self.n_values {
                for &kappa in &kappas {
                    for &r in &self.r_values {
                        out.push(Cell { model, n, kappa, r });
                    }
                }
            }
        }
        out
    }

    pub fn params(&self, cell: &Cell, rng_seed: u64) -> ModelParams {
        ModelParams {
            n: cell.n,
            r: cell.r,
            iota: self.iota,
            kappa: cell.kappa,
            mu: self.mu,
            r0: 1.0,
            rng_seed,
            max_retries: self.max_retries,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_code(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Seed of trial `trial` in the cell `(label, n, kappa)`; `r` is left out on purpose
/// so that radius sweeps are paired.
pub fn trial_seed(master: u64, label: &str, n: usize, kappa: f64, trial: usize) -> u64 {
    let mut h = splitmix(master);
    for part in [label_code(label), n as u64, kappa.to_bits(), trial as u64] {
        h = splitmix(h ^ part);
    }
    h
}

/// User location uniform over the points whose ROI disk stays inside the
/// region. Uses exactly two draws, whatever `r` is.
pub fn trial_location<R: Rng + ?Sized>(region: f64, r: f64, rng: &mut R) -> Point {
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let span = region - 2.0 * r;
    Point::new(r + u * span, r + v * span)
}

/// Runs one trial of `cell`, returning the drawn location and the result.
pub fn run_trial(cfg: &SweepConfig, cell: &Cell, trial: usize) -> (Point, Result<AnonymizationResult, ModelError>) {
    let seed = trial_seed(cfg.master_seed, cell.model.label(), cell.n, cell.kappa, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = trial_location(cfg.region, cell.r, &mut rng);
    let params = cfg.params(cell, seed);
    (o, anonymize_with_rng(o, cell.model, &params, &mut rng))
}

/// Sum with pairwise splitting, so the result only depends on element order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub model: ModelKind,
    pub n: usize,
    pub kappa: f64,
    pub r: f64,
    pub mean_psi: f64,
    pub mean_gamma: f64,
    pub mean_ratio: f64,
    pub upstream_bytes: usize,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
}

/// Cost reports of the successful trials of `cell`, in trial order.
fn cell_costs(cfg: &SweepConfig, cell: &Cell) -> Vec<CostReport> {
    let outcomes: Vec<Option<CostReport>> = (0..cfg.iterations)
        .into_par_iter()
        .map(|t| run_trial(cfg, cell, t).1.ok().map(|res| cost_report(&res, 0)))
        .collect();
    outcomes.into_iter().flatten().collect()
}

fn run_cell(cfg: &SweepConfig, cell: &Cell) -> SweepRecord {
    let ok = cell_costs(cfg, cell);
    let col = |f: fn(&CostReport) -> f64| ok.iter().map(f).collect::<Vec<_>>();
    SweepRecord {
        model: cell.model,
        n: cell.n,
        kappa: cell.kappa,
        r: cell.r,
        mean_psi: mean(&col(|c| c.psi)),
        mean_gamma: mean(&col(|c| c.gamma)),
        mean_ratio: mean(&col(|c| c.ratio)),
        upstream_bytes: upstream_bytes_vdd(cell.n),
        trials: ok.len(),
        failures: cfg.iterations - ok.len(),
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>, SimError> {
    cfg.validate()?;
    Ok(cfg.cells().iter().map(|c| run_cell(cfg, c)).collect())
}

/// Centroid attack statistics for every cell of `cfg`.
pub fn run_attack_stats(cfg: &SweepConfig) -> Result<Vec<CentroidAttackStats>, SimError> {
    cfg.validate()?;
    let stats = cfg
        .cells()
        .iter()
        .map(|cell| {
            let outcomes: Vec<Option<(f64, f64, bool)>> = (0..cfg.iterations)
                .into_par_iter()
                .map(|t| {
                    let (o, res) = run_trial(cfg, cell, t);
                    res.ok().map(|res| {
                        let (_, d) = centroid_attack(&res, o);
                        let daz = res.zone_scaled.polygon().centroid().dist(o);
                        (d, daz, two_centroid_circle_test(&res, o))
                    })
                })
                .collect();
            let ok: Vec<(f64, f64, bool)> = outcomes.into_iter().flatten().collect();
            let dpv: Vec<f64> = ok.iter().map(|t| t.0).collect();
            let daz: Vec<f64> = ok.iter().map(|t| t.1).collect();
            let hits = ok.iter().filter(|t| t.2).count();
            CentroidAttackStats {
                model: cell.model,
                n: cell.n,
                kappa: cell.kappa,
                r: cell.r,
                trials: ok.len(),
                failures: cfg.iterations - ok.len(),
                mean_dist_pv: mean(&dpv),
                sd_dist_pv: sample_sd(&dpv),
                mean_dist_az: mean(&daz),
                circle_hit_fraction: if ok.is_empty() {
                    f64::NAN
                } else {
                    hits as f64 / ok.len() as f64
                },
            }
        })
        .collect();
    Ok(stats)
}

/// One method (a VDD model or the disk baseline) in one comparison cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub method: String,
    pub n: usize,
    pub kappa: f64,
    pub r: f64,
    pub mean_psi: f64,
    pub mean_gamma: f64,
    pub mean_ratio: f64,
    pub min_gamma: f64,
    pub upstream_bytes: usize,
    pub trials: usize,
    pub failures: usize,
}

pub const NCD_LABEL: &str = "nCD";

fn comparison_record(
    method: String,
    n: usize,
    kappa: f64,
    r: f64,
    upstream: usize,
    ok: &[CostReport],
    failures: usize,
) -> ComparisonRecord {
    let col = |f: fn(&CostReport) -> f64| ok.iter().map(f).collect::<Vec<_>>();
    ComparisonRecord {
        method,
        n,
        kappa,
        r,
        mean_psi: mean(&col(|c| c.psi)),
        mean_gamma: mean(&col(|c| c.gamma)),
        mean_ratio: mean(&col(|c| c.ratio)),
        min_gamma: ok.iter().map(|c| c.gamma).fold(f64::INFINITY, f64::min),
        upstream_bytes: upstream,
        trials: ok.len(),
        failures,
    }
}

/// Runs one n-CD trial at `(n, r)`.
pub fn run_ncd_trial(cfg: &SweepConfig, n: usize, r: f64, trial: usize) -> Result<CostReport, NcdError> {
    let seed = trial_seed(cfg.master_seed, NCD_LABEL, n, 0.0, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = trial_location(cfg.region, r, &mut rng);
    let set = generate_ncd(o, n, r, &mut rng)?;
    ncd_costs(&set, cfg.circle_segments)
}

/// Every VDD cell of `cfg` followed by the n-CD baseline at the same `(n, r)`.
pub fn run_comparison(cfg: &SweepConfig) -> Result<Vec<ComparisonRecord>, SimError> {
    cfg.validate()?;
    if cfg.circle_segments < 64 {
        return Err(SimError::InvalidConfig(format!(
            "circle_segments = {}",
            cfg.circle_segments
        )));
    }
    let mut out = Vec::new();
    for &n in &cfg.n_values {
        for &r in &cfg.r_values {
            for cell in cfg.cells().iter().filter(|c| c.n == n && c.r == r) {
                let ok = cell_costs(cfg, cell);
                let failures = cfg.iterations - ok.len();
                let up = upstream_bytes_vdd(n);
                out.push(comparison_record(
                    cell.model.label().to_string(),
                    n,
                    cell.kappa,
                    r,
                    up,
                    &ok,
                    failures,
                ));
            }
            let ncd: Vec<Option<CostReport>> = (0..cfg.iterations)
                .into_par_iter()
                .map(|t| run_ncd_trial(cfg, n, r, t).ok())
                .collect();
            let ok: Vec<CostReport> = ncd.into_iter().flatten().collect();
            let failures = cfg.iterations - ok.len();
            let up = upstream_bytes_ncd(n);
            out.push(comparison_record(NCD_LABEL.to_string(), n, 0.0, r, up, &ok, failures));
        }
    }
    Ok(out)
}

/// `%g`-style formatting with 6 significant digits.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    // rounding can carry into the next decade (e.g. 999999.5)
    let rounded: f64 = format!("{:.5e}", x).parse().expect("float");
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) {
        exp + 1
    } else {
        exp
    };
    if !(-4..6).contains(&exp) {
        let s = format!("{:.5e}", x);
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = trim_zeros(mant);
        let e: i32 = e.parse().expect("exponent");
        format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const SWEEP_HEADER: [&str; 10] = [
    "model",
    "n",
    "kappa",
    "r",
    "mean_psi",
    "mean_gamma",
    "mean_ratio",
    "upstream_bytes",
    "trials",
    "failures",
];

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        w.write_record([
            r.model.label().to_string(),
            r.n.to_string(),
            fmt_g6(r.kappa),
            fmt_g6(r.r),
            fmt_g6(r.mean_psi),
            fmt_g6(r.mean_gamma),
            fmt_g6(r.mean_ratio),
            r.upstream_bytes.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_attack_csv<W: Write>(stats: &[CentroidAttackStats], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model",
        "n",
        "kappa",
        "r",
        "mean_dist_pv",
        "sd_dist_pv",
        "mean_dist_az",
        "circle_hit_fraction",
        "trials",
        "failures",
    ])?;
    for s in stats {
        w.write_record([
            s.model.label().to_string(),
            s.n.to_string(),
            fmt_g6(s.kappa),
            fmt_g6(s.r),
            fmt_g6(s.mean_dist_pv),
            fmt_g6(s.sd_dist_pv),
            fmt_g6(s.mean_dist_az),
            fmt_g6(s.circle_hit_fraction),
            s.trials.to_string(),
            s.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison_csv<W: Write>(records: &[ComparisonRecord], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "n",
        "kappa",
        "r",
        "mean_psi",
        "mean_gamma",
        "mean_ratio",
        "min_gamma",
        "upstream_bytes",
        "trials",
        "failures",
    ])?;
    for c in records {
        w.write_record([
            c.method.clone(),
            c.n.to_string(),
            fmt_g6(c.kappa),
            fmt_g6(c.r),
            fmt_g6(c.mean_psi),
            fmt_g6(c.mean_gamma),
            fmt_g6(c.mean_ratio),
            fmt_g6(c.min_gamma),
            c.upstream_bytes.to_string(),
            c.trials.to_string(),
            c.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Area of the ROI disk.
pub fn roi_area(r: f64) -> f64 {
    PI * r * r
}
