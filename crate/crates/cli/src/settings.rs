//! Flags and the optional TOML config file. Every config key is a flag name;
//! flags given on the command line win over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};

use crate::Failure;

#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    /// I, II, III, Ia, IIa, IIIa (comma list for sweeps)
    #[arg(long)]
    pub model: Option<String>,
    /// Vertex count; sweeps take lists like 3,5,7 or ranges like 3..10
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// ROI radius in meters (comma list for sweeps)
    #[arg(long)]
    pub r: Option<String>,
    /// Requested anonymity radius in meters
    #[arg(long)]
    pub iota: Option<String>,
    /// Sector-angle randomness (comma list for sweeps)
    #[arg(long)]
    pub kappa: Option<String>,
    /// Radius growth cap for exterior shifting
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub iterations: Option<String>,
    /// Side of the square region for sweeps (meters)
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long)]
    pub uid: Option<String>,
    /// POI category code
    #[arg(long)]
    pub poi: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML file with the same keys as the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
    Hex,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
            Format::Hex => "hex",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

const KEYS: [&str; 16] = [
    "model",
    "n",
    "x",
    "y",
    "r",
    "iota",
    "kappa",
    "mu",
    "seed",
    "iterations",
    "region",
    "uid",
    "poi",
    "out",
    "format",
    "config",
];

/// Resolved string values, flags over config file.
pub struct Settings {
    values: BTreeMap<&'static str, String>,
    out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn toml_to_string(key: &str, v: &toml::Value) -> Result<String, Failure> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|i| toml_to_string(key, i))
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => return Err(usage(format!("config key '{key}' has an unsupported type"))),
    })
}

impl Settings {
    pub fn load(opts: Opts) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        if let Some(path) = &opts.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
            for (k, v) in &table {
                let key = KEYS
                    .iter()
                    .find(|&&known| known == k && known != "config")
                    .ok_or_else(|| usage(format!("unknown config key '{k}'")))?;
                values.insert(*key, toml_to_string(k, v)?);
            }
        }
        let flags = [
            ("model", opts.model),
            ("n", opts.n),
            ("x", opts.x),
            ("y", opts.y),
            ("r", opts.r),
            ("iota", opts.iota),
            ("kappa", opts.kappa),
            ("mu", opts.mu),
            ("seed", opts.seed),
            ("iterations", opts.iterations),
            ("region", opts.region),
            ("uid", opts.uid),
            ("poi", opts.poi),
            ("format", opts.format.map(|f| f.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k, v);
            }
        }
        let out = opts.out.or_else(|| values.get("out").map(PathBuf::from));
        Ok(Settings { values, out })
    }

    pub fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|e| usage(format!("invalid --{key} '{v}': {e}")))
            })
            .transpose()
    }

    pub fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T, Failure>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    pub fn format(&self, default: Format) -> Result<Format, Failure> {
        self.parse("format", default)
    }

    /// Comma-separated list, falling back to `default` (same syntax).
    pub fn list<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>, Failure>
    where
        T::Err: fmt::Display,
    {
        let raw = self.values.get(key).map_or(default, String::as_str);
        let items = raw
            .split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|e| usage(format!("invalid --{key} item '{item}': {e}")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(usage(format!("--{key} is empty")));
        }
        Ok(items)
    }

    /// List of vertex counts; items may be inclusive ranges `a..b`.
    pub fn n_list(&self, default: &str) -> Result<Vec<usize>, Failure> {
        let raw = self.values.get("n").map_or(default, String::as_str);
        let bad = |item: &str| usage(format!("invalid --n item '{item}'"));
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim) {
            match item.split_once("..") {
                Some((a, b)) => {
                    let a: usize = a.trim().parse().map_err(|_| bad(item))?;
                    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad(item))?;
                    if a > b {
                        return Err(bad(item));
                    }
                    out.extend(a..=b);
                }
                None => out.push(item.parse().map_err(|_| bad(item))?),
            }
        }
        Ok(out)
    }
}
