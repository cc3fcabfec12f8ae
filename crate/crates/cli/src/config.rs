//! Run configuration: command-line flags merged over an optional key=value
//! file merged over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use laakso::JSequence;

use crate::CliError;

/// Settings that may come from a config file. Every field is optional so
/// that flags, file and defaults can be layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub j: Option<Vec<u64>>,
    pub n: Option<usize>,
    pub num_eigs: Option<usize>,
    pub lambda_max: Option<f64>,
    pub max_level: Option<usize>,
    pub dense_threshold: Option<usize>,
    pub tolerance: Option<f64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub coloring: Option<Coloring>,
}

/// How plot markers are colored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Coloring {
    /// Diverging color scale on the eigenvector value.
    #[default]
    Value,
    /// One color per gluing level of the vertex.
    Level,
}

impl Settings {
    /// `other` fills the fields left unset in `self`.
    pub fn or(self, other: Settings) -> Settings {
        Settings {
            j: self.j.or(other.j),
            n: self.n.or(other.n),
            num_eigs: self.num_eigs.or(other.num_eigs),
            lambda_max: self.lambda_max.or(other.lambda_max),
            max_level: self.max_level.or(other.max_level),
            dense_threshold: self.dense_threshold.or(other.dense_threshold),
            tolerance: self.tolerance.or(other.tolerance),
            threads: self.threads.or(other.threads),
            out: self.out.or(other.out),
            width: self.width.or(other.width),
            height: self.height.or(other.height),
            coloring: self.coloring.or(other.coloring),
        }
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        Settings::parse(&text).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))
    }

    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Settings, String> {
        let mut raw = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim().replace('-', "_");
            if raw.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key}", lineno + 1));
            }
        }
        let mut s = Settings::default();
        for (key, value) in raw {
            let bad = |e: &dyn std::fmt::Display| format!("{key} = {value}: {e}");
            match key.as_str() {
                "j" => s.j = Some(parse_j_list(&value).map_err(|e| bad(&e))?),
                "n" => s.n = Some(value.parse().map_err(|e| bad(&e))?),
                "num_eigs" => s.num_eigs = Some(value.parse().map_err(|e| bad(&e))?),
                "lambda_max" => s.lambda_max = Some(value.parse().map_err(|e| bad(&e))?),
                "max_level" => s.max_level = Some(value.parse().map_err(|e| bad(&e))?),
                "dense_threshold" => s.dense_threshold = Some(value.parse().map_err(|e| bad(&e))?),
                "tolerance" => s.tolerance = Some(value.parse().map_err(|e| bad(&e))?),
                "threads" => s.threads = Some(value.parse().map_err(|e| bad(&e))?),
                "out" => s.out = Some(PathBuf::from(value)),
                "width" => s.width = Some(value.parse().map_err(|e| bad(&e))?),
                "height" => s.height = Some(value.parse().map_err(|e| bad(&e))?),
                "coloring" => {
                    s.coloring = Some(match value.as_str() {
                        "value" => Coloring::Value,
                        "level" => Coloring::Level,
                        other => return Err(bad(&format!("unknown coloring {other}"))),
                    })
                }
                other => return Err(format!("unknown key {other}")),
            }
        }
        Ok(s)
    }
}

/// Comma- or space-separated list of integers.
pub fn parse_j_list(text: &str) -> Result<Vec<u64>, String> {
    let values: Result<Vec<u64>, _> =
        text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(str::parse).collect();
    let values = values.map_err(|e| format!("invalid j list {text:?}: {e}"))?;
    if values.is_empty() {
        return Err("empty j list".into());
    }
    Ok(values)
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub j: JSequence,
    pub n: usize,
    pub num_eigs: usize,
    pub lambda_max: Option<f64>,
    pub max_level: Option<usize>,
    pub dense_threshold: usize,
    pub tolerance: f64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub width: u32,
    pub height: u32,
    pub coloring: Coloring,
    pub max_vertices: usize,
}

pub const DEFAULT_NUM_EIGS: usize = 20;
pub const DEFAULT_DENSE_THRESHOLD: usize = 2000;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const MAX_VERTICES_ENV: &str = "LAAKSO_MAX_VERTICES";

impl RunConfig {
    /// Validates merged settings. Errors name the offending flag.
    pub fn resolve(s: Settings, max_vertices_env: Option<String>) -> Result<RunConfig, CliError> {
        let usage = |m: String| CliError::Usage(m);
        let j = s.j.ok_or_else(|| usage("--j is required".into()))?;
        if let Some((i, v)) = j.iter().enumerate().find(|(_, &v)| v < 2) {
            return Err(usage(format!("--j: entry {} is {v}, every j_i must be at least 2", i + 1)));
        }
        let j = JSequence::from_list(&j).map_err(|e| usage(format!("--j: {e}")))?;
        let num_eigs = s.num_eigs.unwrap_or(DEFAULT_NUM_EIGS);
        if num_eigs == 0 {
            return Err(usage("--num-eigs must be at least 1".into()));
        }
        if let Some(l) = s.lambda_max {
            if !(l.is_finite() && l >= 0.0) {
                return Err(usage(format!("--lambda-max must be a non-negative number, got {l}")));
            }
        }
        let tolerance = s.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(usage(format!("--tolerance must lie in (0, 1), got {tolerance}")));
        }
        if s.threads == Some(0) {
            return Err(usage("--threads must be at least 1".into()));
        }
        let (width, height) = (s.width.unwrap_or(960), s.height.unwrap_or(540));
        if width < 64 || height < 64 {
            return Err(usage("--width and --height must be at least 64".into()));
        }
        let max_vertices = match max_vertices_env {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|e| usage(format!("{MAX_VERTICES_ENV}={v}: {e}")))?,
            None => laakso::graph::DEFAULT_MAX_VERTICES,
        };
        Ok(RunConfig {
            j,
            n: s.n.unwrap_or(0),
            num_eigs,
            lambda_max: s.lambda_max,
            max_level: s.max_level,
            dense_threshold: s.dense_threshold.unwrap_or(DEFAULT_DENSE_THRESHOLD),
            tolerance,
            threads: s.threads,
            out: s.out,
            width,
            height,
            coloring: s.coloring.unwrap_or_default(),
            max_vertices,
        })
    }
}
