//! Experiment configuration: TOML or JSON, chosen by file extension.

use std::path::{Path, PathBuf};

use bpire_core::env::presets;
use bpire_core::tail::FitModel;
use bpire_core::{EnvModel, EnvState, PgfLaw};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAX_N: usize = 5_000;
pub const MIN_SAMPLES: u64 = 100;
pub const MAX_SAMPLES: u64 = 1_000_000_000;
pub const MAX_WORKERS: usize = 256;
pub const MAX_STREAMS: u32 = 4_096;
pub const MAX_CAP: u64 = 10_000_000;
pub const MAX_A: u64 = 64;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub offspring: PgfLaw,
    pub immigration: PgfLaw,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    /// Exact enumeration when affordable, otherwise tilted Monte Carlo spliced
    /// onto the longest affordable exact prefix.
    #[default]
    Auto,
    Exact,
    Direct,
    Tilted,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub label: Option<String>,
    pub preset: Option<String>,
    pub states: Option<Vec<StateSpec>>,
    /// Last kernel index `N`.
    pub n_max: usize,
    /// Survival horizon; defaults to `n_max`.
    pub n: Option<usize>,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub streams: u32,
    pub cap: u64,
    pub window: Option<(usize, usize)>,
    pub kernel: KernelChoice,
    pub accept_rel_width: f64,
    /// Truncation level of the moment hypothesis.
    pub a: u64,
    pub fit: Option<FitModel>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            label: None,
            preset: None,
            states: None,
            n_max: 12,
            n: None,
            samples: 100_000,
            seed: 1,
            workers: 1,
            streams: 64,
            cap: bpire_core::sim::DEFAULT_CAP,
            window: None,
            kernel: KernelChoice::Auto,
            accept_rel_width: 1e-9,
            a: 1,
            fit: None,
        }
    }
}

impl ExperimentConfig {
    pub fn horizon(&self) -> usize {
        self.n.unwrap_or(self.n_max)
    }

    pub fn label(&self) -> String {
        self.label.clone().or_else(|| self.preset.clone()).unwrap_or_else(|| "custom".into())
    }

    pub fn plan(&self) -> bpire_core::McPlan {
        bpire_core::McPlan::new(self.seed, self.streams)
    }

    /// Environment and range checks; the error names the offending key.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        self.validate_env()?;
        self.validate_knobs()
    }

    pub fn validate_env(&self) -> std::result::Result<(), (&'static str, String)> {
        match (&self.preset, &self.states) {
            (Some(_), Some(_)) => Err(("preset", "give either `preset` or `states`, not both".into())),
            (None, None) => Err(("states", "missing environment: set `preset` or `states`".into())),
            (Some(p), None) if presets::by_name(p).is_none() => {
                Err(("preset", format!("unknown preset `{p}`; known: {}", presets::NAMES.join(", "))))
            }
            _ => Ok(()),
        }
    }

    pub fn validate_knobs(&self) -> std::result::Result<(), (&'static str, String)> {
        let in_range = |key: &'static str, ok: bool, msg: String| if ok { Ok(()) } else { Err((key, msg)) };
        in_range("n_max", (1..=MAX_N).contains(&self.n_max), format!("n_max = {} outside [1, {MAX_N}]", self.n_max))?;
        let n = self.horizon();
        in_range("n", (1..=self.n_max + 1).contains(&n), format!("n = {n} outside [1, n_max + 1 = {}]", self.n_max + 1))?;
        in_range(
            "samples",
            (MIN_SAMPLES..=MAX_SAMPLES).contains(&self.samples),
            format!("samples = {} outside [{MIN_SAMPLES}, {MAX_SAMPLES}]", self.samples),
        )?;
        in_range("workers", (1..=MAX_WORKERS).contains(&self.workers), format!("workers = {} outside [1, {MAX_WORKERS}]", self.workers))?;
        in_range("streams", (1..=MAX_STREAMS).contains(&self.streams), format!("streams = {} outside [1, {MAX_STREAMS}]", self.streams))?;
        in_range("cap", (1..=MAX_CAP).contains(&self.cap), format!("cap = {} outside [1, {MAX_CAP}]", self.cap))?;
        in_range("a", (1..=MAX_A).contains(&self.a), format!("a = {} outside [1, {MAX_A}]", self.a))?;
        in_range(
            "accept_rel_width",
            self.accept_rel_width > 0.0 && self.accept_rel_width < 1.0,
            format!("accept_rel_width = {} outside (0, 1)", self.accept_rel_width),
        )?;
        if let Some((lo, hi)) = self.window {
            in_range("window", lo >= 1 && lo < hi && hi <= n, format!("window [{lo}, {hi}] must satisfy 1 <= lo < hi <= n = {n}"))?;
        }
        Ok(())
    }

    pub fn env(&self) -> bpire_core::Result<EnvModel> {
        if let Some(p) = &self.preset {
            return presets::by_name(p).ok_or_else(|| bpire_core::Error::InvalidEnv(format!("unknown preset `{p}`")));
        }
        let specs = self.states.as_deref().unwrap_or_default();
        let states = specs.iter().map(|s| EnvState::new(s.offspring.clone(), s.immigration.clone())).collect::<bpire_core::Result<Vec<_>>>()?;
        EnvModel::new(states, specs.iter().map(|s| s.prob).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Toml,
    Json,
}

fn format_of(path: &Path) -> Result<Format> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => Ok(Format::Toml),
        Some("json") => Ok(Format::Json),
        _ => Err(config_error(path, None, None, "config file must end in .toml or .json".into())),
    }
}

fn config_error(path: &Path, line: Option<usize>, column: Option<usize>, message: String) -> CliError {
    CliError::Config { path: path.to_path_buf(), line, column, message }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

/// Line on which `key` is assigned, for diagnostics raised after parsing.
fn key_line(text: &str, key: &str, format: Format) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        match format {
            Format::Toml => {
                t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
                    || t.trim_start_matches('[').strip_prefix(key).is_some_and(|rest| rest.starts_with(']'))
            }
            Format::Json => t.contains(&format!("\"{key}\"")),
        }
    })
    .map(|i| i + 1)
}

/// Parses and validates a config held in memory; `path` only labels errors.
pub fn parse(path: &Path, text: &str) -> Result<ExperimentConfig> {
    let format = format_of(path)?;
    let cfg: ExperimentConfig = match format {
        Format::Toml => toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map(|s| line_col(text, s.start)).unzip();
            config_error(path, line, col, e.message().trim().to_string())
        })?,
        Format::Json => serde_json::from_str(text).map_err(|e| {
            let (line, col) = if e.line() > 0 { (Some(e.line()), Some(e.column())) } else { (None, None) };
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            config_error(path, line, col, msg)
        })?,
    };
    if let Err((key, message)) = cfg.validate() {
        return Err(config_error(path, key_line(text, key, format), None, message));
    }
    if let Err(e) = cfg.env() {
        return Err(config_error(path, key_line(text, "states", format), None, e.to_string()));
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(PathBuf::from(path), e))?;
    parse(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toml_path() -> &'static Path {
        Path::new("exp.toml")
    }

    #[test]
    fn parses_preset_and_states() {
        let cfg = parse(toml_path(), "preset = \"e_weak\"\nn_max = 20\n").unwrap();
        assert_eq!(cfg.n_max, 20);
        assert_eq!(cfg.horizon(), 20);
        assert_eq!(cfg.env().unwrap().len(), 2);

        let text = r#"
label = "two"
[[states]]
offspring = { type = "lf", m = 2.0, b = 1.5 }
immigration = { type = "poisson", lambda = 1.0 }
prob = 0.4
[[states]]
offspring = { type = "geometric", q = 0.2 }
immigration = { type = "table", p = [0.5, 0.5] }
prob = 0.6
"#;
        let cfg = parse(toml_path(), text).unwrap();
        assert_eq!(cfg.label(), "two");
        assert_eq!(cfg.env().unwrap().len(), 2);

        let json = r#"{"preset": "d1", "seed": 7, "window": [2, 8]}"#;
        let cfg = parse(Path::new("exp.json"), json).unwrap();
        assert_eq!((cfg.seed, cfg.window), (7, Some((2, 8))));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse(toml_path(), "preset = \"d1\"\nn_max = \"ten\"\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(2), .. }), "{err}");
        let err = parse(toml_path(), "preset = \"d1\"\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(3), .. }), "{err}");
        let err = parse(Path::new("exp.json"), "{\n\"preset\": \"d1\",\n\"n_max\": -3\n}").unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(3), .. }), "{err}");
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let err = parse(toml_path(), "preset = \"d1\"\nseed = 3\nsamples = 5\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(3), .. }), "{err}");
        let err = parse(toml_path(), "label = \"x\"\npreset = \"nope\"\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(2), .. }), "{err}");
        let err = parse(toml_path(), "label = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("missing environment"), "{err}");
    }

    #[test]
    fn invalid_laws_and_envs_are_reported() {
        let bad_law = "[[states]]\noffspring = { type = \"lf\", m = 5.0, b = 0.5 }\nimmigration = { type = \"poisson\", lambda = 1.0 }\nprob = 1.0\n";
        let err = parse(toml_path(), bad_law).unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(2), .. }), "{err}");
        let bad_probs = "[[states]]\noffspring = { type = \"lf\", m = 0.5, b = 0.5 }\nimmigration = { type = \"poisson\", lambda = 1.0 }\nprob = 0.5\n";
        let err = parse(toml_path(), bad_probs).unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(1), .. }), "{err}");
    }

    #[test]
    fn rejects_unknown_extension() {
        assert!(parse(Path::new("exp.yaml"), "").is_err());
    }
}
