//! Command dispatch and artifact production.

use std::path::{Path, PathBuf};

use bpire_core::env::EnvModel;
use bpire_core::kernel::{kernel_exact, kernel_mc_series, r1, McMode, DEFAULT_BUDGET};
use bpire_core::sim::{censored_fraction, empirical_survival, simulate_batch};
use bpire_core::tail::{
    case1_constant, decay_fit, find_root, survival_from_kernel, FitModel, RootOptions, SurvivalCurve, DecayCase,
};
use bpire_core::{Error as CoreError, KernelSeries, RegimeKind};
use serde_json::{json, Value};

use crate::acceptance::{self, SuiteReport};
use crate::config::{ExperimentConfig, KernelChoice};
use crate::error::{CliError, Result, EXIT_ACCEPTANCE, EXIT_OK, EXIT_UNDECIDED};
use crate::output::{fmt_f64, read_csv, Meta, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Classify,
    Kernel,
    Tail,
    Simulate,
    Verify,
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Kernel => "kernel",
            Command::Tail => "tail",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub suite: Option<SuiteReport>,
}

impl Outcome {
    fn ok(files: Vec<PathBuf>) -> Self {
        Self { exit_code: EXIT_OK, files, suite: None }
    }
}

/// Runs one command on a pool of `cfg.workers` threads.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cfg.workers)))?;
    let dir = OutDir::create(out)?;
    let meta = Meta::new(cmd.as_str(), cfg);
    pool.install(|| match cmd {
        Command::Classify => classify(cfg, &dir, &meta),
        Command::Kernel => kernel(cfg, &dir, &meta),
        Command::Tail => tail(cfg, &dir, &meta),
        Command::Simulate => simulate(cfg, &dir, &meta),
        Command::Verify => verify(cfg, &dir, &meta),
        Command::Report => report(&dir, &meta),
    })
}

fn classify(cfg: &ExperimentConfig, dir: &OutDir, meta: &Meta) -> Result<Outcome> {
    let env = cfg.env()?;
    let regime = env.classify()?;
    let hypotheses = env.hypothesis_report(cfg.a)?;
    let lattice = if regime.flags.a2.lattice { "lattice" } else { "nonlattice" };
    let payload = json!({
        "kind": regime.kind,
        "beta": regime.beta,
        "delta": regime.delta,
        "gamma": regime.gamma,
        "mean_x": regime.mean_x,
        "a2": lattice,
        "hypotheses": hypotheses,
    });
    Ok(Outcome::ok(vec![dir.json("regime.json", meta, &payload)?]))
}

/// Largest `n` whose exact kernel fits the enumeration budget.
fn exact_limit(env: &EnvModel) -> usize {
    let k = env.len() as f64;
    if k <= 1.0 {
        return usize::MAX;
    }
    let mut n = 0usize;
    while k.powi(n as i32 + 2) <= DEFAULT_BUDGET {
        n += 1;
    }
    n
}

pub fn build_kernel(env: &EnvModel, cfg: &ExperimentConfig) -> Result<KernelSeries> {
    let plan = cfg.plan();
    let series = match cfg.kernel {
        KernelChoice::Exact => kernel_exact(env, cfg.n_max)?,
        KernelChoice::Direct => kernel_mc_series(env, cfg.n_max, cfg.samples, McMode::Direct, &plan)?,
        KernelChoice::Tilted => kernel_mc_series(env, cfg.n_max, cfg.samples, McMode::Tilted, &plan)?,
        KernelChoice::Auto => {
            let limit = exact_limit(env);
            if cfg.n_max <= limit {
                kernel_exact(env, cfg.n_max)?
            } else {
                let mc = kernel_mc_series(env, cfg.n_max, cfg.samples, McMode::Tilted, &plan)?;
                KernelSeries::splice(&kernel_exact(env, limit)?, &mc)
            }
        }
    };
    Ok(series)
}

fn kernel(cfg: &ExperimentConfig, dir: &OutDir, meta: &Meta) -> Result<Outcome> {
    let env = cfg.env()?;
    let k = build_kernel(&env, cfg)?;
    let rows: Vec<Vec<String>> = k
        .h
        .iter()
        .zip(&k.hstar)
        .enumerate()
        .map(|(n, (h, hs))| {
            vec![n.to_string(), fmt_f64(h.value), fmt_f64(h.se), fmt_f64(hs.value), fmt_f64(hs.se), h.method.as_str().into()]
        })
        .collect();
    let path = dir.csv("kernel.csv", meta, &["n", "H", "H_se", "Hstar", "Hstar_se", "method"], &rows)?;
    Ok(Outcome::ok(vec![path]))
}

fn survival_rows(curve: &SurvivalCurve) -> Vec<Vec<String>> {
    curve
        .points
        .iter()
        .map(|p| vec![p.n.to_string(), fmt_f64(p.value), fmt_f64(p.half_width), p.provenance.as_str().into()])
        .collect()
}

const SURVIVAL_HEADER: &[&str] = &["n", "R", "half_width", "provenance"];

fn tail(cfg: &ExperimentConfig, dir: &OutDir, meta: &Meta) -> Result<Outcome> {
    let env = cfg.env()?;
    let k = build_kernel(&env, cfg)?;
    let r1 = r1(&env)?;
    let curve = survival_from_kernel(&k, r1, cfg.horizon())?;
    let mut files = vec![dir.csv("survival.csv", meta, SURVIVAL_HEADER, &survival_rows(&curve))?];

    let opts = RootOptions { accept_rel_width: cfg.accept_rel_width, ..Default::default() };
    let (root, case, undecided) = match find_root(&k, &opts) {
        Ok(cert) => {
            let constant = match cert.case {
                DecayCase::Case1 => Some(case1_constant(&k, r1, cert.r)?),
                _ => None,
            };
            let root = json!({ "status": "decided", "certificate": cert, "case1_constant": constant });
            (root, Some(cert.case), None)
        }
        Err(CoreError::Undecided { reason, required_n }) => {
            let root = json!({ "status": "undecided", "reason": reason, "required_n": required_n });
            (root, None, Some(reason))
        }
        Err(e) => return Err(e.into()),
    };
    let root = json!({
        "kind": k.kind,
        "gamma": k.gamma,
        "delta": k.delta,
        "r1": r1,
        "n_max": k.n_max(),
        "root": root,
    });
    files.push(dir.json("root.json", meta, &root)?);

    let model = cfg.fit.unwrap_or(match (case, k.kind) {
        (Some(DecayCase::Case1), _) | (None, Some(RegimeKind::Strongly)) => FitModel::PureExponential,
        _ => FitModel::ExponentialTimesPower,
    });
    let fit = match decay_fit(&curve, model, cfg.window, Some(k.gamma)) {
        Ok(f) => json!({ "status": "ok", "fit": f }),
        Err(e) => json!({ "status": "failed", "model": model, "error": e.to_string() }),
    };
    files.push(dir.json("fit.json", meta, &fit)?);

    let exit_code = if undecided.is_some() { EXIT_UNDECIDED } else { EXIT_OK };
    Ok(Outcome { exit_code, files, suite: None })
}

fn simulate(cfg: &ExperimentConfig, dir: &OutDir, meta: &Meta) -> Result<Outcome> {
    let env = cfg.env()?;
    let samples = simulate_batch(&env, cfg.samples, cfg.cap, &cfg.plan())?;
    let rows: Vec<Vec<String>> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| vec![i.to_string(), s.zeta.to_string(), u8::from(s.censored).to_string(), s.peak.to_string()])
        .collect();
    let mut files = vec![dir.csv("samples.csv", meta, &["index", "zeta", "censored", "peak"], &rows)?];
    if censored_fraction(&samples) > 0.0 {
        eprintln!("warning: {:.3e} of life periods hit the cap of {}", censored_fraction(&samples), cfg.cap);
    }
    let curve = empirical_survival(&samples, cfg.horizon())?;
    files.push(dir.csv("empirical_survival.csv", meta, SURVIVAL_HEADER, &survival_rows(&curve))?);
    Ok(Outcome::ok(files))
}

fn verify(cfg: &ExperimentConfig, dir: &OutDir, meta: &Meta) -> Result<Outcome> {
    let suite = acceptance::run_suite(cfg.seed, cfg.workers);
    let path = dir.json("acceptance.json", meta, &suite)?;
    let exit_code = if suite.all_passed { EXIT_OK } else { EXIT_ACCEPTANCE };
    Ok(Outcome { exit_code, files: vec![path], suite: Some(suite) })
}

fn read_json(path: &Path) -> Result<Option<Value>> {
    match std::fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{}: not a valid artifact: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// Survival values by `n` from a survival CSV, if present.
fn read_survival(path: &Path) -> Result<Option<Vec<(usize, f64, f64)>>> {
    if !path.exists() {
        return Ok(None);
    }
    let bad = |what: &str| CliError::Usage(format!("{}: malformed {what}", path.display()));
    read_csv(path)?
        .iter()
        .map(|r| {
            let n = r.get(0).and_then(|x| x.parse().ok()).ok_or_else(|| bad("n"))?;
            let v = r.get(1).and_then(|x| x.parse().ok()).ok_or_else(|| bad("R"))?;
            let w = r.get(2).and_then(|x| x.parse().ok()).ok_or_else(|| bad("half_width"))?;
            Ok((n, v, w))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn report(dir: &OutDir, meta: &Meta) -> Result<Outcome> {
    let root = read_json(&dir.path("root.json"))?
        .ok_or_else(|| CliError::Usage(format!("{}: missing root.json; run `tail` first", dir.path("").display())))?;
    let regime = read_json(&dir.path("regime.json"))?;
    let fit = read_json(&dir.path("fit.json"))?;
    let acceptance = read_json(&dir.path("acceptance.json"))?;

    let verdict = match root["root"]["status"].as_str() {
        Some("decided") => root["root"]["certificate"]["case"].clone(),
        _ => json!("Undecided"),
    };
    let hashes: Vec<&str> = [Some(&root), regime.as_ref(), fit.as_ref()]
        .into_iter()
        .flatten()
        .filter_map(|v| v["meta"]["config_sha256"].as_str())
        .collect();
    let consistent = hashes.windows(2).all(|w| w[0] == w[1]);

    let recurrence = read_survival(&dir.path("survival.csv"))?;
    let empirical = read_survival(&dir.path("empirical_survival.csv"))?;
    let agreement = match (&recurrence, &empirical) {
        (Some(rec), Some(emp)) => {
            let compared: Vec<(usize, bool)> = rec
                .iter()
                .filter_map(|&(n, v, w)| emp.iter().find(|e| e.0 == n).map(|&(_, ev, ew)| (n, (v - ev).abs() <= w + ew)))
                .collect();
            let failing: Vec<usize> = compared.iter().filter(|c| !c.1).map(|c| c.0).collect();
            json!({ "points_compared": compared.len(), "outside_band": failing })
        }
        _ => Value::Null,
    };

    let strip = |v: Option<Value>| {
        v.map(|mut v| {
            if let Value::Object(m) = &mut v {
                m.remove("meta");
            }
            v
        })
    };
    let summary = json!({
        "verdict": verdict,
        "consistent_config": consistent,
        "regime": strip(regime),
        "root": strip(Some(root)),
        "fit": strip(fit),
        "survival_points": recurrence.as_ref().map(Vec::len),
        "recurrence_vs_empirical": agreement,
        "acceptance_passed": acceptance.as_ref().map(|a| a["all_passed"].clone()),
    });
    Ok(Outcome::ok(vec![dir.json("summary.json", meta, &summary)?]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(preset: &str) -> ExperimentConfig {
        ExperimentConfig { preset: Some(preset.into()), ..Default::default() }
    }

    #[test]
    fn exact_limit_respects_budget() {
        let two = bpire_core::env::presets::e_weak();
        let n = exact_limit(&two);
        assert!(2f64.powi(n as i32 + 1) <= DEFAULT_BUDGET && 2f64.powi(n as i32 + 2) > DEFAULT_BUDGET);
        assert_eq!(exact_limit(&bpire_core::env::presets::d1()), usize::MAX);
    }

    #[test]
    fn auto_kernel_splices_past_the_budget() {
        let env = bpire_core::env::presets::e_weak();
        let c = ExperimentConfig { n_max: 40, samples: 1_000, ..cfg("e_weak") };
        let k = build_kernel(&env, &c).unwrap();
        let limit = exact_limit(&env);
        assert_eq!(k.h[limit].method, bpire_core::kernel::Method::Exact);
        assert_eq!(k.h[limit + 1].method, bpire_core::kernel::Method::TiltedMc);
    }

    #[test]
    fn tail_then_report() {
        let dir = tempfile::tempdir().unwrap();
        let short = run(Command::Tail, &cfg("d1"), dir.path()).unwrap();
        assert_eq!(short.exit_code, EXIT_UNDECIDED);
        let c = ExperimentConfig { n_max: 100, n: Some(40), ..cfg("d1") };
        assert_eq!(run(Command::Tail, &c, dir.path()).unwrap().exit_code, EXIT_OK);
        run(Command::Classify, &c, dir.path()).unwrap();
        let out = run(Command::Report, &c, dir.path()).unwrap();
        let summary: Value = serde_json::from_slice(&std::fs::read(&out.files[0]).unwrap()).unwrap();
        assert_eq!(summary["verdict"], "Case1");
        assert_eq!(summary["consistent_config"], true);
        assert_eq!(summary["meta"]["seed"], 1);
    }

    #[test]
    fn report_needs_root() {
        let dir = tempfile::tempdir().unwrap();
        assert!(run(Command::Report, &cfg("d1"), dir.path()).is_err());
    }
}
