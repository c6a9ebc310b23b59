//! Scenario runner: config file in, CSV files and a manifest out.
//!
//! Exit codes: 0 success, 2 config (or output directory) error, 3 numerical
//! failure. Nothing is left on disk when a run fails.

mod catalog;
mod scenarios;
mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::RsmaError;
use crate::optimize::OptimizerConfig;

pub use catalog::list_scenarios;
pub use scenarios::{
    EeSweep, Ic2Sweep, LayoutEntry, MmfSweep, MulticellEval, RateRegion, RegionMap, Scenario, UplinkRegion,
};
pub use selftest::{selftest, SelfCheck};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Ic2Sweep,
    RateRegion,
    MmfSweep,
    EeSweep,
    RegionMap,
    UplinkRegion,
    MulticellEval,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::Ic2Sweep,
        ScenarioKind::RateRegion,
        ScenarioKind::MmfSweep,
        ScenarioKind::EeSweep,
        ScenarioKind::RegionMap,
        ScenarioKind::UplinkRegion,
        ScenarioKind::MulticellEval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Ic2Sweep => "ic2_sweep",
            ScenarioKind::RateRegion => "rate_region",
            ScenarioKind::MmfSweep => "mmf_sweep",
            ScenarioKind::EeSweep => "ee_sweep",
            ScenarioKind::RegionMap => "region_map",
            ScenarioKind::UplinkRegion => "uplink_region",
            ScenarioKind::MulticellEval => "multicell_eval",
        }
    }

    pub fn parse(s: &str) -> Result<Self, RunError> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| RunError::Config(format!("unknown scenario kind '{s}' (see `rsma list`)")))
    }
}

/// Raw config document; `params` is checked against the kind's schema by
/// [`RunConfig::scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Option<Value>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

impl RunConfig {
    /// TOML, or JSON when the document starts with `{`.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| RunError::Config(format!("invalid JSON config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| RunError::Config(format!("invalid TOML config: {e}")))
        }
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> Result<Scenario, RunError> {
        let kind = ScenarioKind::parse(&self.kind)?;
        self.optimizer.validate().map_err(|e| RunError::Config(e.to_string()))?;
        Scenario::from_params(kind, self.params.clone().unwrap_or_else(|| json!({})))
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl From<RsmaError> for RunError {
    fn from(e: RsmaError) -> Self {
        match e {
            RsmaError::Numerical(_) | RsmaError::DegenerateChannel(_) => RunError::Numerical(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    /// Overrides the config's seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub config_hash: String,
    pub wall_time_s: f64,
}

/// A rendered output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub name: String,
    pub contents: String,
}

/// Fully resolved config (defaults filled in) and its hash.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub scenario: Scenario,
    pub optimizer: OptimizerConfig,
    pub echo: Value,
    pub hash: String,
}

pub fn resolve(cfg: &RunConfig, seed_override: Option<u64>) -> Result<Resolved, RunError> {
    let scenario = cfg.scenario()?;
    let kind = scenario.kind();
    let seed = seed_override.unwrap_or(cfg.seed);
    let echo = json!({
        "kind": kind.as_str(),
        "seed": seed,
        "params": scenario.params_json(),
        "optimizer": cfg.optimizer,
    });
    let hash = hex(&Sha256::digest(echo.to_string().as_bytes()));
    Ok(Resolved { kind, seed, scenario, optimizer: cfg.optimizer.clone(), echo, hash })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Compute every CSV of a resolved config in memory.
pub fn render(res: &Resolved, jobs: Option<usize>) -> Result<Vec<Output>, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(RunError::Config("jobs must be >= 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    let tables = pool.install(|| res.scenario.execute(res.seed, &res.optimizer))?;
    tables.into_iter().map(|t| t.render(res)).collect()
}

pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let cfg = RunConfig::load(config_path)?;
    run_config(&cfg, opts)
}

pub fn run_config(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let res = resolve(cfg, opts.seed)?;
    let outputs = render(&res, opts.jobs)?;
    let wall = start.elapsed().as_secs_f64();
    let manifest = json!({
        "tool": "rsma",
        "version": VERSION,
        "kind": res.kind.as_str(),
        "config_hash": res.hash,
        "config": res.echo,
        "seeds": { "base": res.seed, "derivation": "sample i uses derive_seed(base, i)" },
        "jobs": opts.jobs,
        "outputs": outputs.iter().map(|o| o.name.clone()).collect::<Vec<_>>(),
        "started_unix": started_unix,
        "wall_time_s": wall,
    });
    let mut all = outputs;
    all.push(Output {
        name: "manifest.json".into(),
        contents: serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    });
    let files = write_all(&opts.out_dir, &all)?;
    let manifest = files.last().cloned().expect("manifest written");
    Ok(RunSummary { files, manifest, config_hash: res.hash, wall_time_s: wall })
}

fn write_all(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>, RunError> {
    let created = !dir.exists();
    let fail = |written: &[PathBuf], e: std::io::Error| {
        for p in written {
            let _ = fs::remove_file(p);
        }
        if created {
            let _ = fs::remove_dir_all(dir);
        }
        RunError::Output(format!("{}: {e}", dir.display()))
    };
    if let Err(e) = fs::create_dir_all(dir) {
        return Err(fail(&[], e));
    }
    let mut written = Vec::new();
    for o in outputs {
        let path = dir.join(&o.name);
        if let Err(e) = fs::write(&path, o.contents.as_bytes()) {
            return Err(fail(&written, e));
        }
        written.push(path);
    }
    Ok(written)
}

/// 12 significant digits, `.` decimal point, `0` for both zeros.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let r: f64 = format!("{x:.11e}").parse().expect("round trip");
    format!("{r:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Cell {
    Num(f64),
    Text(String),
}

/// A CSV table before rendering.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `# key=value` header lines.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, k: &str, v: &str) -> Self {
        self.notes.push((k.into(), v.into()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, res: &Resolved) -> Result<Output, RunError> {
        let mut s = String::new();
        s.push_str(&format!("# config_hash={}\n", res.hash));
        s.push_str(&format!("# kind={} seed={} version={}\n", res.kind.as_str(), res.seed, VERSION));
        s.push_str(&format!("# config={}\n", res.echo));
        for (k, v) in &self.notes {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) if !x.is_finite() => Err(RunError::Numerical(format!(
                        "{}: non-finite value in row {i}",
                        self.name
                    ))),
                    Cell::Num(x) => Ok(fmt_num(*x)),
                    Cell::Text(t) => Ok(t.clone()),
                })
                .collect::<Result<_, _>>()?;
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        Ok(Output { name: format!("{}.csv", self.name), contents: s })
    }
}

#[cfg(test)]
mod tests;
