use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{
    derive_seed, gen_multicell_rayleigh, gen_rayleigh, geometry_2user, theta_for_rho, ChannelSet, IcChannel,
    MultiCellChannelSet,
};
use crate::error::Result;
use crate::ic2::{baseline_rates_with, classify_regime, optimize_t, OrthogonalPower};
use crate::linalg::{c, dominant_left_singular, hstack, CMat};
use crate::multicell::{rate_coordinated, stack_cooperative, CoordConfig};
use crate::optimize::{
    dbm_to_watt, ergodic_average, mean_stderr, optimize, rate_region_boundary, EnsembleSpec, Metric, OptimizerConfig,
    EE_ETA, EE_P_DYN_DBM, EE_P_STA_W,
};
use crate::schemes::{build_layout, LayoutOptions, LayoutSpec, SchemeKind};
use crate::uplink::{find_split_for_point, mac_region_2user, SisoOrder, SplitSearch};

use super::{Cell, RunError, ScenarioKind, Table};

/// Resolved scenario with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Ic2Sweep(Ic2Sweep),
    RateRegion(RateRegion),
    MmfSweep(MmfSweep),
    EeSweep(EeSweep),
    RegionMap(RegionMap),
    UplinkRegion(UplinkRegion),
    MulticellEval(MulticellEval),
}

fn parse<T: DeserializeOwned>(kind: ScenarioKind, v: Value) -> std::result::Result<T, RunError> {
    serde_json::from_value(v).map_err(|e| RunError::Config(format!("{} params: {e}", kind.as_str())))
}

fn cfg_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl Scenario {
    pub fn from_params(kind: ScenarioKind, v: Value) -> std::result::Result<Self, RunError> {
        let s = match kind {
            ScenarioKind::Ic2Sweep => Scenario::Ic2Sweep(parse(kind, v)?),
            ScenarioKind::RateRegion => Scenario::RateRegion(parse(kind, v)?),
            ScenarioKind::MmfSweep => Scenario::MmfSweep(parse(kind, v)?),
            ScenarioKind::EeSweep => Scenario::EeSweep(parse(kind, v)?),
            ScenarioKind::RegionMap => Scenario::RegionMap(parse(kind, v)?),
            ScenarioKind::UplinkRegion => Scenario::UplinkRegion(parse(kind, v)?),
            ScenarioKind::MulticellEval => Scenario::MulticellEval(parse(kind, v)?),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::Ic2Sweep(_) => ScenarioKind::Ic2Sweep,
            Scenario::RateRegion(_) => ScenarioKind::RateRegion,
            Scenario::MmfSweep(_) => ScenarioKind::MmfSweep,
            Scenario::EeSweep(_) => ScenarioKind::EeSweep,
            Scenario::RegionMap(_) => ScenarioKind::RegionMap,
            Scenario::UplinkRegion(_) => ScenarioKind::UplinkRegion,
            Scenario::MulticellEval(_) => ScenarioKind::MulticellEval,
        }
    }

    pub fn params_json(&self) -> Value {
        let v = match self {
            Scenario::Ic2Sweep(p) => serde_json::to_value(p),
            Scenario::RateRegion(p) => serde_json::to_value(p),
            Scenario::MmfSweep(p) => serde_json::to_value(p),
            Scenario::EeSweep(p) => serde_json::to_value(p),
            Scenario::RegionMap(p) => serde_json::to_value(p),
            Scenario::UplinkRegion(p) => serde_json::to_value(p),
            Scenario::MulticellEval(p) => serde_json::to_value(p),
        };
        v.expect("params serialize")
    }

    /// Defaults of a kind, as written in the catalog.
    pub fn defaults(kind: ScenarioKind) -> Value {
        Scenario::from_params(kind, serde_json::json!({})).expect("defaults are valid").params_json()
    }

    pub fn validate(&self) -> std::result::Result<(), RunError> {
        match self {
            Scenario::Ic2Sweep(p) => p.validate(),
            Scenario::RateRegion(p) => p.validate(),
            Scenario::MmfSweep(p) => p.validate(),
            Scenario::EeSweep(p) => p.validate(),
            Scenario::RegionMap(p) => p.validate(),
            Scenario::UplinkRegion(p) => p.validate(),
            Scenario::MulticellEval(p) => p.validate(),
        }
    }

    pub(crate) fn execute(&self, seed: u64, opt: &OptimizerConfig) -> std::result::Result<Vec<Table>, RunError> {
        match self {
            Scenario::Ic2Sweep(p) => p.execute(),
            Scenario::RateRegion(p) => p.execute(seed, opt),
            Scenario::MmfSweep(p) => p.execute(seed, opt),
            Scenario::EeSweep(p) => p.execute(seed, opt),
            Scenario::RegionMap(p) => p.execute(opt),
            Scenario::UplinkRegion(p) => p.execute(seed),
            Scenario::MulticellEval(p) => p.execute(seed, opt),
        }
    }
}

fn check_snr(snr_db: &[f64]) -> std::result::Result<(), RunError> {
    if snr_db.is_empty() {
        return Err(cfg_err("snr_db must not be empty"));
    }
    if snr_db.iter().any(|s| !s.is_finite()) {
        return Err(cfg_err("snr_db values must be finite"));
    }
    if snr_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg_err("snr_db values must be strictly increasing"));
    }
    Ok(())
}

fn power_of(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// A layout to compare: a scheme name (`rs`, `sdma`, `noma`, `noma_g3`, ...)
/// or a table with explicit options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutEntry {
    Name(String),
    Custom(CustomLayout),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomLayout {
    pub scheme: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub groups: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub noma_order: Option<Vec<usize>>,
    #[serde(default)]
    pub dpc_order: Option<Vec<usize>>,
    #[serde(default)]
    pub oma_user: Option<usize>,
}

fn names(list: &[&str]) -> Vec<LayoutEntry> {
    list.iter().map(|s| LayoutEntry::Name(s.to_string())).collect()
}

/// `n` contiguous groups of near-equal size.
fn chunk_groups(k: usize, n: usize) -> Vec<Vec<usize>> {
    let n = n.clamp(1, k);
    let (q, r) = (k / n, k % n);
    let mut out = Vec::new();
    let mut u = 0;
    for g in 0..n {
        let len = q + usize::from(g < r);
        out.push((u..u + len).collect());
        u += len;
    }
    out
}

impl LayoutEntry {
    pub fn resolve(&self, dims: &[usize]) -> std::result::Result<(String, LayoutSpec), RunError> {
        let k = dims.len();
        let (label, kind, opts) = match self {
            LayoutEntry::Name(name) => {
                let name = name.to_ascii_lowercase();
                if let Some(n) = name.strip_prefix("noma_g") {
                    let n: usize = n.parse().map_err(|_| cfg_err(format!("bad NOMA group count in '{name}'")))?;
                    if n == 0 || n > k {
                        return Err(cfg_err(format!("'{name}': group count must lie in 1..={k}")));
                    }
                    let opts = LayoutOptions { groups: Some(chunk_groups(k, n)), ..Default::default() };
                    (name, SchemeKind::NOMA, opts)
                } else {
                    let kind = SchemeKind::parse(&name).map_err(|e| cfg_err(e.to_string()))?;
                    let mut opts = LayoutOptions::default();
                    if kind == SchemeKind::HRS {
                        opts.groups = Some(chunk_groups(k, 2));
                    }
                    (name, kind, opts)
                }
            }
            LayoutEntry::Custom(cl) => {
                let kind = SchemeKind::parse(&cl.scheme).map_err(|e| cfg_err(e.to_string()))?;
                let mut groups = cl.groups.clone();
                if kind == SchemeKind::HRS && groups.is_none() {
                    groups = Some(chunk_groups(k, 2));
                }
                let opts = LayoutOptions {
                    groups,
                    noma_order: cl.noma_order.clone(),
                    dpc_order: cl.dpc_order.clone(),
                    oma_user: cl.oma_user,
                    ..Default::default()
                };
                (cl.label.clone().unwrap_or_else(|| kind.as_str().to_string()), kind, opts)
            }
        };
        if label.is_empty() || !label.chars().all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_') {
            return Err(cfg_err(format!("layout label '{label}' must be [a-z0-9_]+")));
        }
        Ok((label, LayoutSpec { kind, dims: dims.to_vec(), options: opts }))
    }
}

/// Resolve and dry-build every layout against a probe channel.
fn resolve_layouts(
    entries: &[LayoutEntry],
    tx: usize,
    rx: &[usize],
) -> std::result::Result<Vec<(String, LayoutSpec)>, RunError> {
    if entries.is_empty() {
        return Err(cfg_err("at least one layout is required"));
    }
    let probe = gen_rayleigh(0, tx, rx, &vec![1.0; rx.len()]).map_err(|e| cfg_err(e.to_string()))?;
    let mut out: Vec<(String, LayoutSpec)> = Vec::new();
    for e in entries {
        let (label, spec) = e.resolve(rx)?;
        if out.iter().any(|(l, _)| *l == label) {
            return Err(cfg_err(format!("duplicate layout label '{label}'")));
        }
        spec.build(&probe).map_err(|e| cfg_err(format!("layout '{label}': {e}")))?;
        out.push((label, spec));
    }
    Ok(out)
}

fn check_ensemble(tx: usize, rx: &[usize], variances: &[f64], samples: usize) -> std::result::Result<(), RunError> {
    if tx == 0 || rx.is_empty() || rx.contains(&0) {
        return Err(cfg_err("tx and every rx must be >= 1"));
    }
    if variances.len() != rx.len() {
        return Err(cfg_err("one variance per user required"));
    }
    if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(cfg_err("variances must be positive and finite"));
    }
    if samples == 0 {
        return Err(cfg_err("samples must be >= 1"));
    }
    Ok(())
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

fn text(s: &str) -> Cell {
    Cell::Text(s.to_string())
}

// ---------------------------------------------------------------- ic2_sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ic2Sweep {
    /// `P |h_d|^2` in dB.
    pub snr_db: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub points: usize,
    pub grid_points: usize,
    /// `same_power` or `energy_preserving`.
    pub orthogonal: String,
}

impl Default for Ic2Sweep {
    fn default() -> Self {
        Self {
            snr_db: 30.0,
            ratio_min: 0.1,
            ratio_max: 100.0,
            points: 200,
            grid_points: crate::ic2::DEFAULT_GRID_POINTS,
            orthogonal: OrthogonalPower::SamePower.as_str().into(),
        }
    }
}

impl Ic2Sweep {
    fn policy(&self) -> std::result::Result<OrthogonalPower, RunError> {
        match self.orthogonal.as_str() {
            "same_power" => Ok(OrthogonalPower::SamePower),
            "energy_preserving" => Ok(OrthogonalPower::EnergyPreserving),
            o => Err(cfg_err(format!("orthogonal must be same_power or energy_preserving, got '{o}'"))),
        }
    }

    fn validate(&self) -> std::result::Result<(), RunError> {
        self.policy()?;
        check_snr(&[self.snr_db])?;
        if !(self.ratio_min > 0.0 && self.ratio_max >= self.ratio_min && self.ratio_max.is_finite()) {
            return Err(cfg_err("need 0 < ratio_min <= ratio_max < inf"));
        }
        if self.points == 0 || self.grid_points < 2 {
            return Err(cfg_err("points >= 1 and grid_points >= 2 required"));
        }
        Ok(())
    }

    fn execute(&self) -> std::result::Result<Vec<Table>, RunError> {
        let policy = self.policy()?;
        let p = power_of(self.snr_db);
        let rows: Vec<Result<Vec<Cell>>> = log_grid(self.ratio_min, self.ratio_max, self.points)
            .into_par_iter()
            .map(|ratio| {
                let ch = IcChannel::from_gains(1.0, ratio, p)?;
                let (_, rs) = optimize_t(&ch, self.grid_points)?;
                let b = baseline_rates_with(&ch, policy);
                let regime = classify_regime(&ch)?;
                Ok(vec![num(ratio), num(rs), num(b.tin), num(b.decode), num(b.orthogonal), text(regime.tag.as_str())])
            })
            .collect();
        let mut t = Table::new("ic2_sweep", &["inr_over_snr", "rs", "tin", "decode", "orthogonal", "regime"])
            .note("orthogonal_power", policy.as_str());
        for r in rows {
            t.push(r?);
        }
        Ok(vec![t])
    }
}

// -------------------------------------------------------------- rate_region

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateRegion {
    pub tx: usize,
    pub rx: Vec<usize>,
    pub variances: Vec<f64>,
    pub snr_db: f64,
    /// CSIT error exponent; absent means perfect CSIT.
    pub csit_alpha: Option<f64>,
    pub samples: usize,
    pub weights: usize,
    pub layouts: Vec<LayoutEntry>,
}

impl Default for RateRegion {
    fn default() -> Self {
        Self {
            tx: 4,
            rx: vec![1, 1],
            variances: vec![1.0, 1.0],
            snr_db: 20.0,
            csit_alpha: None,
            samples: 100,
            weights: 20,
            layouts: names(&["rs", "sdma", "noma"]),
        }
    }
}

impl RateRegion {
    fn validate(&self) -> std::result::Result<(), RunError> {
        check_ensemble(self.tx, &self.rx, &self.variances, self.samples)?;
        check_snr(&[self.snr_db])?;
        if self.rx.len() != 2 {
            return Err(cfg_err("rate_region needs exactly two users"));
        }
        if self.weights == 0 {
            return Err(cfg_err("weights must be >= 1"));
        }
        resolve_layouts(&self.layouts, self.tx, &self.rx).map(|_| ())
    }

    fn execute(&self, seed: u64, opt: &OptimizerConfig) -> std::result::Result<Vec<Table>, RunError> {
        let power = power_of(self.snr_db);
        let spec = EnsembleSpec {
            tx: self.tx,
            rx: self.rx.clone(),
            variances: self.variances.clone(),
            csit_alpha: self.csit_alpha,
            power,
        };
        let ens = (0..self.samples as u64).map(|i| spec.sample(seed, i).map(|s| s.channels)).collect::<Result<Vec<_>>>()?;
        let mut out = Vec::new();
        for (label, layout) in resolve_layouts(&self.layouts, self.tx, &self.rx)? {
            let region = rate_region_boundary(&ens, &layout, power, opt, self.weights)?;
            let mut t = Table::new(
                format!("rate_region_{label}"),
                &["weight_ratio", "u1", "u2", "r1", "r2", "objective", "stderr_objective", "pareto"],
            )
            .note("layout", &label);
            for p in &region.points {
                let on_front = region.frontier.iter().any(|&(a, b)| a == p.r1 && b == p.r2);
                t.push(vec![
                    num(p.ratio),
                    num(p.weights[0]),
                    num(p.weights[1]),
                    num(p.r1),
                    num(p.r2),
                    num(p.objective),
                    num(p.stderr_objective),
                    text(if on_front { "1" } else { "0" }),
                ]);
            }
            out.push(t);
        }
        Ok(out)
    }
}

// ------------------------------------------------------ mmf_sweep / ee_sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmfSweep {
    pub tx: usize,
    pub rx: Vec<usize>,
    pub variances: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub csit_alpha: Option<f64>,
    pub samples: usize,
    pub layouts: Vec<LayoutEntry>,
}

impl Default for MmfSweep {
    fn default() -> Self {
        Self {
            tx: 5,
            rx: vec![1; 6],
            variances: vec![1.0; 6],
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            csit_alpha: None,
            samples: 100,
            layouts: names(&["rs", "sdma", "noma_g1", "noma_g3"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EeSweep {
    pub tx: usize,
    pub rx: Vec<usize>,
    pub variances: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub csit_alpha: Option<f64>,
    pub samples: usize,
    pub layouts: Vec<LayoutEntry>,
    pub eta: f64,
    pub p_dyn_dbm: f64,
    pub p_sta_w: f64,
    /// Per-user rate thresholds.
    pub qos: Option<Vec<f64>>,
}

impl Default for EeSweep {
    fn default() -> Self {
        Self {
            tx: 2,
            rx: vec![1, 1],
            variances: vec![1.0, 1.0],
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            csit_alpha: None,
            samples: 100,
            layouts: names(&["rs", "sdma", "noma"]),
            eta: EE_ETA,
            p_dyn_dbm: EE_P_DYN_DBM,
            p_sta_w: EE_P_STA_W,
            qos: None,
        }
    }
}

impl MmfSweep {
    fn validate(&self) -> std::result::Result<(), RunError> {
        check_ensemble(self.tx, &self.rx, &self.variances, self.samples)?;
        check_snr(&self.snr_db)?;
        resolve_layouts(&self.layouts, self.tx, &self.rx).map(|_| ())
    }

    fn execute(&self, seed: u64, opt: &OptimizerConfig) -> std::result::Result<Vec<Table>, RunError> {
        let sweep = SnrSweep {
            name: "mmf_sweep",
            tx: self.tx,
            rx: &self.rx,
            variances: &self.variances,
            snr_db: &self.snr_db,
            csit_alpha: self.csit_alpha,
            samples: self.samples,
            layouts: &self.layouts,
            metric: Metric::mmf(),
        };
        sweep.execute(seed, opt)
    }
}

impl EeSweep {
    fn metric(&self) -> Metric {
        let m = Metric::ee(self.eta, dbm_to_watt(self.p_dyn_dbm), self.p_sta_w);
        match &self.qos {
            Some(q) => m.with_qos(q.clone()),
            None => m,
        }
    }

    fn validate(&self) -> std::result::Result<(), RunError> {
        check_ensemble(self.tx, &self.rx, &self.variances, self.samples)?;
        check_snr(&self.snr_db)?;
        self.metric().validate(self.rx.len()).map_err(|e| cfg_err(e.to_string()))?;
        resolve_layouts(&self.layouts, self.tx, &self.rx).map(|_| ())
    }

    fn execute(&self, seed: u64, opt: &OptimizerConfig) -> std::result::Result<Vec<Table>, RunError> {
        let sweep = SnrSweep {
            name: "ee_sweep",
            tx: self.tx,
            rx: &self.rx,
            variances: &self.variances,
            snr_db: &self.snr_db,
            csit_alpha: self.csit_alpha,
            samples: self.samples,
            layouts: &self.layouts,
            metric: self.metric(),
        };
        sweep.execute(seed, opt)
    }
}

struct SnrSweep<'a> {
    name: &'static str,
    tx: usize,
    rx: &'a [usize],
    variances: &'a [f64],
    snr_db: &'a [f64],
    csit_alpha: Option<f64>,
    samples: usize,
    layouts: &'a [LayoutEntry],
    metric: Metric,
}

impl SnrSweep<'_> {
    /// Summary table (one objective column per layout) plus one detail table
    /// per layout. Channel draws are shared across SNR points and layouts.
    fn execute(&self, seed: u64, opt: &OptimizerConfig) -> std::result::Result<Vec<Table>, RunError> {
        let layouts = resolve_layouts(self.layouts, self.tx, self.rx)?;
        let jobs: Vec<(usize, usize)> =
            (0..layouts.len()).flat_map(|l| (0..self.snr_db.len()).map(move |s| (l, s))).collect();
        let reports: Vec<Result<_>> = jobs
            .par_iter()
            .map(|&(l, s)| {
                let spec = EnsembleSpec {
                    tx: self.tx,
                    rx: self.rx.to_vec(),
                    variances: self.variances.to_vec(),
                    csit_alpha: self.csit_alpha,
                    power: power_of(self.snr_db[s]),
                };
                ergodic_average(&spec, &layouts[l].1, &self.metric, opt, self.samples, seed)
            })
            .collect();
        let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
        let ns = self.snr_db.len();
        let mut cols = vec!["snr_db".to_string()];
        cols.extend(layouts.iter().map(|(l, _)| l.clone()));
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut summary = Table::new(self.name, &col_refs).note("metric", self.metric.name());
        for (s, &snr) in self.snr_db.iter().enumerate() {
            let mut row = vec![num(snr)];
            row.extend((0..layouts.len()).map(|l| num(reports[l * ns + s].mean_objective)));
            summary.push(row);
        }
        let mut out = vec![summary];
        for (l, (label, _)) in layouts.iter().enumerate() {
            let mut t = Table::new(
                format!("{}_{label}", self.name),
                &[
                    "snr_db",
                    "objective",
                    "stderr_objective",
                    "sum_rate",
                    "min_rate",
                    "common_fraction",
                    "qos_violations",
                ],
            )
            .note("metric", self.metric.name())
            .note("layout", label);
            for (s, &snr) in self.snr_db.iter().enumerate() {
                let r = &reports[l * ns + s];
                t.push(vec![
                    num(snr),
                    num(r.mean_objective),
                    num(r.stderr_objective),
                    num(r.mean_user_total.iter().sum()),
                    num(r.mean_user_total.iter().copied().fold(f64::INFINITY, f64::min)),
                    num(r.mean_common_fraction),
                    num(r.qos_violations as f64),
                ]);
            }
            out.push(t);
        }
        Ok(out)
    }
}

// --------------------------------------------------------------- region_map

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionMap {
    pub snr_db: f64,
    /// Amplitude ratio of user 2 to user 1 in dB (`20 log10`).
    pub gamma_db: Vec<f64>,
    /// `1 - |h1^H h2|^2 / (|h1|^2 |h2|^2)`.
    pub rho: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for RegionMap {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            gamma_db: vec![0.0, -3.0, -6.0, -10.0, -20.0],
            rho: vec![0.0, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0],
            weights: vec![1.0, 1.0],
        }
    }
}

impl RegionMap {
    fn validate(&self) -> std::result::Result<(), RunError> {
        check_snr(&[self.snr_db])?;
        if self.gamma_db.is_empty() || self.gamma_db.iter().any(|g| !g.is_finite()) {
            return Err(cfg_err("gamma_db must be a nonempty list of finite values"));
        }
        if self.rho.is_empty() || self.rho.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(cfg_err("rho values must lie in [0, 1]"));
        }
        Metric::wsr(self.weights.clone()).validate(2).map_err(|e| cfg_err(e.to_string()))
    }

    fn execute(&self, opt: &OptimizerConfig) -> std::result::Result<Vec<Table>, RunError> {
        let power = power_of(self.snr_db);
        let metric = Metric::wsr(self.weights.clone());
        let pts: Vec<(f64, f64)> = self.gamma_db.iter().flat_map(|&g| self.rho.iter().map(move |&r| (g, r))).collect();
        let rows: Vec<Result<Vec<Cell>>> = pts
            .par_iter()
            .map(|&(g, rho)| {
                let ch = geometry_2user(g, theta_for_rho(rho), 2)?;
                let run = |kind: SchemeKind, opts: LayoutOptions| -> Result<_> {
                    let l = LayoutSpec { kind, dims: vec![1, 1], options: opts }.build(&ch)?;
                    optimize(&ch, &l, &metric, power, opt)
                };
                let rs = run(SchemeKind::OneLayerRS, LayoutOptions::default())?;
                let sdma = run(SchemeKind::SDMA, LayoutOptions::default())?.objective;
                let noma = run(SchemeKind::NOMA, LayoutOptions::default())?.objective;
                let mut oma = f64::NEG_INFINITY;
                for u in 0..2 {
                    oma = oma.max(run(SchemeKind::OMA, LayoutOptions { oma_user: Some(u), ..Default::default() })?.objective);
                }
                let best = [("sdma", sdma), ("noma", noma), ("oma", oma)]
                    .into_iter()
                    .fold(("sdma", f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                Ok(vec![
                    num(g),
                    num(rho),
                    num(rs.objective),
                    num(sdma),
                    num(noma),
                    num(oma),
                    num(rs.common_fraction),
                    text(best.0),
                ])
            })
            .collect();
        let mut t = Table::new(
            "region_map",
            &["gamma_db", "rho", "rs", "sdma", "noma", "oma", "rs_common_fraction", "best_baseline"],
        );
        for r in rows {
            t.push(r?);
        }
        Ok(vec![t])
    }
}

// ------------------------------------------------------------ uplink_region

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UplinkRegion {
    /// Transmit SNR of each user in dB.
    pub snr_db: [f64; 2],
    /// Fixed channel gains `|h_k|^2`; drawn from unit Rayleigh when absent.
    pub gains: Option<[f64; 2]>,
    pub instances: usize,
    pub points: usize,
}

impl Default for UplinkRegion {
    fn default() -> Self {
        Self { snr_db: [10.0, 10.0], gains: None, instances: 1, points: 21 }
    }
}

impl UplinkRegion {
    fn validate(&self) -> std::result::Result<(), RunError> {
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(cfg_err("snr_db values must be finite"));
        }
        if let Some(g) = self.gains {
            if g.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(cfg_err("gains must be positive and finite"));
            }
        }
        if self.instances == 0 || self.points < 2 {
            return Err(cfg_err("instances >= 1 and points >= 2 required"));
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> std::result::Result<Vec<Table>, RunError> {
        let (p1, p2) = (power_of(self.snr_db[0]), power_of(self.snr_db[1]));
        let mut t = Table::new(
            "uplink_region",
            &[
                "instance", "g1", "g2", "s", "r1_target", "r2_target", "order", "a", "r1", "r2", "sum_rate",
                "sum_capacity",
            ],
        );
        for i in 0..self.instances {
            let (g1, g2) = match self.gains {
                Some(g) => (g[0], g[1]),
                None => {
                    let ch = gen_rayleigh(derive_seed(seed, i as u64), 1, &[1, 1], &[1.0, 1.0])?;
                    let g = |k: usize| ch.users[k].true_channel[(0, 0)].norm_sqr();
                    (g(0), g(1))
                }
            };
            let region = mac_region_2user(p1, p2, g1, g2)?;
            for j in 0..self.points {
                let s = j as f64 / (self.points - 1) as f64;
                let target = region.dominant_face_point(s);
                let (order, a, r) = match find_split_for_point(target, p1, p2, g1, g2)? {
                    SplitSearch::Found { a, order, rates } => (order, a, rates),
                    SplitSearch::Infeasible => {
                        return Err(RunError::Numerical(format!("dominant-face point {s} not reached")));
                    }
                };
                let order = match order {
                    SisoOrder::Split => "split",
                    SisoOrder::User1First => "user1_first",
                    SisoOrder::User2First => "user2_first",
                };
                t.push(vec![
                    num(i as f64),
                    num(g1),
                    num(g2),
                    num(s),
                    num(target.0),
                    num(target.1),
                    text(order),
                    num(a),
                    num(r.0),
                    num(r.1),
                    num(r.0 + r.1),
                    num(region.r_sum),
                ]);
            }
        }
        Ok(vec![t])
    }
}

// ----------------------------------------------------------- multicell_eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MulticellEval {
    pub cells: usize,
    pub tx: usize,
    pub rx: usize,
    pub direct_var: f64,
    pub cross_var: f64,
    /// Per-cell SNR in dB.
    pub snr_db: Vec<f64>,
    pub samples: usize,
    /// Grid size over the per-cell common-power fraction.
    pub common_points: usize,
}

impl Default for MulticellEval {
    fn default() -> Self {
        Self {
            cells: 2,
            tx: 2,
            rx: 1,
            direct_var: 1.0,
            cross_var: 0.5,
            snr_db: vec![0.0, 10.0, 20.0, 30.0],
            samples: 100,
            common_points: 21,
        }
    }
}

/// Cell `j`: private stream matched to its own user, common stream along the
/// dominant direction of all users' links from cell `j`; fraction `t` of the
/// budget goes to the common stream.
fn coordinated_design(ch: &MultiCellChannelSet, power: f64, t: f64) -> Result<CoordConfig> {
    let mut common = Vec::new();
    let mut private = Vec::new();
    for j in 0..ch.cells {
        let own = dominant_left_singular(ch.link(j, j), 1)?;
        let links: Vec<&CMat> = (0..ch.cells).map(|u| ch.link(u, j)).collect();
        let shared = dominant_left_singular(&hstack(&links), 1)?;
        common.push(shared * c((t * power).sqrt(), 0.0));
        private.push(own * c(((1.0 - t) * power).sqrt(), 0.0));
    }
    Ok(CoordConfig { common, private, budgets: vec![power; ch.cells], orders: None })
}

impl MulticellEval {
    fn validate(&self) -> std::result::Result<(), RunError> {
        check_snr(&self.snr_db)?;
        if self.cells < 2 || self.tx == 0 || self.rx == 0 {
            return Err(cfg_err("cells >= 2, tx >= 1 and rx >= 1 required"));
        }
        if !(self.direct_var > 0.0) || !(self.cross_var >= 0.0) {
            return Err(cfg_err("direct_var > 0 and cross_var >= 0 required"));
        }
        if self.samples == 0 || self.common_points < 2 {
            return Err(cfg_err("samples >= 1 and common_points >= 2 required"));
        }
        Ok(())
    }

    fn execute(&self, seed: u64, opt: &OptimizerConfig) -> std::result::Result<Vec<Table>, RunError> {
        let jobs: Vec<(usize, usize)> =
            (0..self.snr_db.len()).flat_map(|s| (0..self.samples).map(move |i| (s, i))).collect();
        let k = self.cells;
        let rows: Vec<Result<[f64; 4]>> = jobs
            .par_iter()
            .map(|&(s, i)| {
                let power = power_of(self.snr_db[s]);
                let ch = gen_multicell_rayleigh(
                    derive_seed(seed, i as u64),
                    k,
                    self.tx,
                    self.rx,
                    self.direct_var,
                    self.cross_var,
                )?;
                let mut best = (f64::NEG_INFINITY, 0.0);
                let mut tin = 0.0;
                for g in 0..self.common_points {
                    let t = g as f64 / (self.common_points - 1) as f64;
                    let sum: f64 = rate_coordinated(&ch, &coordinated_design(&ch, power, t)?)?.user_total.iter().sum();
                    if g == 0 {
                        tin = sum;
                    }
                    if sum > best.0 {
                        best = (sum, t);
                    }
                }
                let coop: ChannelSet = stack_cooperative(&ch)?;
                let l = build_layout(SchemeKind::OneLayerRS, k, &vec![self.rx; k], &LayoutOptions::default())?;
                let r = optimize(&coop, &l, &Metric::sum_rate(k), power * k as f64, opt)?;
                Ok([best.0, tin, r.objective, best.1])
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let mut t = Table::new(
            "multicell_eval",
            &[
                "snr_db",
                "rs_coordinated",
                "stderr_rs_coordinated",
                "tin_coordinated",
                "rs_cooperative",
                "mean_common_fraction",
            ],
        )
        .note("cooperative_power", "sum over cells");
        for (s, &snr) in self.snr_db.iter().enumerate() {
            let block = &rows[s * self.samples..(s + 1) * self.samples];
            let col = |c: usize| block.iter().map(|r| r[c]).collect::<Vec<f64>>();
            let (rs, se) = mean_stderr(&col(0));
            t.push(vec![
                num(snr),
                num(rs),
                num(se),
                num(mean_stderr(&col(1)).0),
                num(mean_stderr(&col(2)).0),
                num(mean_stderr(&col(3)).0),
            ]);
        }
        Ok(vec![t])
    }
}
