//! Objectives and precoder optimization.
//!
//! Two tiers: a grid tier (closed-form directions, exhaustive power split)
//! that serves as a deterministic reference, and a refinement tier
//! (projected gradient ascent on a smoothed objective) started from it.

mod ergodic;
mod grid;
mod metric;
mod refine;
mod region;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{cn_matrix, derive_seed, rng_from, ChannelSet};
use crate::error::{Result, RsmaError};
use crate::linalg::{c, fro2};
use crate::schemes::{build_layout, LayoutOptions, PrecoderSet, RateReport, SchemeKind, StreamLayout};

pub use ergodic::{ergodic_average, ergodic_average_over, EnsembleSpec, ErgodicReport};
pub(crate) use ergodic::mean_stderr;
pub use grid::{embed_in_rs, optimize_powers_fixed_directions, stream_directions};
pub use metric::{dbm_to_watt, evaluate_metric, metric_value, Metric, MetricKind, EE_ETA, EE_P_DYN_DBM, EE_P_STA_W};
pub use refine::{gradient_check, optimize_precoders_refine, GradientCheck, RefineConfig};
pub use region::{log_ratios, pareto_filter, rate_region_boundary, RegionPoint, RegionResult};

#[derive(Debug, Clone)]
pub struct OptResult {
    pub precoders: PrecoderSet,
    pub report: RateReport,
    /// True metric value (`-inf` when QoS is violated).
    pub objective: f64,
    pub feasible: bool,
    /// Best true objective so far, per iteration.
    pub trace: Vec<f64>,
    /// Share of the budget on multi-user streams.
    pub common_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Grid,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub tier: Tier,
    pub grid_points: usize,
    pub iters: usize,
    pub tol: f64,
    pub soft_min_temp0: f64,
    pub soft_min_temp_min: f64,
    pub anneal_every: usize,
    pub penalty0: f64,
    pub penalty_max: f64,
    /// 1-layer RS also starts from the refined SDMA and (two users) NOMA
    /// optima.
    pub multistart: bool,
    /// Extra random starting points drawn from `seed`.
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let r = RefineConfig::default();
        Self {
            tier: Tier::Refine,
            grid_points: 101,
            iters: r.iters,
            tol: r.tol,
            soft_min_temp0: r.temp0,
            soft_min_temp_min: r.temp_min,
            anneal_every: r.anneal_every,
            penalty0: r.penalty0,
            penalty_max: r.penalty_max,
            multistart: true,
            random_starts: 0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn grid_only(grid_points: usize) -> Self {
        Self { tier: Tier::Grid, grid_points, ..Self::default() }
    }

    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            iters: self.iters,
            tol: self.tol,
            temp0: self.soft_min_temp0,
            temp_min: self.soft_min_temp_min,
            anneal_every: self.anneal_every.max(1),
            penalty0: self.penalty0,
            penalty_max: self.penalty_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(RsmaError::Config("grid_points must be >= 2".into()));
        }
        if !(self.tol >= 0.0) || !(self.soft_min_temp0 > 0.0) || !(self.soft_min_temp_min > 0.0) || !(self.penalty0 >= 0.0) {
            return Err(RsmaError::Config("tol, temperatures and penalty must be positive".into()));
        }
        Ok(())
    }
}

/// Grid tier, then (for [`Tier::Refine`]) refinement from the grid optimum
/// and any extra starting points; the best result on the true metric wins.
pub fn optimize(ch: &ChannelSet, layout: &StreamLayout, metric: &Metric, power: f64, cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.validate()?;
    let grid = optimize_powers_fixed_directions(ch, layout, metric, power, cfg.grid_points)?;
    if cfg.tier == Tier::Grid {
        return Ok(grid);
    }
    let mut starts = vec![grid.precoders.clone()];
    let k = layout.num_users;
    if cfg.multistart && layout.kind == SchemeKind::OneLayerRS && k >= 2 {
        let sub_cfg = OptimizerConfig { multistart: false, random_starts: 0, ..cfg.clone() };
        let dims: Vec<usize> = (0..k).map(|u| layout.streams[layout.private_of(u).unwrap()].dim).collect();
        let mut subs = vec![build_layout(SchemeKind::SDMA, k, &dims, &LayoutOptions::default())?];
        if k == 2 {
            for order in [vec![0, 1], vec![1, 0]] {
                let opts = LayoutOptions { noma_order: Some(order), common_dim: Some(layout.streams[0].dim), ..Default::default() };
                subs.push(build_layout(SchemeKind::NOMA, 2, &dims, &opts)?);
            }
        }
        for sub in subs {
            let r = optimize(ch, &sub, metric, power, &sub_cfg)?;
            if let Some(e) = embed_in_rs(&sub, &r.precoders, layout) {
                starts.push(e);
            }
        }
    }
    let mut rng = rng_from(derive_seed(cfg.seed, 0x5eed));
    for _ in 0..cfg.random_starts {
        let sub_seed: u64 = rng.random();
        let mut r2 = rng_from(sub_seed);
        let mut ps: Vec<_> = layout.streams.iter().map(|s| cn_matrix(&mut r2, ch.tx, s.dim, 1.0)).collect();
        let tot: f64 = ps.iter().map(fro2).sum();
        for p in &mut ps {
            *p *= c((power / tot).sqrt() * (1.0 - 1e-12), 0.0);
        }
        starts.push(PrecoderSet { precoders: ps, power_budget: power, decoding_orders: None });
    }
    let rcfg = cfg.refine_config();
    let mut best: Option<OptResult> = None;
    for s in &starts {
        let r = optimize_precoders_refine(ch, layout, metric, s, &rcfg)?;
        let key = |o: &OptResult| (o.feasible, if o.feasible { o.objective } else { f64::NEG_INFINITY });
        if best.as_ref().is_none_or(|b| grid::better(key(&r), key(b))) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests;
