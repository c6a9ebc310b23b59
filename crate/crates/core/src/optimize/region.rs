//! Two-user rate-region frontier by weighted-sum-rate sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Result, RsmaError};
use crate::schemes::{evaluate, LayoutSpec};

use super::ergodic::mean_stderr;
use super::{metric_value, optimize, Metric, OptimizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPoint {
    /// `u1 / u2`.
    pub ratio: f64,
    pub weights: [f64; 2],
    pub r1: f64,
    pub r2: f64,
    pub objective: f64,
    pub stderr_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionResult {
    /// One point per weight ratio, in sweep order.
    pub points: Vec<RegionPoint>,
    /// Pareto-optimal `(r1, r2)` pairs sorted by `r1`.
    pub frontier: Vec<(f64, f64)>,
}

/// `n` log-spaced ratios in `[1e-3, 1e3]`.
pub fn log_ratios(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64)).collect()
}

pub fn pareto_filter(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(a, b)| !points.iter().any(|&(x, y)| x >= a && y >= b && (x > a || y > b)))
        .collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    out.dedup();
    out
}

/// Sweep WSR weights over the ensemble (a single channel is an ensemble of
/// one); rates and objectives are sample means evaluated on true channels.
pub fn rate_region_boundary(
    ensemble: &[ChannelSet],
    layout: &LayoutSpec,
    power: f64,
    cfg: &OptimizerConfig,
    n_points: usize,
) -> Result<RegionResult> {
    if ensemble.is_empty() || n_points == 0 {
        return Err(RsmaError::Parameter("need channels and at least one weight".into()));
    }
    if ensemble.iter().any(|c| c.num_users() != 2) {
        return Err(RsmaError::Parameter("rate regions are traced for two users".into()));
    }
    let ratios = log_ratios(n_points);
    let jobs: Vec<(usize, usize)> = (0..ratios.len()).flat_map(|w| (0..ensemble.len()).map(move |s| (w, s))).collect();
    let res: Vec<Result<(f64, f64, f64)>> = jobs
        .par_iter()
        .map(|&(w, s)| {
            let weights = [ratios[w] / (1.0 + ratios[w]), 1.0 / (1.0 + ratios[w])];
            let metric = Metric::wsr(weights.to_vec());
            let ch = &ensemble[s];
            let design = ch.design_view();
            let l = layout.build(&design)?;
            let opt = optimize(&design, &l, &metric, power, cfg)?;
            let rep = evaluate(ch, &l, &opt.precoders, &metric)?;
            Ok((rep.user_total[0], rep.user_total[1], metric_value(&rep, &opt.precoders, &metric)))
        })
        .collect();
    let mut vals = Vec::with_capacity(res.len());
    for r in res {
        vals.push(r?);
    }
    let n = ensemble.len();
    let points: Vec<RegionPoint> = ratios
        .iter()
        .enumerate()
        .map(|(w, &ratio)| {
            let chunk = &vals[w * n..(w + 1) * n];
            let r1 = mean_stderr(&chunk.iter().map(|v| v.0).collect::<Vec<_>>()).0;
            let r2 = mean_stderr(&chunk.iter().map(|v| v.1).collect::<Vec<_>>()).0;
            let (objective, stderr_objective) = mean_stderr(&chunk.iter().map(|v| v.2).collect::<Vec<_>>());
            RegionPoint { ratio, weights: [ratio / (1.0 + ratio), 1.0 / (1.0 + ratio)], r1, r2, objective, stderr_objective }
        })
        .collect();
    let frontier = pareto_filter(&points.iter().map(|p| (p.r1, p.r2)).collect::<Vec<_>>());
    Ok(RegionResult { points, frontier })
}
