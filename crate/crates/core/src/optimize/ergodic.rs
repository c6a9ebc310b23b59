//! Monte Carlo averaging: design on estimates, evaluate on true channels.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{sample_csit, ChannelSet, CsitSample};
use crate::error::{Result, RsmaError};
use crate::schemes::{evaluate, LayoutSpec};

use super::{metric_value, optimize, Metric, OptimizerConfig};

/// Rayleigh ensemble with optional CSIT error `sigma_e^2 = sigma^2 P^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub tx: usize,
    pub rx: Vec<usize>,
    pub variances: Vec<f64>,
    pub csit_alpha: Option<f64>,
    pub power: f64,
}

impl EnsembleSpec {
    pub fn sample(&self, base_seed: u64, index: u64) -> Result<CsitSample> {
        sample_csit(base_seed, index, self.tx, &self.rx, &self.variances, self.csit_alpha.map(|a| (a, self.power)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicReport {
    pub samples: usize,
    pub mean_user_total: Vec<f64>,
    pub stderr_user_total: Vec<f64>,
    pub mean_private_rate: Vec<f64>,
    /// Positional average over stream indices.
    pub mean_stream_rate: Vec<f64>,
    pub mean_objective: f64,
    pub stderr_objective: f64,
    pub mean_common_fraction: f64,
    /// Samples whose true-channel rates miss a QoS threshold.
    pub qos_violations: usize,
}

pub(crate) fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per sample: design precoders on the estimates, evaluate on the true
/// channels; the metric is taken without the QoS cut-off and violations
/// are counted separately.
pub fn ergodic_average_over(
    samples: &[ChannelSet],
    layout: &LayoutSpec,
    metric: &Metric,
    power: f64,
    cfg: &OptimizerConfig,
) -> Result<ErgodicReport> {
    if samples.is_empty() {
        return Err(RsmaError::Parameter("need at least one sample".into()));
    }
    let per: Vec<Result<_>> = samples
        .par_iter()
        .map(|ch| {
            let design = ch.design_view();
            let l = layout.build(&design)?;
            let opt = optimize(&design, &l, metric, power, cfg)?;
            let rep = evaluate(ch, &l, &opt.precoders, metric)?;
            let value = metric_value(&rep, &opt.precoders, metric);
            let ok = metric.qos_satisfied(&rep, 1e-6);
            Ok((rep, value, ok, opt.common_fraction))
        })
        .collect();
    let mut rows = Vec::with_capacity(per.len());
    for r in per {
        rows.push(r?);
    }
    let k = rows[0].0.num_users();
    let n_streams = rows.iter().map(|r| r.0.streams.len()).max().unwrap_or(0);
    let col = |f: &dyn Fn(&(crate::schemes::RateReport, f64, bool, f64)) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let mut mean_user_total = Vec::with_capacity(k);
    let mut stderr_user_total = Vec::with_capacity(k);
    let mut mean_private_rate = Vec::with_capacity(k);
    for u in 0..k {
        let (m, s) = mean_stderr(&col(&|r| r.0.user_total[u]));
        mean_user_total.push(m);
        stderr_user_total.push(s);
        mean_private_rate.push(mean_stderr(&col(&|r| r.0.private_rate[u])).0);
    }
    let mean_stream_rate =
        (0..n_streams).map(|s| mean_stderr(&col(&|r| r.0.streams.get(s).map_or(0.0, |x| x.rate))).0).collect();
    let (mean_objective, stderr_objective) = mean_stderr(&col(&|r| r.1));
    Ok(ErgodicReport {
        samples: rows.len(),
        mean_user_total,
        stderr_user_total,
        mean_private_rate,
        mean_stream_rate,
        mean_objective,
        stderr_objective,
        mean_common_fraction: mean_stderr(&col(&|r| r.3)).0,
        qos_violations: rows.iter().filter(|r| !r.2).count(),
    })
}

pub fn ergodic_average(
    spec: &EnsembleSpec,
    layout: &LayoutSpec,
    metric: &Metric,
    cfg: &OptimizerConfig,
    samples: usize,
    base_seed: u64,
) -> Result<ErgodicReport> {
    if samples == 0 {
        return Err(RsmaError::Parameter("samples must be >= 1".into()));
    }
    let chans = (0..samples as u64)
        .map(|i| spec.sample(base_seed, i).map(|s| s.channels))
        .collect::<Result<Vec<_>>>()?;
    ergodic_average_over(&chans, layout, metric, spec.power, cfg)
}
