use serde::{Deserialize, Serialize};

use crate::error::{Result, RsmaError};
use crate::schemes::{PrecoderSet, RateReport};

/// Power-amplifier efficiency used for the energy-efficiency constants.
pub const EE_ETA: f64 = 0.35;
/// Dynamic power per antenna, 27 dBm.
pub const EE_P_DYN_DBM: f64 = 27.0;
/// Static power, 1 mW.
pub const EE_P_STA_W: f64 = 1e-3;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricKind {
    Wsr { weights: Vec<f64> },
    Mmf,
    Ee { eta: f64, p_dyn: f64, p_sta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    pub qos: Option<Vec<f64>>,
}

impl Metric {
    pub fn wsr(weights: Vec<f64>) -> Self {
        Self { kind: MetricKind::Wsr { weights }, qos: None }
    }

    pub fn sum_rate(k: usize) -> Self {
        Self::wsr(vec![1.0; k])
    }

    pub fn mmf() -> Self {
        Self { kind: MetricKind::Mmf, qos: None }
    }

    pub fn ee(eta: f64, p_dyn: f64, p_sta: f64) -> Self {
        Self { kind: MetricKind::Ee { eta, p_dyn, p_sta }, qos: None }
    }

    /// EE with the default constants (eta 0.35, 27 dBm, 1 mW).
    pub fn ee_default() -> Self {
        Self::ee(EE_ETA, dbm_to_watt(EE_P_DYN_DBM), EE_P_STA_W)
    }

    pub fn with_qos(mut self, thresholds: Vec<f64>) -> Self {
        self.qos = Some(thresholds);
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MetricKind::Wsr { .. } => "wsr",
            MetricKind::Mmf => "mmf",
            MetricKind::Ee { .. } => "ee",
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match &self.kind {
            MetricKind::Wsr { weights } => {
                if weights.len() != k {
                    return Err(RsmaError::Parameter(format!("{} weights for {k} users", weights.len())));
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().all(|w| *w == 0.0) {
                    return Err(RsmaError::Parameter("weights must be >= 0 and not all zero".into()));
                }
            }
            MetricKind::Mmf => {}
            MetricKind::Ee { eta, p_dyn, p_sta } => {
                if !(*eta > 0.0 && *eta <= 1.0) || !(*p_dyn > 0.0) || !(*p_sta > 0.0) {
                    return Err(RsmaError::Parameter("EE needs eta in (0, 1] and positive circuit powers".into()));
                }
            }
        }
        if let Some(q) = &self.qos {
            if q.len() != k || q.iter().any(|t| !(*t >= 0.0)) {
                return Err(RsmaError::Parameter("QoS thresholds must be >= 0, one per user".into()));
            }
        }
        Ok(())
    }

    /// Weight of user `k` in the linear allocation rule.
    pub(crate) fn alloc_weight(&self, k: usize) -> Result<f64> {
        match &self.kind {
            MetricKind::Wsr { weights } => weights
                .get(k)
                .copied()
                .ok_or_else(|| RsmaError::Parameter(format!("no weight for user {k}"))),
            _ => Ok(1.0),
        }
    }

    /// Circuit power `M P_dyn + P_sta` for EE, 0 otherwise.
    pub fn circuit_power(&self, tx: usize) -> f64 {
        match self.kind {
            MetricKind::Ee { p_dyn, p_sta, .. } => tx as f64 * p_dyn + p_sta,
            _ => 0.0,
        }
    }

    pub fn qos_satisfied(&self, report: &RateReport, tol: f64) -> bool {
        match &self.qos {
            None => true,
            Some(th) => report.user_total.iter().zip(th).all(|(r, t)| *r >= t - tol),
        }
    }
}

/// Value of the metric for a report; `-inf` when a QoS threshold is missed.
pub fn evaluate_metric(report: &RateReport, pre: &PrecoderSet, metric: &Metric) -> f64 {
    if !metric.qos_satisfied(report, 1e-9) {
        return f64::NEG_INFINITY;
    }
    metric_value(report, pre, metric)
}

/// Metric value ignoring QoS.
pub fn metric_value(report: &RateReport, pre: &PrecoderSet, metric: &Metric) -> f64 {
    match &metric.kind {
        MetricKind::Wsr { weights } => weights.iter().zip(&report.user_total).map(|(w, r)| w * r).sum(),
        MetricKind::Mmf => report.min_rate(),
        MetricKind::Ee { eta, .. } => {
            report.sum_rate() / (pre.total_power() / eta + metric.circuit_power(pre.tx_antennas()))
        }
    }
}
