//! Projected-gradient refinement on a smoothed objective.
//!
//! Min terms (stream rate over decoders, MMF level over user sets) are
//! replaced by a soft-min with temperature `tau`; QoS enters as a quadratic
//! penalty on the Hall-type feasibility conditions of the allocation.

use crate::channel::ChannelSet;
use crate::error::{Result, RsmaError};
use crate::linalg::{add_gram, c, fro2, identity, inv_hpd, logdet_rate, CMat, LN2};
use crate::schemes::{evaluate, PrecoderSet, StreamLayout};

use super::grid::{better, finish, score};
use super::{Metric, MetricKind, OptResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub iters: usize,
    pub tol: f64,
    pub temp0: f64,
    pub temp_min: f64,
    pub anneal_every: usize,
    pub penalty0: f64,
    pub penalty_max: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { iters: 300, tol: 1e-8, temp0: 1.0, temp_min: 1e-3, anneal_every: 50, penalty0: 10.0, penalty_max: 1e6 }
    }
}

/// `-tau ln sum exp(-x / tau)` and its weights `d/dx_i`.
fn soft_min(x: &[f64], tau: f64) -> (f64, Vec<f64>) {
    if x.len() == 1 {
        return (x[0], vec![1.0]);
    }
    let m = x.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = x.iter().map(|v| (-(v - m) / tau).exp()).collect();
    let s: f64 = e.iter().sum();
    (m - tau * s.ln(), e.iter().map(|v| v / s).collect())
}

pub(crate) struct Surrogate<'a> {
    ch: &'a ChannelSet,
    layout: &'a StreamLayout,
    metric: &'a Metric,
    plan: Vec<Vec<(usize, Vec<usize>)>>,
    /// User sets as bit masks with, per set, the streams adjacent to it.
    sets: Vec<(Vec<usize>, Vec<usize>)>,
}

impl<'a> Surrogate<'a> {
    pub(crate) fn new(ch: &'a ChannelSet, layout: &'a StreamLayout, metric: &'a Metric, orders: Option<&[Vec<usize>]>) -> Result<Self> {
        let plan = layout.decode_plan(orders)?;
        let k = layout.num_users;
        let needs_sets = matches!(metric.kind, MetricKind::Mmf) || metric.qos.is_some();
        let mut sets = Vec::new();
        if needs_sets {
            if k > 16 {
                return Err(RsmaError::UnsupportedLayout("refinement with MMF or QoS supports at most 16 users".into()));
            }
            for mask in 1u32..(1 << k) {
                let users: Vec<usize> = (0..k).filter(|u| mask & (1 << u) != 0).collect();
                let streams: Vec<usize> = (0..layout.streams.len())
                    .filter(|&s| layout.streams[s].owners.iter().any(|u| mask & (1 << u) != 0))
                    .collect();
                sets.push((users, streams));
            }
        }
        Ok(Self { ch, layout, metric, plan, sets })
    }

    /// Smoothed objective and, optionally, its gradient `d f / d conj(P_t)`.
    pub(crate) fn eval(&self, pre: &[CMat], tau: f64, mu: f64, want_grad: bool) -> Result<(f64, Option<Vec<CMat>>)> {
        let n = self.layout.streams.len();
        let k_users = self.layout.num_users;
        // Per-step rates and, for the gradient, the two inverse covariances.
        let mut rates: Vec<Vec<f64>> = Vec::with_capacity(k_users);
        let mut effs: Vec<Vec<CMat>> = Vec::with_capacity(k_users);
        for (k, steps) in self.plan.iter().enumerate() {
            let hk = self.ch.users[k].true_channel.adjoint();
            let eff: Vec<CMat> = pre.iter().map(|p| &hk * p).collect();
            let mut r = Vec::with_capacity(steps.len());
            for (s, interf) in steps {
                let mut cov = identity(hk.nrows());
                for &t in interf {
                    add_gram(&mut cov, &eff[t]);
                }
                r.push(logdet_rate(&eff[*s], &cov)?);
            }
            rates.push(r);
            effs.push(eff);
        }
        // Stream rates through the soft-min over decoders.
        let mut per_stream: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
        for (k, steps) in self.plan.iter().enumerate() {
            for (i, (s, _)) in steps.iter().enumerate() {
                per_stream[*s].push((k, i, rates[k][i]));
            }
        }
        let mut stream_rate = vec![0.0; n];
        let mut stream_w: Vec<Vec<f64>> = vec![Vec::new(); n];
        for s in 0..n {
            if per_stream[s].is_empty() {
                continue;
            }
            let x: Vec<f64> = per_stream[s].iter().map(|e| e.2).collect();
            let (v, w) = soft_min(&x, tau);
            stream_rate[s] = v;
            stream_w[s] = w;
        }
        // Objective in terms of stream rates.
        let mut d_stream = vec![0.0; n];
        let power: f64 = pre.iter().map(fro2).sum();
        let mut f;
        let mut d_power = 0.0;
        match &self.metric.kind {
            MetricKind::Wsr { .. } | MetricKind::Ee { .. } => {
                let mut num = 0.0;
                for s in 0..n {
                    let owners = &self.layout.streams[s].owners;
                    let mut w = 0.0f64;
                    for &u in owners {
                        w = w.max(self.metric.alloc_weight(u)?);
                    }
                    num += w * stream_rate[s];
                    d_stream[s] = w;
                }
                f = num;
                if let MetricKind::Ee { eta, .. } = self.metric.kind {
                    let den = power / eta + self.metric.circuit_power(self.ch.tx);
                    f = num / den;
                    for d in &mut d_stream {
                        *d /= den;
                    }
                    d_power = -num / (den * den) / eta;
                }
            }
            MetricKind::Mmf => {
                let vals: Vec<f64> = self
                    .sets
                    .iter()
                    .map(|(users, streams)| streams.iter().map(|&s| stream_rate[s]).sum::<f64>() / users.len() as f64)
                    .collect();
                let (v, w) = soft_min(&vals, tau);
                f = v;
                for ((users, streams), wi) in self.sets.iter().zip(&w) {
                    for &s in streams {
                        d_stream[s] += wi / users.len() as f64;
                    }
                }
            }
        }
        if let Some(th) = &self.metric.qos {
            for (users, streams) in &self.sets {
                let v: f64 = users.iter().map(|&u| th[u]).sum::<f64>() - streams.iter().map(|&s| stream_rate[s]).sum::<f64>();
                if v > 0.0 {
                    f -= mu * v * v;
                    for &s in streams {
                        d_stream[s] += 2.0 * mu * v;
                    }
                }
            }
        }
        if !f.is_finite() {
            return Err(RsmaError::Numerical("non-finite surrogate objective".into()));
        }
        if !want_grad {
            return Ok((f, None));
        }
        let mut grad: Vec<CMat> = pre.iter().map(|p| p * c(d_power, 0.0)).collect();
        for s in 0..n {
            for (j, &(k, i, _)) in per_stream[s].iter().enumerate() {
                let coef = d_stream[s] * stream_w[s][j];
                if coef == 0.0 {
                    continue;
                }
                let h = &self.ch.users[k].true_channel;
                let (_, interf) = &self.plan[k][i];
                let eff = &effs[k];
                let mut cov = identity(h.ncols());
                for &t in interf {
                    add_gram(&mut cov, &eff[t]);
                }
                let r_inv = inv_hpd(&cov)?;
                add_gram(&mut cov, &eff[s]);
                let a_inv = inv_hpd(&cov)?;
                let scale = c(coef / LN2, 0.0);
                grad[s] += h * (&a_inv * &eff[s]) * scale;
                for &t in interf {
                    let diff = &a_inv - &r_inv;
                    grad[t] += h * (diff * &eff[t]) * scale;
                }
            }
        }
        for g in &grad {
            if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(RsmaError::Numerical("non-finite gradient".into()));
            }
        }
        Ok((f, Some(grad)))
    }
}

fn project(x: &mut [CMat], budget: f64) {
    let p: f64 = x.iter().map(fro2).sum();
    if p > budget {
        let s = c((budget / p).sqrt() * (1.0 - 1e-15), 0.0);
        for m in x.iter_mut() {
            *m *= s;
        }
    }
}

fn axpy(x: &[CMat], g: &[CMat], alpha: f64) -> Vec<CMat> {
    x.iter().zip(g).map(|(a, b)| a + b * c(alpha, 0.0)).collect()
}

/// Gradient ascent from `init`; the result is never worse than `init` on the
/// true metric (QoS-feasible first).
pub fn optimize_precoders_refine(
    ch: &ChannelSet,
    layout: &StreamLayout,
    metric: &Metric,
    init: &PrecoderSet,
    cfg: &RefineConfig,
) -> Result<OptResult> {
    metric.validate(ch.num_users())?;
    init.check(ch, layout)?;
    if init.total_power() > init.power_budget + 1e-9 {
        return Err(RsmaError::Parameter("initial precoders exceed the budget".into()));
    }
    let budget = init.power_budget;
    let orders = init.decoding_orders.clone();
    let sur = Surrogate::new(ch, layout, metric, orders.as_deref())?;
    let wrap = |x: Vec<CMat>| PrecoderSet { precoders: x, power_budget: budget, decoding_orders: orders.clone() };
    let true_score = |x: &[CMat]| -> Result<(bool, f64)> {
        let pre = wrap(x.to_vec());
        let rep = evaluate(ch, layout, &pre, metric)?;
        Ok(score(&rep, &pre, metric))
    };

    let mut x = init.precoders.clone();
    let mut best_x = x.clone();
    let mut best = true_score(&x)?;
    let mut trace = vec![best.1];
    let mut tau = cfg.temp0.max(cfg.temp_min);
    let mut mu = cfg.penalty0;
    let (mut f, mut g) = sur.eval(&x, tau, mu, true)?;
    let mut alpha = {
        let gn: f64 = g.as_ref().unwrap().iter().map(fro2).sum::<f64>().sqrt();
        0.1 * budget.sqrt() / (gn + 1e-12)
    };
    let mut since_anneal = 0;
    for _ in 0..cfg.iters {
        let grad = g.take().unwrap();
        let mut accepted = None;
        for _ in 0..40 {
            let mut cand = axpy(&x, &grad, alpha);
            project(&mut cand, budget);
            let (fc, _) = sur.eval(&cand, tau, mu, false)?;
            if fc > f {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let mut converged = true;
        if let Some((cand, fc)) = accepted {
            converged = (fc - f).abs() < cfg.tol;
            x = cand;
            alpha *= 1.5;
            let s = true_score(&x)?;
            if better(s, best) {
                best = s;
                best_x = x.clone();
            }
        }
        trace.push(best.1);
        since_anneal += 1;
        if converged || since_anneal >= cfg.anneal_every {
            if converged && tau <= cfg.temp_min {
                break;
            }
            since_anneal = 0;
            tau = (tau * 0.5).max(cfg.temp_min);
            if metric.qos.is_some() && !best.0 {
                mu = (mu * 2.0).min(cfg.penalty_max);
            }
        }
        let (fn_, gn) = sur.eval(&x, tau, mu, true)?;
        f = fn_;
        g = gn;
        let gnorm: f64 = g.as_ref().unwrap().iter().map(fro2).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        alpha = alpha.max(1e-12 * budget.sqrt() / gnorm);
    }
    finish(ch, layout, wrap(best_x), metric, trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_rel_err: f64,
    pub checked: usize,
}

/// Compare the analytic gradient of the smoothed objective with central
/// finite differences on every real coordinate whose derivative magnitude
/// exceeds `1e-8`.
pub fn gradient_check(
    ch: &ChannelSet,
    layout: &StreamLayout,
    metric: &Metric,
    pre: &PrecoderSet,
    tau: f64,
    penalty: f64,
    step: f64,
) -> Result<GradientCheck> {
    let sur = Surrogate::new(ch, layout, metric, pre.decoding_orders.as_deref())?;
    let (_, g) = sur.eval(&pre.precoders, tau, penalty, true)?;
    let g = g.unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for s in 0..pre.precoders.len() {
        for idx in 0..pre.precoders[s].len() {
            for imag in [false, true] {
                let analytic = if imag { 2.0 * g[s][idx].im } else { 2.0 * g[s][idx].re };
                let d = if imag { c(0.0, step) } else { c(step, 0.0) };
                let mut plus = pre.precoders.clone();
                plus[s][idx] += d;
                let mut minus = pre.precoders.clone();
                minus[s][idx] -= d;
                let fp = sur.eval(&plus, tau, penalty, false)?.0;
                let fm = sur.eval(&minus, tau, penalty, false)?.0;
                let numeric = (fp - fm) / (2.0 * step);
                let mag = analytic.abs().max(numeric.abs());
                if mag > 1e-8 {
                    worst = worst.max((analytic - numeric).abs() / mag);
                    checked += 1;
                }
            }
        }
    }
    Ok(GradientCheck { max_rel_err: worst, checked })
}
