//! Closed-form directions with an exhaustive power grid.

use crate::channel::ChannelSet;
use crate::error::{Result, RsmaError};
use crate::linalg::{c, dominant_left_singular, fro2, hstack, identity, inv_hpd, CMat};
use crate::schemes::{build_layout, evaluate, LayoutOptions, PrecoderSet, RateReport, SchemeKind, StreamLayout};

use super::{evaluate_metric, Metric, OptResult};

/// Unit-Frobenius direction per stream, designed from the channel estimates:
/// private streams use the top left singular vectors of the user's block of
/// the regularized inverse `(H H^H + K/P I)^{-1} H`; multi-user streams use
/// the dominant left singular vectors of the stacked estimates of their
/// decoders.
pub fn stream_directions(ch: &ChannelSet, layout: &StreamLayout, power: f64) -> Result<Vec<CMat>> {
    let k = ch.num_users();
    let m = ch.tx;
    let blocks: Vec<&CMat> = ch.users.iter().map(|u| &u.estimate).collect();
    let h = hstack(&blocks);
    let mut gram = identity(m) * c(k as f64 / power, 0.0);
    gram.gemm(c(1.0, 0.0), &h, &h.adjoint(), c(1.0, 0.0));
    let w = inv_hpd(&gram)? * &h;
    let mut offsets = Vec::with_capacity(k);
    let mut at = 0;
    for u in &ch.users {
        offsets.push(at);
        at += u.rx;
    }
    layout
        .streams
        .iter()
        .map(|s| {
            let mut d = if s.is_private() {
                let u = s.subset[0];
                let block = w.columns(offsets[u], ch.users[u].rx).into_owned();
                dominant_left_singular(&block, s.dim)?
            } else {
                let sub: Vec<&CMat> = s.subset.iter().map(|&u| &ch.users[u].estimate).collect();
                dominant_left_singular(&hstack(&sub), s.dim)?
            };
            let n = fro2(&d);
            if n > 0.0 {
                d *= c(1.0 / n.sqrt(), 0.0);
            }
            Ok(d)
        })
        .collect()
}

fn compose(dirs: &[CMat], powers: &[f64], budget: f64) -> PrecoderSet {
    let precoders = dirs.iter().zip(powers).map(|(d, &p)| d * c(p.max(0.0).sqrt(), 0.0)).collect();
    PrecoderSet { precoders, power_budget: budget, decoding_orders: None }
}

/// Compositions of `steps` into `n` nonnegative parts, as fractions.
fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(n - 1, left - i, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n, steps, &mut Vec::new(), &mut raw);
    raw.into_iter().map(|v| v.into_iter().map(|x| x as f64 / steps as f64).collect()).collect()
}

/// Power vectors (one entry per stream) searched by the grid tier.
fn power_candidates(layout: &StreamLayout, power: f64, grid: usize) -> Vec<Vec<f64>> {
    let n = layout.streams.len();
    let privates: Vec<usize> = (0..n).filter(|&s| layout.streams[s].is_private()).collect();
    let commons: Vec<usize> = (0..n).filter(|&s| !layout.streams[s].is_private()).collect();
    let grid = grid.max(2);
    match layout.kind {
        SchemeKind::NOMA if n > 1 => {
            let steps = match n {
                2 => grid - 1,
                3 => 20,
                4 => 12,
                _ => 8,
            };
            simplex_grid(n, steps).into_iter().map(|f| f.into_iter().map(|x| x * power).collect()).collect()
        }
        _ if commons.is_empty() || privates.is_empty() => {
            let share = power / n as f64;
            vec![vec![share; n]]
        }
        _ => (0..grid)
            .map(|i| {
                let t = if i == grid - 1 { 1.0 } else { i as f64 / (grid - 1) as f64 };
                let mut p = vec![0.0; n];
                for &s in &commons {
                    p[s] = t * power / commons.len() as f64;
                }
                for &s in &privates {
                    p[s] = (1.0 - t) * power / privates.len() as f64;
                }
                p
            })
            .collect(),
    }
}

/// Map precoders of a special-case layout onto a 1-layer RS layout: private
/// streams stay private, an all-user stream becomes the common stream.
pub fn embed_in_rs(from: &StreamLayout, pre: &PrecoderSet, rs: &StreamLayout) -> Option<PrecoderSet> {
    if rs.kind != SchemeKind::OneLayerRS || from.num_users != rs.num_users {
        return None;
    }
    let m = pre.tx_antennas();
    let mut out: Vec<CMat> = rs.streams.iter().map(|s| CMat::zeros(m, s.dim)).collect();
    let mut common_used = false;
    for (s, p) in from.streams.iter().zip(&pre.precoders) {
        let target = if s.is_private() {
            rs.private_of(s.subset[0])?
        } else if s.subset.len() == rs.num_users && !common_used {
            common_used = true;
            0
        } else {
            return None;
        };
        if out[target].ncols() != p.ncols() {
            return None;
        }
        out[target] = p.clone();
    }
    Some(PrecoderSet { precoders: out, power_budget: pre.power_budget, decoding_orders: None })
}

/// Score for picking among candidates: QoS-feasible objective first, then
/// the smallest QoS shortfall.
pub(crate) fn score(report: &RateReport, pre: &PrecoderSet, metric: &Metric) -> (bool, f64) {
    let v = evaluate_metric(report, pre, metric);
    if v > f64::NEG_INFINITY {
        return (true, v);
    }
    let th = metric.qos.as_ref().expect("only QoS makes a metric infeasible");
    let margin = report.user_total.iter().zip(th).map(|(r, t)| r - t).fold(f64::INFINITY, f64::min);
    (false, margin)
}

pub(crate) fn better(a: (bool, f64), b: (bool, f64)) -> bool {
    match (a.0, b.0) {
        (true, false) => true,
        (false, true) => false,
        _ => a.1 > b.1,
    }
}

pub(crate) fn common_fraction(layout: &StreamLayout, pre: &PrecoderSet) -> f64 {
    let p: f64 = (0..layout.streams.len())
        .filter(|&s| !layout.streams[s].is_private())
        .map(|s| pre.stream_power(s))
        .sum();
    p / pre.power_budget
}

pub(crate) fn finish(ch: &ChannelSet, layout: &StreamLayout, pre: PrecoderSet, metric: &Metric, trace: Vec<f64>) -> Result<OptResult> {
    let report = evaluate(ch, layout, &pre, metric)?;
    let (feasible, _) = score(&report, &pre, metric);
    let objective = evaluate_metric(&report, &pre, metric);
    Ok(OptResult { common_fraction: common_fraction(layout, &pre), precoders: pre, report, objective, feasible, trace })
}

/// Grid tier: closed-form directions, exhaustive search over the power
/// split. For 1-layer RS the SDMA point (t = 0), the multicast point (t = 1)
/// and, for two users, the best NOMA precoders of both decoding orders are
/// candidates too, so RS never falls below those special cases here.
pub fn optimize_powers_fixed_directions(
    ch: &ChannelSet,
    layout: &StreamLayout,
    metric: &Metric,
    power: f64,
    grid: usize,
) -> Result<OptResult> {
    ch.validate()?;
    metric.validate(ch.num_users())?;
    if !(power > 0.0) {
        return Err(RsmaError::Parameter("power must be > 0".into()));
    }
    if layout.kind == SchemeKind::NOMA && layout.streams.len() > 6 {
        return Err(RsmaError::UnsupportedLayout("grid tier supports NOMA with at most 6 streams".into()));
    }
    let dirs = stream_directions(ch, layout, power)?;
    let mut candidates: Vec<PrecoderSet> =
        power_candidates(layout, power, grid).iter().map(|p| compose(&dirs, p, power)).collect();
    if layout.kind == SchemeKind::OneLayerRS && layout.num_users == 2 {
        let dims: Vec<usize> = (0..2).map(|u| layout.streams[layout.private_of(u).unwrap()].dim).collect();
        for order in [vec![0, 1], vec![1, 0]] {
            let opts = LayoutOptions { noma_order: Some(order), common_dim: Some(layout.streams[0].dim), ..Default::default() };
            let nl = build_layout(SchemeKind::NOMA, 2, &dims, &opts)?;
            let best = optimize_powers_fixed_directions(ch, &nl, metric, power, grid)?;
            if let Some(e) = embed_in_rs(&nl, &best.precoders, layout) {
                candidates.push(e);
            }
        }
    }
    let mut best: Option<((bool, f64), PrecoderSet)> = None;
    for pre in candidates {
        let report = evaluate(ch, layout, &pre, metric)?;
        let s = score(&report, &pre, metric);
        if best.as_ref().is_none_or(|(b, _)| better(s, *b)) {
            best = Some((s, pre));
        }
    }
    let (s, pre) = best.expect("at least one candidate");
    finish(ch, layout, pre, metric, vec![s.1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_rayleigh, geometry_2user};

    #[test]
    fn simplex_counts() {
        assert_eq!(simplex_grid(2, 4).len(), 5);
        assert_eq!(simplex_grid(3, 20).len(), 231);
        assert!(simplex_grid(3, 4).iter().all(|v| (v.iter().sum::<f64>() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn candidates_respect_budget() {
        let l = build_layout(SchemeKind::OneLayerRS, 3, &[1; 3], &LayoutOptions::default()).unwrap();
        for p in power_candidates(&l, 10.0, 11) {
            assert!((p.iter().sum::<f64>() - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_user_rate_at_full_power() {
        let ch = gen_rayleigh(3, 4, &[1], &[1.0]).unwrap();
        let l = build_layout(SchemeKind::OneLayerRS, 1, &[1], &LayoutOptions::default()).unwrap();
        let r = optimize_powers_fixed_directions(&ch, &l, &Metric::sum_rate(1), 10.0, 21).unwrap();
        let g = fro2(&ch.users[0].true_channel);
        assert!((r.objective - (1.0 + 10.0 * g).log2()).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_users_reduce_to_sdma() {
        let ch = geometry_2user(0.0, std::f64::consts::PI, 2).unwrap();
        let l = build_layout(SchemeKind::OneLayerRS, 2, &[1, 1], &LayoutOptions::default()).unwrap();
        let r = optimize_powers_fixed_directions(&ch, &l, &Metric::sum_rate(2), 100.0, 101).unwrap();
        assert!(r.common_fraction < 0.01);
        assert!((r.objective - 2.0 * 51f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn embedding_maps_sdma_and_noma() {
        let rs = build_layout(SchemeKind::OneLayerRS, 2, &[1, 1], &LayoutOptions::default()).unwrap();
        let noma = build_layout(SchemeKind::NOMA, 2, &[1, 1], &LayoutOptions { noma_order: Some(vec![1, 0]), ..Default::default() }).unwrap();
        let p = |x: f64| CMat::from_element(2, 1, c(x, 0.0));
        let pre = PrecoderSet::new(vec![p(1.0), p(2.0)], 20.0).unwrap();
        let e = embed_in_rs(&noma, &pre, &rs).unwrap();
        // noma streams: "12" owned by user 0, "2" private of user 1
        assert_eq!(e.precoders, vec![p(1.0), p(0.0), p(2.0)]);
        let grs = build_layout(SchemeKind::GRS, 3, &[1; 3], &LayoutOptions::default()).unwrap();
        let rs3 = build_layout(SchemeKind::OneLayerRS, 3, &[1; 3], &LayoutOptions::default()).unwrap();
        let pre3 = PrecoderSet::new(vec![p(0.0); 7], 1.0).unwrap();
        assert!(embed_in_rs(&grs, &pre3, &rs3).is_none());
    }
}
