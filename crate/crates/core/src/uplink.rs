//! Uplink rate-splitting: users transmit one or two stream vectors, the
//! receiver applies MMSE filters and decodes all streams by SIC in a given
//! order. The received signal is `y = sum_k H_k x_k + n` with `H_k` the
//! `M x N_k` user matrix of the channel set.

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{dim, param, Result, RsmaError};
use crate::linalg::{add_gram, c, fro2, identity, inv_hpd, log2det_hpd, logdet_rate, CMat};

/// Default grid size over the split power in [`find_split_for_point`].
pub const SPLIT_GRID_POINTS: usize = 2001;

#[derive(Debug, Clone, PartialEq)]
pub struct UplinkStream {
    pub user: usize,
    /// 0 for the only or first part, 1 for the second part of a split user.
    pub part: usize,
    /// `N_k x d` precoder.
    pub precoder: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UplinkConfig {
    pub num_users: usize,
    pub streams: Vec<UplinkStream>,
    pub budgets: Vec<f64>,
    /// Stream indices in decoding order.
    pub order: Vec<usize>,
}

impl UplinkConfig {
    /// Identity-direction precoders: split users put `a_k P_k` on part one
    /// and `(1 - a_k) P_k` on part two, unsplit users put `P_k` on one
    /// stream. Default order: every first part by user, then second parts.
    pub fn identity_split(ch: &ChannelSet, budgets: &[f64], split: &[Option<f64>]) -> Result<Self> {
        let k = ch.num_users();
        if budgets.len() != k || split.len() != k {
            return dim("one budget and one split flag per user");
        }
        let mut streams = Vec::new();
        let mut second = Vec::new();
        for u in 0..k {
            let n = ch.users[u].rx;
            let eye = |p: f64| identity(n) * c((p / n as f64).sqrt(), 0.0);
            match split[u] {
                None => streams.push(UplinkStream { user: u, part: 0, precoder: eye(budgets[u]) }),
                Some(a) => {
                    if !(0.0..=1.0).contains(&a) {
                        return param(format!("split power of user {u} must lie in [0, 1]"));
                    }
                    streams.push(UplinkStream { user: u, part: 0, precoder: eye(a * budgets[u]) });
                    second.push(UplinkStream { user: u, part: 1, precoder: eye((1.0 - a) * budgets[u]) });
                }
            }
        }
        streams.extend(second);
        let order = (0..streams.len()).collect();
        let cfg = Self { num_users: k, streams, budgets: budgets.to_vec(), order };
        cfg.validate(ch)?;
        Ok(cfg)
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        self.order = order;
        self
    }

    pub fn validate(&self, ch: &ChannelSet) -> Result<()> {
        if ch.num_users() != self.num_users || self.budgets.len() != self.num_users {
            return dim("user count mismatch");
        }
        let mut parts = vec![[0usize; 2]; self.num_users];
        let mut power = vec![0.0; self.num_users];
        for (i, s) in self.streams.iter().enumerate() {
            if s.user >= self.num_users || s.part > 1 {
                return param(format!("stream {i}: bad user or part"));
            }
            if s.precoder.nrows() != ch.users[s.user].rx {
                return dim(format!("stream {i}: precoder rows must equal N_k"));
            }
            parts[s.user][s.part] += 1;
            power[s.user] += fro2(&s.precoder);
        }
        for u in 0..self.num_users {
            match parts[u] {
                [1, 0] | [1, 1] => {}
                _ => return param(format!("user {u} must send one stream or exactly two parts")),
            }
            if power[u] > self.budgets[u] + 1e-9 {
                return param(format!("user {u} exceeds its power budget"));
            }
        }
        let mut seen = vec![false; self.streams.len()];
        if self.order.len() != self.streams.len() {
            return Err(RsmaError::InvalidOrder("order must list every stream once".into()));
        }
        for &s in &self.order {
            if s >= seen.len() || seen[s] {
                return Err(RsmaError::InvalidOrder("order must list every stream once".into()));
            }
            seen[s] = true;
        }
        Ok(())
    }

    fn effective(&self, ch: &ChannelSet) -> Vec<CMat> {
        self.streams.iter().map(|s| &ch.users[s.user].true_channel * &s.precoder).collect()
    }
}

/// Interference-plus-noise covariance seen by each stream in decoding order:
/// `Z = I + sum_{later} G G^H`.
fn interference(eff: &[CMat], order: &[usize], m: usize) -> Vec<CMat> {
    let mut out = vec![CMat::zeros(0, 0); eff.len()];
    for (p, &s) in order.iter().enumerate() {
        let mut z = identity(m);
        for &t in &order[p + 1..] {
            add_gram(&mut z, &eff[t]);
        }
        out[s] = z;
    }
    out
}

/// MMSE receive filters `W = G^H Z^{-1}`, one per stream (indexed like the
/// config's streams).
pub fn mmse_filters(ch: &ChannelSet, cfg: &UplinkConfig) -> Result<Vec<CMat>> {
    cfg.validate(ch)?;
    let eff = cfg.effective(ch);
    let z = interference(&eff, &cfg.order, ch.tx);
    eff.iter().zip(&z).map(|(g, z)| Ok(g.adjoint() * inv_hpd(z)?)).collect()
}

/// Rate after a linear filter `W`: `log2 det(I + (WG)^H (W Z W^H)^{-1} WG)`.
pub fn filtered_rate(w: &CMat, g: &CMat, z: &CMat) -> Result<f64> {
    let wg = w * g;
    let noise = w * z * w.adjoint();
    logdet_rate(&wg, &noise)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UplinkRates {
    pub stream_rates: Vec<f64>,
    pub user_total: Vec<f64>,
}

pub fn rate_uplink(ch: &ChannelSet, cfg: &UplinkConfig) -> Result<UplinkRates> {
    cfg.validate(ch)?;
    let eff = cfg.effective(ch);
    let z = interference(&eff, &cfg.order, ch.tx);
    let mut stream_rates = Vec::with_capacity(eff.len());
    for (g, z) in eff.iter().zip(&z) {
        stream_rates.push(logdet_rate(g, z)?);
    }
    let mut user_total = vec![0.0; cfg.num_users];
    for (s, r) in cfg.streams.iter().zip(&stream_rates) {
        user_total[s.user] += r;
    }
    Ok(UplinkRates { stream_rates, user_total })
}

/// Sum capacity `log2 det(I + sum_k H_k P_k P_k^H H_k^H)` of the streams.
pub fn sum_capacity(ch: &ChannelSet, cfg: &UplinkConfig) -> Result<f64> {
    let mut z = identity(ch.tx);
    for g in cfg.effective(ch) {
        add_gram(&mut z, &g);
    }
    log2det_hpd(&z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacRegion2 {
    pub r1_max: f64,
    pub r2_max: f64,
    pub r_sum: f64,
}

impl MacRegion2 {
    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        r1 >= -tol && r2 >= -tol && r1 <= self.r1_max + tol && r2 <= self.r2_max + tol && r1 + r2 <= self.r_sum + tol
    }

    /// Point on the dominant face, `s` in [0, 1] from the user-2-first corner
    /// to the user-1-first corner.
    pub fn dominant_face_point(&self, s: f64) -> (f64, f64) {
        let r1_hi = self.r1_max;
        let r1_lo = self.r_sum - self.r2_max;
        let r1 = r1_hi + s * (r1_lo - r1_hi);
        (r1, self.r_sum - r1)
    }
}

pub fn mac_region_2user(p1: f64, p2: f64, g1: f64, g2: f64) -> Result<MacRegion2> {
    if p1 < 0.0 || p2 < 0.0 || g1 < 0.0 || g2 < 0.0 {
        return param("powers and gains must be >= 0");
    }
    Ok(MacRegion2 {
        r1_max: (1.0 + p1 * g1).log2(),
        r2_max: (1.0 + p2 * g2).log2(),
        r_sum: (1.0 + p1 * g1 + p2 * g2).log2(),
    })
}

/// Canonical SIC orders of the two-user SISO MAC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SisoOrder {
    /// `s_{1,1}`, `s_2`, `s_{1,2}` with user 1 split.
    Split,
    /// User 1 first, then user 2.
    User1First,
    /// User 2 first, then user 1.
    User2First,
}

/// Rates of the two-user SISO MAC with user 1 putting `a P1` on its first
/// part (only meaningful for [`SisoOrder::Split`]).
pub fn siso_rates(p1: f64, p2: f64, g1: f64, g2: f64, a: f64, order: SisoOrder) -> (f64, f64) {
    let (s1, s2) = (p1 * g1, p2 * g2);
    match order {
        SisoOrder::User1First => ((1.0 + s1 / (1.0 + s2)).log2(), (1.0 + s2).log2()),
        SisoOrder::User2First => ((1.0 + s1).log2(), (1.0 + s2 / (1.0 + s1)).log2()),
        SisoOrder::Split => {
            let (x1, x2) = (a * s1, (1.0 - a) * s1);
            let r11 = (1.0 + x1 / (1.0 + s2 + x2)).log2();
            let r2 = (1.0 + s2 / (1.0 + x2)).log2();
            let r12 = (1.0 + x2).log2();
            (r11 + r12, r2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SplitSearch {
    Found { a: f64, order: SisoOrder, rates: (f64, f64) },
    Infeasible,
}

/// Find a split power and SIC order whose rate pair dominates `target`
/// within `1e-6`, without time sharing.
pub fn find_split_for_point(target: (f64, f64), p1: f64, p2: f64, g1: f64, g2: f64) -> Result<SplitSearch> {
    let region = mac_region_2user(p1, p2, g1, g2)?;
    let tol = 1e-6;
    if !region.contains(target.0, target.1, 1e-9) {
        return Ok(SplitSearch::Infeasible);
    }
    let dominates = |r: (f64, f64)| r.0 >= target.0 - tol && r.1 >= target.1 - tol;
    for order in [SisoOrder::User1First, SisoOrder::User2First] {
        let r = siso_rates(p1, p2, g1, g2, 1.0, order);
        if dominates(r) {
            return Ok(SplitSearch::Found { a: 1.0, order, rates: r });
        }
    }
    let rate = |a: f64| siso_rates(p1, p2, g1, g2, a, SisoOrder::Split);
    // R1 decreases and R2 increases in a; bracket R1(a) = target.0.
    let n = SPLIT_GRID_POINTS;
    let mut lo = 0.0;
    let mut hi = 1.0;
    for i in 0..n {
        let a = i as f64 / (n - 1) as f64;
        let r = rate(a);
        if dominates(r) {
            return Ok(SplitSearch::Found { a, order: SisoOrder::Split, rates: r });
        }
        if r.0 >= target.0 {
            lo = a;
        } else {
            hi = a;
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = rate(mid);
        if dominates(r) {
            return Ok(SplitSearch::Found { a: mid, order: SisoOrder::Split, rates: r });
        }
        if r.0 >= target.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let r = rate(lo);
    if dominates(r) {
        return Ok(SplitSearch::Found { a: lo, order: SisoOrder::Split, rates: r });
    }
    Ok(SplitSearch::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_rayleigh;

    fn siso(h1: f64, h2: f64) -> ChannelSet {
        let m = |h: f64| CMat::from_element(1, 1, c(h, 0.0));
        ChannelSet::from_true(1, vec![m(h1), m(h2)], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn single_stream_rate() {
        let h = CMat::from_element(1, 1, c(0.0, 2.0));
        let ch = ChannelSet::from_true(1, vec![h], &[1.0]).unwrap();
        let cfg = UplinkConfig::identity_split(&ch, &[3.0], &[None]).unwrap();
        let r = rate_uplink(&ch, &cfg).unwrap();
        assert!((r.user_total[0] - 13f64.log2()).abs() < 1e-13);
        let w = mmse_filters(&ch, &cfg).unwrap();
        // Matched filter h^* sqrt(P) against unit noise.
        assert!((w[0][(0, 0)] - c(0.0, -2.0 * 3f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn siso_corner_points() {
        let ch = siso(1.0, 1.0);
        let cfg = UplinkConfig::identity_split(&ch, &[1.0, 1.0], &[None, None]).unwrap();
        let r = rate_uplink(&ch, &cfg).unwrap();
        assert!((r.user_total[0] - 1.5f64.log2()).abs() < 1e-13);
        assert!((r.user_total[1] - 1.0).abs() < 1e-13);
        let r = rate_uplink(&ch, &cfg.with_order(vec![1, 0])).unwrap();
        assert!((r.user_total[0] - 1.0).abs() < 1e-13);
        assert!((r.user_total[1] - 1.5f64.log2()).abs() < 1e-13);
    }

    #[test]
    fn split_sum_is_conserved() {
        let ch = siso(1.0, 1.0);
        for i in 0..=20 {
            let a = i as f64 / 20.0;
            // streams: s11, s2, s12 -> order s11, s2, s12
            let cfg = UplinkConfig::identity_split(&ch, &[1.0, 1.0], &[Some(a), None]).unwrap();
            let cfg = cfg.with_order(vec![0, 1, 2]);
            let r = rate_uplink(&ch, &cfg).unwrap();
            assert!((r.user_total.iter().sum::<f64>() - 3f64.log2()).abs() < 1e-12);
            let (r1, r2) = siso_rates(1.0, 1.0, 1.0, 1.0, a, SisoOrder::Split);
            assert!((r1 - r.user_total[0]).abs() < 1e-12 && (r2 - r.user_total[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn mmse_filtered_rate_equals_log_det() {
        for seed in 0..20 {
            let ch = gen_rayleigh(seed, 3, &[2, 2], &[1.0, 0.5]).unwrap();
            let cfg = UplinkConfig::identity_split(&ch, &[4.0, 8.0], &[Some(0.3), None]).unwrap();
            let cfg = cfg.with_order(vec![2, 0, 1]);
            let w = mmse_filters(&ch, &cfg).unwrap();
            let r = rate_uplink(&ch, &cfg).unwrap();
            let eff = cfg.effective(&ch);
            let z = interference(&eff, &cfg.order, ch.tx);
            for s in 0..3 {
                let fr = filtered_rate(&w[s], &eff[s], &z[s]).unwrap();
                assert!((fr - r.stream_rates[s]).abs() < 1e-10);
            }
            // Chain rule: every full order gives the sum capacity.
            assert!((r.user_total.iter().sum::<f64>() - sum_capacity(&ch, &cfg).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn orthogonal_streams_decouple() {
        let ch = ChannelSet::from_true(
            2,
            vec![CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]), CMat::from_column_slice(2, 1, &[c(0.0, 0.0), c(2.0, 0.0)])],
            &[1.0, 1.0],
        )
        .unwrap();
        let cfg = UplinkConfig::identity_split(&ch, &[1.0, 1.0], &[None, None]).unwrap();
        let r = rate_uplink(&ch, &cfg).unwrap();
        assert!((r.user_total[0] - 1.0).abs() < 1e-13);
        assert!((r.user_total[1] - 5f64.log2()).abs() < 1e-13);
    }

    #[test]
    fn region_examples() {
        let r = mac_region_2user(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((r.r1_max, r.r2_max), (1.0, 1.0));
        assert!((r.r_sum - 3f64.log2()).abs() < 1e-15);
        let d = mac_region_2user(1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(d.r2_max, 0.0);
        assert_eq!(d.r_sum, d.r1_max);
        assert!(mac_region_2user(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn split_search_examples() {
        let h = 0.5 * 3f64.log2();
        match find_split_for_point((h, h), 1.0, 1.0, 1.0, 1.0).unwrap() {
            SplitSearch::Found { order, rates, .. } => {
                assert_eq!(order, SisoOrder::Split);
                assert!(rates.0 >= h - 1e-6 && rates.1 >= h - 1e-6);
            }
            SplitSearch::Infeasible => panic!("symmetric point must be reachable"),
        }
        match find_split_for_point((1.0, 1.5f64.log2()), 1.0, 1.0, 1.0, 1.0).unwrap() {
            SplitSearch::Found { a, order, .. } => {
                assert_eq!(a, 1.0);
                assert_eq!(order, SisoOrder::User2First);
            }
            SplitSearch::Infeasible => panic!("corner must be reachable"),
        }
        assert_eq!(find_split_for_point((1.1, 1.1), 1.0, 1.0, 1.0, 1.0).unwrap(), SplitSearch::Infeasible);
    }

    #[test]
    fn achieved_pairs_stay_in_pentagon() {
        for seed in 0..10u64 {
            let ch = gen_rayleigh(seed, 1, &[1, 1], &[1.0, 1.0]).unwrap();
            let g: Vec<f64> = ch.users.iter().map(|u| fro2(&u.true_channel)).collect();
            let region = mac_region_2user(5.0, 2.0, g[0], g[1]).unwrap();
            for i in 0..=10 {
                let a = i as f64 / 10.0;
                for order in [vec![0, 1, 2], vec![1, 0, 2], vec![2, 1, 0], vec![0, 2, 1]] {
                    let cfg = UplinkConfig::identity_split(&ch, &[5.0, 2.0], &[Some(a), None]).unwrap().with_order(order);
                    let r = rate_uplink(&ch, &cfg).unwrap();
                    assert!(region.contains(r.user_total[0], r.user_total[1], 1e-9));
                    assert!((r.user_total[0] + r.user_total[1] - region.r_sum).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn config_errors() {
        let ch = siso(1.0, 1.0);
        assert!(UplinkConfig::identity_split(&ch, &[1.0], &[None, None]).is_err());
        assert!(UplinkConfig::identity_split(&ch, &[1.0, 1.0], &[Some(1.5), None]).is_err());
        let cfg = UplinkConfig::identity_split(&ch, &[1.0, 1.0], &[None, None]).unwrap();
        assert!(matches!(rate_uplink(&ch, &cfg.clone().with_order(vec![0, 0])), Err(RsmaError::InvalidOrder(_))));
        let mut over = cfg;
        over.budgets = vec![0.5, 1.0];
        assert!(rate_uplink(&ch, &over).is_err());
    }
}
