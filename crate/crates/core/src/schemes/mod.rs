//! Downlink broadcast-channel rate evaluation.
//!
//! Every scheme is described by a [`StreamLayout`]: a list of stream vectors,
//! each decoded by a subset of users and carrying split messages of its
//! owners. A single successive-interference-cancellation engine evaluates
//! all layouts: at each user, streams are decoded from the largest decoder
//! subset down, and every stream not yet decoded (including streams the user
//! never decodes) is treated as noise. DPCRS additionally removes private
//! streams of earlier-encoded users from the interference.
//!
//! User indices are zero-based in the API; subset strings in JSON output are
//! one-based (`"12"` is users 0 and 1).

mod alloc;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{dim, Result, RsmaError};
use crate::linalg::{add_gram, fro2, identity, logdet_rate, CMat};
use crate::optimize::Metric;

pub use alloc::{allocate_common, allocate_streams};

/// Rates below this are reported as exactly zero.
pub const RATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum SchemeKind {
    OneLayerRS,
    HRS,
    GRS,
    DPCRS,
    SDMA,
    NOMA,
    OMA,
    Multicast,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::OneLayerRS => "rs",
            SchemeKind::HRS => "hrs",
            SchemeKind::GRS => "grs",
            SchemeKind::DPCRS => "dpcrs",
            SchemeKind::SDMA => "sdma",
            SchemeKind::NOMA => "noma",
            SchemeKind::OMA => "oma",
            SchemeKind::Multicast => "multicast",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "rs" | "1layer_rs" | "1layerrs" | "one_layer_rs" | "rsma" => SchemeKind::OneLayerRS,
            "hrs" => SchemeKind::HRS,
            "grs" => SchemeKind::GRS,
            "dpcrs" => SchemeKind::DPCRS,
            "sdma" => SchemeKind::SDMA,
            "noma" => SchemeKind::NOMA,
            "oma" => SchemeKind::OMA,
            "multicast" => SchemeKind::Multicast,
            other => return Err(RsmaError::Config(format!("unknown scheme kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stream {
    /// Sorted decoders of this stream.
    pub subset: Vec<usize>,
    pub dim: usize,
    /// Users whose (split) messages this stream carries.
    pub owners: Vec<usize>,
    /// Private streams carry one user's private message and are decoded only
    /// by that user.
    pub private: bool,
}

impl Stream {
    pub fn is_private(&self) -> bool {
        self.private
    }

    pub fn label(&self) -> String {
        subset_label(&self.subset)
    }
}

/// One-based subset string, e.g. `[0, 2] -> "13"`.
pub fn subset_label(subset: &[usize]) -> String {
    subset
        .iter()
        .map(|k| {
            let n = k + 1;
            if n < 10 { char::from(b'0' + n as u8).to_string() } else { format!("({n})") }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamLayout {
    pub kind: SchemeKind,
    pub num_users: usize,
    pub streams: Vec<Stream>,
    pub groups: Option<Vec<Vec<usize>>>,
    pub noma_order: Option<Vec<usize>>,
    pub dpc_order: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default)]
pub struct LayoutOptions {
    /// HRS groups, or NOMA user groups (SIC chains inside each group).
    pub groups: Option<Vec<Vec<usize>>>,
    /// NOMA decoding strength order, strongest first.
    pub noma_order: Option<Vec<usize>>,
    /// DPCRS encoding order, first-encoded first.
    pub dpc_order: Option<Vec<usize>>,
    /// GRS active subsets (default: every nonempty subset).
    pub grs_active_subsets: Option<Vec<Vec<usize>>>,
    /// Scheduled user under OMA (default 0).
    pub oma_user: Option<usize>,
    /// Dimension of multi-user streams (default: min of member dims).
    pub common_dim: Option<usize>,
}

fn check_permutation(p: &[usize], k: usize, what: &str) -> Result<()> {
    let set: BTreeSet<usize> = p.iter().copied().collect();
    if p.len() != k || set.len() != k || set.iter().any(|&u| u >= k) {
        return Err(RsmaError::InvalidOrder(format!("{what} is not a permutation of 0..{k}")));
    }
    Ok(())
}

fn check_partition(groups: &[Vec<usize>], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    for g in groups {
        if g.is_empty() {
            return Err(RsmaError::Layout("empty group".into()));
        }
        for &u in g {
            if u >= k || seen[u] {
                return Err(RsmaError::Layout("groups must partition the users".into()));
            }
            seen[u] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(RsmaError::Layout("groups must cover every user".into()));
    }
    Ok(())
}

/// Nonempty subsets of `0..k`, larger first, lexicographic within a size.
pub fn canonical_subsets(k: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1u32..(1 << k))
        .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    all.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    all
}

pub fn build_layout(kind: SchemeKind, k: usize, dims: &[usize], opts: &LayoutOptions) -> Result<StreamLayout> {
    if k == 0 {
        return Err(RsmaError::Layout("need at least one user".into()));
    }
    if dims.len() != k {
        return dim(format!("{} stream dims for {k} users", dims.len()));
    }
    if dims.contains(&0) {
        return Err(RsmaError::Layout("stream dimensions must be >= 1".into()));
    }
    let common_dim = |subset: &[usize]| -> usize {
        opts.common_dim.unwrap_or_else(|| subset.iter().map(|&u| dims[u]).min().unwrap_or(1))
    };
    if opts.common_dim == Some(0) {
        return Err(RsmaError::Layout("common dimension must be >= 1".into()));
    }
    let all: Vec<usize> = (0..k).collect();
    let private = |u: usize| Stream { subset: vec![u], dim: dims[u], owners: vec![u], private: true };
    let common = |subset: Vec<usize>| Stream { dim: common_dim(&subset), owners: subset.clone(), subset, private: false };

    let mut layout = StreamLayout { kind, num_users: k, streams: Vec::new(), groups: None, noma_order: None, dpc_order: None };
    match kind {
        SchemeKind::OneLayerRS | SchemeKind::DPCRS => {
            layout.streams.push(common(all.clone()));
            layout.streams.extend((0..k).map(private));
            if kind == SchemeKind::DPCRS {
                let order = opts.dpc_order.clone().unwrap_or_else(|| all.clone());
                check_permutation(&order, k, "dpc_order")?;
                layout.dpc_order = Some(order);
            }
        }
        SchemeKind::SDMA => layout.streams.extend((0..k).map(private)),
        SchemeKind::Multicast => layout.streams.push(common(all.clone())),
        SchemeKind::OMA => {
            let u = opts.oma_user.unwrap_or(0);
            if u >= k {
                return Err(RsmaError::Layout(format!("oma_user {u} out of range")));
            }
            layout.streams.push(private(u));
        }
        SchemeKind::HRS => {
            let groups = opts
                .groups
                .clone()
                .ok_or_else(|| RsmaError::Layout("HRS needs user groups".into()))?;
            check_partition(&groups, k)?;
            let groups: Vec<Vec<usize>> = groups
                .into_iter()
                .map(|mut g| {
                    g.sort_unstable();
                    g
                })
                .collect();
            layout.streams.push(common(all.clone()));
            for g in &groups {
                layout.streams.push(common(g.clone()));
            }
            layout.streams.extend((0..k).map(private));
            layout.groups = Some(groups);
        }
        SchemeKind::GRS => {
            let mut subsets = match &opts.grs_active_subsets {
                None => canonical_subsets(k),
                Some(list) => {
                    let mut seen = BTreeSet::new();
                    let mut out = Vec::new();
                    for s in list {
                        let mut s = s.clone();
                        s.sort_unstable();
                        s.dedup();
                        if s.is_empty() || s.iter().any(|&u| u >= k) {
                            return Err(RsmaError::Layout(format!("invalid GRS subset {s:?}")));
                        }
                        if !seen.insert(s.clone()) {
                            return Err(RsmaError::Layout(format!("duplicate GRS subset {s:?}")));
                        }
                        out.push(s);
                    }
                    out
                }
            };
            subsets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
            for s in subsets {
                layout.streams.push(if s.len() == 1 { private(s[0]) } else { common(s) });
            }
        }
        SchemeKind::NOMA => {
            let order = opts.noma_order.clone().unwrap_or_else(|| all.clone());
            check_permutation(&order, k, "noma_order")?;
            let groups = opts.groups.clone().unwrap_or_else(|| vec![all.clone()]);
            check_partition(&groups, k)?;
            let rank = |u: usize| order.iter().position(|&v| v == u).unwrap();
            let mut streams = Vec::new();
            for g in &groups {
                let mut chain = g.clone();
                chain.sort_by_key(|&u| rank(u));
                for (pos, &u) in chain.iter().enumerate() {
                    let mut subset: Vec<usize> = chain[..=pos].to_vec();
                    subset.sort_unstable();
                    streams.push(Stream {
                        dim: if pos == 0 { dims[u] } else { common_dim(&subset) },
                        subset,
                        owners: vec![u],
                        private: pos == 0,
                    });
                }
            }
            streams.sort_by(|a, b| b.subset.len().cmp(&a.subset.len()).then_with(|| a.subset.cmp(&b.subset)));
            layout.streams = streams;
            layout.noma_order = Some(order);
            if groups.len() > 1 {
                layout.groups = Some(groups);
            }
        }
    }
    Ok(layout)
}

impl StreamLayout {
    /// Index of the private stream of user `k`, if any.
    pub fn private_of(&self, k: usize) -> Option<usize> {
        self.streams.iter().position(|s| s.is_private() && s.subset[0] == k)
    }

    /// Default per-user decoding order: streams containing the user, larger
    /// subsets first, stream-index order within a size.
    pub fn default_decoding_order(&self, k: usize) -> Vec<usize> {
        let mut seq: Vec<usize> = (0..self.streams.len()).filter(|&s| self.streams[s].subset.contains(&k)).collect();
        seq.sort_by(|&a, &b| self.streams[b].subset.len().cmp(&self.streams[a].subset.len()).then(a.cmp(&b)));
        seq
    }

    pub fn validate_decoding_order(&self, k: usize, order: &[usize]) -> Result<()> {
        let mut expect = self.default_decoding_order(k);
        let mut got = order.to_vec();
        expect.sort_unstable();
        got.sort_unstable();
        if expect != got {
            return Err(RsmaError::InvalidOrder(format!(
                "user {k}: decoding order must list exactly the streams the user decodes"
            )));
        }
        for w in order.windows(2) {
            if self.streams[w[0]].subset.len() < self.streams[w[1]].subset.len() {
                return Err(RsmaError::InvalidOrder(format!(
                    "user {k}: larger subsets must be decoded before smaller ones"
                )));
            }
        }
        Ok(())
    }

    /// Every stream index `s` and each user decoding it, with the streams
    /// treated as interference: `plan[k] = [(stream, interferers)]` in the
    /// user's decoding order.
    pub fn decode_plan(&self, orders: Option<&[Vec<usize>]>) -> Result<Vec<Vec<(usize, Vec<usize>)>>> {
        let n = self.streams.len();
        let mut plan = Vec::with_capacity(self.num_users);
        for k in 0..self.num_users {
            let seq = match orders {
                Some(o) => {
                    let seq = o.get(k).ok_or_else(|| RsmaError::InvalidOrder(format!("missing order for user {k}")))?;
                    self.validate_decoding_order(k, seq)?;
                    seq.clone()
                }
                None => self.default_decoding_order(k),
            };
            let mut decoded = vec![false; n];
            let mut steps = Vec::with_capacity(seq.len());
            for &s in &seq {
                decoded[s] = true;
                let interf: Vec<usize> = match (&self.dpc_order, self.streams[s].is_private()) {
                    (Some(pi), true) => {
                        let pos = pi.iter().position(|&u| u == k).unwrap();
                        (0..n)
                            .filter(|&t| !decoded[t])
                            .filter(|&t| {
                                let st = &self.streams[t];
                                !st.is_private() || pi[pos + 1..].contains(&st.subset[0])
                            })
                            .collect()
                    }
                    _ => (0..n).filter(|&t| !decoded[t]).collect(),
                };
                steps.push((s, interf));
            }
            plan.push(steps);
        }
        Ok(plan)
    }
}

/// Per-stream precoders for a layout, with the sum-power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub precoders: Vec<CMat>,
    pub power_budget: f64,
    /// Optional per-user decoding orders (stream indices); default is the
    /// layout's canonical order.
    pub decoding_orders: Option<Vec<Vec<usize>>>,
}

impl PrecoderSet {
    pub fn new(precoders: Vec<CMat>, power_budget: f64) -> Result<Self> {
        let p = Self { precoders, power_budget, decoding_orders: None };
        if !(power_budget > 0.0) {
            return Err(RsmaError::Parameter("power budget must be > 0".into()));
        }
        if p.total_power() > power_budget + 1e-9 {
            return Err(RsmaError::Parameter(format!(
                "precoder power {} exceeds budget {power_budget}",
                p.total_power()
            )));
        }
        Ok(p)
    }

    pub fn with_decoding_orders(mut self, orders: Vec<Vec<usize>>) -> Self {
        self.decoding_orders = Some(orders);
        self
    }

    pub fn total_power(&self) -> f64 {
        self.precoders.iter().map(fro2).sum()
    }

    pub fn stream_power(&self, s: usize) -> f64 {
        fro2(&self.precoders[s])
    }

    pub fn tx_antennas(&self) -> usize {
        self.precoders.first().map_or(0, |p| p.nrows())
    }

    pub fn check(&self, ch: &ChannelSet, layout: &StreamLayout) -> Result<()> {
        if ch.num_users() != layout.num_users {
            return dim(format!("{} users in channel, {} in layout", ch.num_users(), layout.num_users));
        }
        if self.precoders.len() != layout.streams.len() {
            return dim(format!("{} precoders for {} streams", self.precoders.len(), layout.streams.len()));
        }
        for (s, (p, st)) in self.precoders.iter().zip(&layout.streams).enumerate() {
            if p.nrows() != ch.tx || p.ncols() != st.dim {
                return dim(format!(
                    "stream {s}: precoder is {}x{}, expected {}x{}",
                    p.nrows(),
                    p.ncols(),
                    ch.tx,
                    st.dim
                ));
            }
            for &u in &st.subset {
                if st.dim > ch.tx.min(ch.users[u].rx) {
                    return Err(RsmaError::Layout(format!("stream {s}: dim {} exceeds min(M, N_{u})", st.dim)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamRates {
    pub subset: Vec<usize>,
    pub owners: Vec<usize>,
    /// `(user, R_{A,k})` for every decoder `k` of the stream.
    pub per_user: Vec<(usize, f64)>,
    /// `R_A = min_k R_{A,k}`.
    pub rate: f64,
    /// `(owner, C_k^A)`; empty for private streams.
    pub allocation: Vec<(usize, f64)>,
    pub private: bool,
}

impl StreamRates {
    pub fn is_private(&self) -> bool {
        self.private
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub streams: Vec<StreamRates>,
    /// Private-stream rate of each user (0 when it has none).
    pub private_rate: Vec<f64>,
    pub user_total: Vec<f64>,
}

fn clamp_rate(r: f64) -> f64 {
    if r < RATE_FLOOR { 0.0 } else { r }
}

fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

impl RateReport {
    pub fn num_users(&self) -> usize {
        self.user_total.len()
    }

    pub fn sum_rate(&self) -> f64 {
        self.user_total.iter().sum()
    }

    pub fn min_rate(&self) -> f64 {
        self.user_total.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Check the min-rate, allocation-sum and total contracts.
    pub fn check_contracts(&self, tol: f64) -> Result<()> {
        let bad = |m: String| Err(RsmaError::Numerical(m));
        for (i, s) in self.streams.iter().enumerate() {
            let m = s.per_user.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            if s.rate != clamp_rate(m) {
                return bad(format!("stream {i}: rate is not the min over decoders"));
            }
            if !s.is_private() {
                let sum: f64 = s.allocation.iter().map(|a| a.1).sum();
                if (sum - s.rate).abs() > tol || s.allocation.iter().any(|a| a.1 < 0.0) {
                    return bad(format!("stream {i}: allocation does not sum to the stream rate"));
                }
            }
        }
        for k in 0..self.num_users() {
            let mut t = 0.0;
            for s in self.streams.iter().filter(|s| !s.is_private()) {
                t += s.allocation.iter().filter(|a| a.0 == k).map(|a| a.1).sum::<f64>();
            }
            t += self.private_rate[k];
            if (t - self.user_total[k]).abs() > tol || !self.user_total[k].is_finite() {
                return bad(format!("user {k}: total does not match its allocations"));
            }
        }
        Ok(())
    }

    /// JSON with streams keyed by one-based subset string; rates rounded to
    /// 12 significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let mut streams = Map::new();
        for s in &self.streams {
            let mut key = subset_label(&s.subset);
            let mut n = 1;
            while streams.contains_key(&key) {
                key = format!("{}#{n}", subset_label(&s.subset));
                n += 1;
            }
            let per_user: Map<String, Value> =
                s.per_user.iter().map(|(k, r)| ((k + 1).to_string(), json!(sig12(*r)))).collect();
            let alloc: Map<String, Value> =
                s.allocation.iter().map(|(k, r)| ((k + 1).to_string(), json!(sig12(*r)))).collect();
            let owners: Vec<usize> = s.owners.iter().map(|k| k + 1).collect();
            streams.insert(
                key,
                json!({"rate": sig12(s.rate), "per_user": per_user, "allocation": alloc, "owners": owners}),
            );
        }
        json!({
            "streams": streams,
            "private_rate": self.private_rate.iter().map(|r| sig12(*r)).collect::<Vec<_>>(),
            "user_total": self.user_total.iter().map(|r| sig12(*r)).collect::<Vec<_>>(),
        })
    }
}

/// `R_{A,k}` for every step of the decode plan; `out[k][i]` matches
/// `plan[k][i]`.
pub(crate) fn per_user_rates(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    plan: &[Vec<(usize, Vec<usize>)>],
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(plan.len());
    for (k, steps) in plan.iter().enumerate() {
        let hk = ch.users[k].true_channel.adjoint();
        let eff: Vec<CMat> = pre.precoders.iter().map(|p| &hk * p).collect();
        let mut rates = Vec::with_capacity(steps.len());
        for (s, interf) in steps {
            let mut r = identity(hk.nrows());
            for &t in interf {
                add_gram(&mut r, &eff[t]);
            }
            rates.push(logdet_rate(&eff[*s], &r)?);
        }
        out.push(rates);
    }
    Ok(out)
}

/// Evaluate any layout: decode rates, stream rates, metric-driven
/// allocation of multi-decoder streams and per-user totals.
pub fn evaluate(ch: &ChannelSet, layout: &StreamLayout, pre: &PrecoderSet, metric: &Metric) -> Result<RateReport> {
    pre.check(ch, layout)?;
    let plan = layout.decode_plan(pre.decoding_orders.as_deref())?;
    let rates = per_user_rates(ch, pre, &plan)?;
    assemble(layout, &plan, &rates, metric)
}

pub(crate) fn assemble(
    layout: &StreamLayout,
    plan: &[Vec<(usize, Vec<usize>)>],
    rates: &[Vec<f64>],
    metric: &Metric,
) -> Result<RateReport> {
    let k_users = layout.num_users;
    let mut streams: Vec<StreamRates> = layout
        .streams
        .iter()
        .map(|s| StreamRates {
            subset: s.subset.clone(),
            owners: s.owners.clone(),
            per_user: Vec::new(),
            rate: 0.0,
            allocation: Vec::new(),
            private: s.private,
        })
        .collect();
    for (k, steps) in plan.iter().enumerate() {
        for ((s, _), &r) in steps.iter().zip(&rates[k]) {
            if !r.is_finite() {
                return Err(RsmaError::Numerical(format!("non-finite rate for user {k}")));
            }
            streams[*s].per_user.push((k, clamp_rate(r)));
        }
    }
    for s in &mut streams {
        s.per_user.sort_by_key(|p| p.0);
        s.rate = clamp_rate(s.per_user.iter().map(|p| p.1).fold(f64::INFINITY, f64::min));
    }
    let mut private_rate = vec![0.0; k_users];
    for s in streams.iter().filter(|s| s.is_private()) {
        private_rate[s.subset[0]] = s.rate;
    }
    let multi: Vec<usize> = (0..streams.len()).filter(|&i| !streams[i].is_private()).collect();
    let caps: Vec<f64> = multi.iter().map(|&i| streams[i].rate).collect();
    let owners: Vec<Vec<usize>> = multi.iter().map(|&i| streams[i].owners.clone()).collect();
    let alloc = allocate_streams(&caps, &owners, &private_rate, metric)?;
    let mut user_total = vec![0.0; k_users];
    for (j, &i) in multi.iter().enumerate() {
        streams[i].allocation = owners[j].iter().copied().zip(alloc[j].iter().copied()).collect();
        for &(k, c) in &streams[i].allocation {
            user_total[k] += c;
        }
    }
    for k in 0..k_users {
        user_total[k] += private_rate[k];
    }
    Ok(RateReport { streams, private_rate, user_total })
}

fn expect_kind(layout: &StreamLayout, kind: SchemeKind) -> Result<()> {
    if layout.kind != kind {
        return Err(RsmaError::UnsupportedLayout(format!("expected {kind:?}, got {:?}", layout.kind)));
    }
    Ok(())
}

pub fn rate_1layer(ch: &ChannelSet, layout: &StreamLayout, pre: &PrecoderSet, metric: &Metric) -> Result<RateReport> {
    expect_kind(layout, SchemeKind::OneLayerRS)?;
    evaluate(ch, layout, pre, metric)
}

pub fn rate_hrs(ch: &ChannelSet, layout: &StreamLayout, pre: &PrecoderSet, metric: &Metric) -> Result<RateReport> {
    expect_kind(layout, SchemeKind::HRS)?;
    evaluate(ch, layout, pre, metric)
}

pub fn rate_grs(ch: &ChannelSet, layout: &StreamLayout, pre: &PrecoderSet, metric: &Metric) -> Result<RateReport> {
    expect_kind(layout, SchemeKind::GRS)?;
    evaluate(ch, layout, pre, metric)
}

pub fn rate_dpcrs(ch: &ChannelSet, layout: &StreamLayout, pre: &PrecoderSet, metric: &Metric) -> Result<RateReport> {
    expect_kind(layout, SchemeKind::DPCRS)?;
    if layout.dpc_order.is_none() {
        return Err(RsmaError::InvalidOrder("DPCRS layout without dpc_order".into()));
    }
    evaluate(ch, layout, pre, metric)
}

/// Users ordered by descending Frobenius norm of the channel estimate, ties
/// by index.
pub fn strength_order(ch: &ChannelSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ch.num_users()).collect();
    let norms: Vec<f64> = ch.users.iter().map(|u| fro2(&u.estimate)).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
}

/// A layout recipe resolved per channel realization: NOMA decoding orders
/// default to [`strength_order`] of the given channel set.
#[derive(Debug, Clone)]
pub struct LayoutSpec {
    pub kind: SchemeKind,
    pub dims: Vec<usize>,
    pub options: LayoutOptions,
}

impl LayoutSpec {
    pub fn new(kind: SchemeKind, dims: Vec<usize>) -> Self {
        Self { kind, dims, options: LayoutOptions::default() }
    }

    pub fn build(&self, ch: &ChannelSet) -> Result<StreamLayout> {
        let mut opts = self.options.clone();
        if self.kind == SchemeKind::NOMA && opts.noma_order.is_none() {
            opts.noma_order = Some(strength_order(ch));
        }
        build_layout(self.kind, ch.num_users(), &self.dims, &opts)
    }
}
