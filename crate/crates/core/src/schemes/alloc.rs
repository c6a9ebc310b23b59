//! Splitting multi-decoder stream rates among their owners.

use crate::error::{Result, RsmaError};
use crate::optimize::{Metric, MetricKind};

/// Allocate one stream rate among `owners` given every user's current rate
/// `base` (indexed by user). Returns one share per owner.
pub fn allocate_common(stream_rate: f64, owners: &[usize], base: &[f64], metric: &Metric) -> Result<Vec<f64>> {
    let alloc = allocate_streams(&[stream_rate], &[owners.to_vec()], base, metric)?;
    Ok(alloc.into_iter().next().unwrap_or_default())
}

/// Allocate several stream rates (`caps[j]` shared by `owners[j]`). QoS
/// deficits are served first, then the metric decides.
pub fn allocate_streams(caps: &[f64], owners: &[Vec<usize>], base: &[f64], metric: &Metric) -> Result<Vec<Vec<f64>>> {
    if caps.len() != owners.len() {
        return Err(RsmaError::Dimension("one owner list per stream".into()));
    }
    let k_users = base.len();
    for o in owners {
        if o.is_empty() || o.iter().any(|&u| u >= k_users) {
            return Err(RsmaError::Layout("stream owners must be valid users".into()));
        }
    }
    if caps.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(RsmaError::Parameter("stream rates must be finite and >= 0".into()));
    }
    let mut alloc: Vec<Vec<f64>> = owners.iter().map(|o| vec![0.0; o.len()]).collect();
    let mut left = caps.to_vec();
    let mut totals = base.to_vec();

    if let Some(th) = &metric.qos {
        if th.len() != k_users {
            return Err(RsmaError::Dimension(format!("{} QoS thresholds for {k_users} users", th.len())));
        }
        let demand: Vec<f64> = (0..k_users).map(|k| (th[k] - totals[k]).max(0.0)).collect();
        if demand.iter().any(|&d| d > 0.0) {
            let flow = max_flow(&left, owners, &demand);
            apply_flow(&flow, owners, &mut alloc, &mut left, &mut totals);
        }
    }

    match &metric.kind {
        MetricKind::Mmf => {
            let active: Vec<usize> = (0..caps.len()).filter(|&j| left[j] > 0.0).collect();
            if active.len() == 1 {
                let j = active[0];
                let b: Vec<f64> = owners[j].iter().map(|&u| totals[u]).collect();
                let share = water_fill(left[j], &b);
                for (i, &u) in owners[j].iter().enumerate() {
                    alloc[j][i] += share[i];
                    totals[u] += share[i];
                }
            } else if active.len() > 1 {
                let level = mmf_level(&left, owners, &totals);
                let demand: Vec<f64> = totals.iter().map(|&t| (level - t).max(0.0)).collect();
                let flow = max_flow(&left, owners, &demand);
                apply_flow(&flow, owners, &mut alloc, &mut left, &mut totals);
                // Leftover capacity cannot raise the minimum; give it to the
                // currently poorest owner.
                for j in 0..caps.len() {
                    if left[j] > 0.0 {
                        let i = (0..owners[j].len())
                            .min_by(|&a, &b| totals[owners[j][a]].total_cmp(&totals[owners[j][b]]).then(a.cmp(&b)))
                            .unwrap();
                        alloc[j][i] += left[j];
                        totals[owners[j][i]] += left[j];
                        left[j] = 0.0;
                    }
                }
            }
        }
        _ => {
            for j in 0..caps.len() {
                if left[j] <= 0.0 {
                    continue;
                }
                let mut best = 0;
                for i in 1..owners[j].len() {
                    if metric.alloc_weight(owners[j][i])? > metric.alloc_weight(owners[j][best])? {
                        best = i;
                    }
                }
                alloc[j][best] += left[j];
                left[j] = 0.0;
            }
        }
    }
    // Make each stream's shares sum to its rate up to rounding.
    for j in 0..caps.len() {
        let sum: f64 = alloc[j].iter().sum();
        let fix = caps[j] - sum;
        if fix != 0.0 {
            let i = (0..alloc[j].len()).max_by(|&a, &b| alloc[j][a].total_cmp(&alloc[j][b])).unwrap();
            alloc[j][i] = (alloc[j][i] + fix).max(0.0);
        }
    }
    Ok(alloc)
}

/// Closed-form equalization: shares `C_i >= 0`, `sum C_i = r`, maximizing
/// `min_i (b_i + C_i)`.
pub(crate) fn water_fill(r: f64, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| b[x].total_cmp(&b[y]).then(x.cmp(&y)));
    let mut acc = 0.0;
    let mut level = 0.0;
    for j in 0..n {
        acc += b[idx[j]];
        level = (r + acc) / (j + 1) as f64;
        if j + 1 == n || level <= b[idx[j + 1]] {
            break;
        }
    }
    let mut out: Vec<f64> = b.iter().map(|&bi| (level - bi).max(0.0)).collect();
    let last = (0..n).rev().find(|&i| out[i] > 0.0);
    if let Some(l) = last {
        let others: f64 = (0..n).filter(|&i| i != l).map(|i| out[i]).sum();
        out[l] = (r - others).max(0.0);
    }
    out
}

/// Largest common level reachable by every user: the minimum over user sets
/// `S` of `(sum of rates of streams owned by someone in S + sum_S base) / |S|`.
pub(crate) fn mmf_level(caps: &[f64], owners: &[Vec<usize>], base: &[f64]) -> f64 {
    let k = base.len();
    let mut best = f64::INFINITY;
    for mask in 1u64..(1u64 << k) {
        let mut num = 0.0;
        let mut size = 0;
        for (u, &b) in base.iter().enumerate() {
            if mask & (1 << u) != 0 {
                num += b;
                size += 1;
            }
        }
        for (j, o) in owners.iter().enumerate() {
            if o.iter().any(|&u| mask & (1 << u) != 0) {
                num += caps[j];
            }
        }
        best = best.min(num / size as f64);
    }
    best
}

fn apply_flow(flow: &[Vec<f64>], owners: &[Vec<usize>], alloc: &mut [Vec<f64>], left: &mut [f64], totals: &mut [f64]) {
    for j in 0..owners.len() {
        for (i, &u) in owners[j].iter().enumerate() {
            let f = flow[j][i].min(left[j]).max(0.0);
            alloc[j][i] += f;
            left[j] -= f;
            totals[u] += f;
        }
        if left[j] < 1e-15 {
            left[j] = 0.0;
        }
    }
}

/// Edmonds-Karp on source -> streams -> owners -> sink; returns the flow on
/// each (stream, owner) edge.
fn max_flow(caps: &[f64], owners: &[Vec<usize>], demand: &[f64]) -> Vec<Vec<f64>> {
    let ns = caps.len();
    let nu = demand.len();
    let n = ns + nu + 2;
    let (src, snk) = (ns + nu, ns + nu + 1);
    let mut cap = vec![vec![0.0f64; n]; n];
    for j in 0..ns {
        cap[src][j] = caps[j];
        for &u in &owners[j] {
            cap[j][ns + u] = caps[j];
        }
    }
    for u in 0..nu {
        cap[ns + u][snk] = demand[u];
    }
    let orig = cap.clone();
    let eps = 1e-15;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[src] = src;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if prev[w] == usize::MAX && cap[v][w] > eps {
                    prev[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if prev[snk] == usize::MAX {
            break;
        }
        let mut push = f64::INFINITY;
        let mut w = snk;
        while w != src {
            push = push.min(cap[prev[w]][w]);
            w = prev[w];
        }
        let mut w = snk;
        while w != src {
            let v = prev[w];
            cap[v][w] -= push;
            cap[w][v] += push;
            w = v;
        }
    }
    owners
        .iter()
        .enumerate()
        .map(|(j, o)| o.iter().map(|&u| (orig[j][ns + u] - cap[j][ns + u]).max(0.0).min(caps[j])).collect())
        .collect()
}
