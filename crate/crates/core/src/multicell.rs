//! Coordinated multi-cell transmission: cell `j` sends one common and one
//! private stream vector; every user decodes all cells' common streams in its
//! own order, then its private stream. User `k` is served by cell `k`.

use serde::Serialize;

use crate::channel::{ChannelSet, MultiCellChannelSet};
use crate::error::{dim, param, Result, RsmaError};
use crate::linalg::{add_gram, fro2, identity, logdet_rate, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct CoordConfig {
    pub common: Vec<CMat>,
    pub private: Vec<CMat>,
    pub budgets: Vec<f64>,
    /// `orders[k]`: cells whose common streams user `k` decodes, in order.
    /// `None` uses descending received common power.
    pub orders: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordRates {
    /// `decode[k][j]`: rate at which user `k` decodes cell `j`'s common stream.
    pub decode: Vec<Vec<f64>>,
    /// Common rate of each cell (min over all users).
    pub common_rate: Vec<f64>,
    pub private_rate: Vec<f64>,
    pub user_total: Vec<f64>,
    pub orders: Vec<Vec<usize>>,
}

impl CoordConfig {
    fn validate(&self, ch: &MultiCellChannelSet) -> Result<()> {
        let k = ch.cells;
        if self.common.len() != k || self.private.len() != k || self.budgets.len() != k {
            return dim(format!("need {k} common precoders, private precoders and budgets"));
        }
        for j in 0..k {
            for p in [&self.common[j], &self.private[j]] {
                if p.nrows() != ch.tx || p.ncols() > ch.tx.min(ch.rx) {
                    return dim(format!("cell {j}: precoder shape {}x{}", p.nrows(), p.ncols()));
                }
            }
            if fro2(&self.common[j]) + fro2(&self.private[j]) > self.budgets[j] + 1e-9 {
                return param(format!("cell {j} exceeds its power budget"));
            }
        }
        if let Some(orders) = &self.orders {
            if orders.len() != k {
                return Err(RsmaError::InvalidOrder("one decoding order per user".into()));
            }
            for o in orders {
                let mut s = o.clone();
                s.sort_unstable();
                if s != (0..k).collect::<Vec<_>>() {
                    return Err(RsmaError::InvalidOrder("each order must be a permutation of the cells".into()));
                }
            }
        }
        Ok(())
    }
}

pub fn rate_coordinated(ch: &MultiCellChannelSet, cfg: &CoordConfig) -> Result<CoordRates> {
    cfg.validate(ch)?;
    let k = ch.cells;
    let mut decode = vec![vec![0.0; k]; k];
    let mut private_rate = vec![0.0; k];
    let mut orders = Vec::with_capacity(k);
    for u in 0..k {
        let gc: Vec<CMat> = (0..k).map(|j| ch.link(u, j).adjoint() * &cfg.common[j]).collect();
        let gp: Vec<CMat> = (0..k).map(|j| ch.link(u, j).adjoint() * &cfg.private[j]).collect();
        let order = match &cfg.orders {
            Some(o) => o[u].clone(),
            None => {
                let mut o: Vec<usize> = (0..k).collect();
                o.sort_by(|&a, &b| fro2(&gc[b]).total_cmp(&fro2(&gc[a])).then(a.cmp(&b)));
                o
            }
        };
        let mut privates = identity(ch.rx);
        for g in &gp {
            add_gram(&mut privates, g);
        }
        for (pos, &j) in order.iter().enumerate() {
            let mut r = privates.clone();
            for &t in &order[pos + 1..] {
                add_gram(&mut r, &gc[t]);
            }
            decode[u][j] = logdet_rate(&gc[j], &r)?;
        }
        let mut r = identity(ch.rx);
        for (j, g) in gp.iter().enumerate() {
            if j != u {
                add_gram(&mut r, g);
            }
        }
        private_rate[u] = logdet_rate(&gp[u], &r)?;
        orders.push(order);
    }
    let common_rate: Vec<f64> = (0..k).map(|j| (0..k).map(|u| decode[u][j]).fold(f64::INFINITY, f64::min)).collect();
    let user_total = (0..k).map(|u| common_rate[u] + private_rate[u]).collect();
    Ok(CoordRates { decode, common_rate, private_rate, user_total, orders })
}

/// Cooperative view: user `k` sees the stacked `(K M) x N` channel
/// `[H_{k1}; ...; H_{kK}]`, to be used with any downlink layout.
pub fn stack_cooperative(ch: &MultiCellChannelSet) -> Result<ChannelSet> {
    let users = (0..ch.cells)
        .map(|u| {
            let mut m = CMat::zeros(ch.cells * ch.tx, ch.rx);
            for j in 0..ch.cells {
                m.view_mut((j * ch.tx, 0), (ch.tx, ch.rx)).copy_from(ch.link(u, j));
            }
            m
        })
        .collect();
    ChannelSet::from_true(ch.cells * ch.tx, users, &vec![1.0; ch.cells])
}

/// Per-cell power of stacked precoders (row block `j` belongs to cell `j`).
pub fn per_cell_power(precoders: &[CMat], cells: usize, tx: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; cells];
    for p in precoders {
        if p.nrows() != cells * tx {
            return dim("stacked precoder rows must be cells * tx");
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += p.rows(j * tx, tx).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{cn_matrix, gen_multicell_rayleigh, gen_rayleigh, rng_from};
    use crate::linalg::c;
    use crate::optimize::Metric;
    use crate::schemes::{build_layout, evaluate, LayoutOptions, PrecoderSet, SchemeKind};

    fn precoders(seed: u64, k: usize, m: usize, p: f64) -> CoordConfig {
        let mut rng = rng_from(seed);
        let mut common = Vec::new();
        let mut private = Vec::new();
        for _ in 0..k {
            let mut a = cn_matrix(&mut rng, m, 1, 1.0);
            let mut b = cn_matrix(&mut rng, m, 1, 1.0);
            let s = (p / (fro2(&a) + fro2(&b))).sqrt();
            a *= c(s, 0.0);
            b *= c(s, 0.0);
            common.push(a);
            private.push(b);
        }
        CoordConfig { common, private, budgets: vec![p; k], orders: None }
    }

    #[test]
    fn single_cell_equals_one_layer_rs() {
        let ch1 = gen_rayleigh(3, 3, &[2], &[1.0]).unwrap();
        let mc = MultiCellChannelSet::new(vec![vec![ch1.users[0].true_channel.clone()]]).unwrap();
        let cfg = precoders(4, 1, 3, 10.0);
        let r = rate_coordinated(&mc, &cfg).unwrap();
        let l = build_layout(SchemeKind::OneLayerRS, 1, &[1], &LayoutOptions::default()).unwrap();
        let pre = PrecoderSet::new(vec![cfg.common[0].clone(), cfg.private[0].clone()], 10.0).unwrap();
        let rs = evaluate(&ch1, &l, &pre, &Metric::sum_rate(1)).unwrap();
        assert!((r.user_total[0] - rs.user_total[0]).abs() < 1e-13);
    }

    #[test]
    fn decoupled_cells_give_point_to_point_rates() {
        let mc = gen_multicell_rayleigh(5, 2, 2, 1, 1.0, 0.0).unwrap();
        let mut cfg = precoders(6, 2, 2, 4.0);
        for p in &mut cfg.common {
            p.fill(c(0.0, 0.0));
        }
        let r = rate_coordinated(&mc, &cfg).unwrap();
        for u in 0..2 {
            let g = (mc.link(u, u).adjoint() * &cfg.private[u])[(0, 0)].norm_sqr();
            assert!((r.user_total[u] - (1.0 + g).log2()).abs() < 1e-13);
        }
    }

    #[test]
    fn hand_chain_two_cells() {
        let mc = gen_multicell_rayleigh(7, 2, 2, 1, 1.0, 0.5).unwrap();
        let cfg = CoordConfig { orders: Some(vec![vec![1, 0], vec![0, 1]]), ..precoders(8, 2, 2, 10.0) };
        let r = rate_coordinated(&mc, &cfg).unwrap();
        let g = |u: usize, j: usize, p: &CMat| (mc.link(u, j).adjoint() * p)[(0, 0)].norm_sqr();
        let rate = |s: f64, i: f64| (1.0 + s / (1.0 + i)).log2();
        // user 0 decodes cell 1's common first, then cell 0's
        let p0 = g(0, 0, &cfg.private[0]) + g(0, 1, &cfg.private[1]);
        assert!((r.decode[0][1] - rate(g(0, 1, &cfg.common[1]), p0 + g(0, 0, &cfg.common[0]))).abs() < 1e-12);
        assert!((r.decode[0][0] - rate(g(0, 0, &cfg.common[0]), p0)).abs() < 1e-12);
        let p1 = g(1, 0, &cfg.private[0]) + g(1, 1, &cfg.private[1]);
        assert!((r.decode[1][0] - rate(g(1, 0, &cfg.common[0]), p1 + g(1, 1, &cfg.common[1]))).abs() < 1e-12);
        assert!((r.private_rate[1] - rate(g(1, 1, &cfg.private[1]), g(1, 0, &cfg.private[0]))).abs() < 1e-12);
        for j in 0..2 {
            assert_eq!(r.common_rate[j], r.decode[0][j].min(r.decode[1][j]));
        }
        assert_eq!(r.user_total[0], r.common_rate[0] + r.private_rate[0]);
    }

    #[test]
    fn default_order_by_received_power() {
        let mc = gen_multicell_rayleigh(9, 3, 2, 2, 1.0, 0.3).unwrap();
        let cfg = precoders(10, 3, 2, 5.0);
        let r = rate_coordinated(&mc, &cfg).unwrap();
        for u in 0..3 {
            let p: Vec<f64> = r.orders[u].iter().map(|&j| fro2(&(mc.link(u, j).adjoint() * &cfg.common[j]))).collect();
            assert!(p.windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(r.user_total.iter().all(|x| x.is_finite() && *x >= 0.0));
    }

    #[test]
    fn errors_and_cooperation() {
        let mc = gen_multicell_rayleigh(11, 2, 2, 1, 1.0, 0.5).unwrap();
        let bad = CoordConfig { orders: Some(vec![vec![0, 0], vec![0, 1]]), ..precoders(12, 2, 2, 1.0) };
        assert!(matches!(rate_coordinated(&mc, &bad), Err(RsmaError::InvalidOrder(_))));
        let st = stack_cooperative(&mc).unwrap();
        assert_eq!(st.tx, 4);
        assert_eq!(st.users[1].true_channel.rows(2, 2), mc.link(1, 1).clone());
        let p = CMat::from_column_slice(4, 1, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)]);
        assert_eq!(per_cell_power(&[p], 2, 2).unwrap(), vec![1.0, 4.0]);
    }
}
