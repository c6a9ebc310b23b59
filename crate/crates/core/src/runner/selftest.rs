use serde::Serialize;

use crate::channel::{cn_matrix, gen_rayleigh, rng_from, IcChannel};
use crate::error::Result;
use crate::ic2::{baseline_rates, optimize_t};
use crate::linalg::{c, fro2, CMat};
use crate::optimize::{
    dbm_to_watt, evaluate_metric, gradient_check, optimize_powers_fixed_directions, optimize_precoders_refine, Metric,
    RefineConfig,
};
use crate::schemes::{build_layout, evaluate, LayoutOptions, PrecoderSet, RateReport, SchemeKind, StreamLayout};
use crate::uplink::{mac_region_2user, siso_rates, SisoOrder};

use super::{render, resolve, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_precoders(seed: u64, layout: &StreamLayout, m: usize, power: f64) -> Result<PrecoderSet> {
    let mut rng = rng_from(seed);
    let mut ps: Vec<CMat> = layout.streams.iter().map(|s| cn_matrix(&mut rng, m, s.dim, 1.0)).collect();
    let tot: f64 = ps.iter().map(fro2).sum();
    for p in &mut ps {
        *p *= c((power / tot).sqrt(), 0.0);
    }
    PrecoderSet::new(ps, power)
}

fn ic2_dominance() -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for i in 0..50 {
        let ratio = 10f64.powf(-1.0 + 3.0 * i as f64 / 49.0);
        let ch = IcChannel::from_gains(1.0, ratio, 1000.0)?;
        let (_, rs) = optimize_t(&ch, 1001)?;
        let b = baseline_rates(&ch);
        worst = worst.min(rs - b.tin.max(b.decode).max(b.orthogonal));
    }
    Ok((worst >= -1e-9, format!("min margin {worst:.3e}")))
}

fn specializations() -> Result<(bool, String)> {
    let mut ok = true;
    for seed in 0..10u64 {
        let k = 3;
        let ch = gen_rayleigh(seed, 3, &[1; 3], &[1.0; 3])?;
        let l1 = build_layout(SchemeKind::OneLayerRS, k, &[1; 3], &LayoutOptions::default())?;
        let mut active = vec![(0..k).collect::<Vec<_>>()];
        active.extend((0..k).map(|u| vec![u]));
        let lg = build_layout(
            SchemeKind::GRS,
            k,
            &[1; 3],
            &LayoutOptions { grs_active_subsets: Some(active), ..Default::default() },
        )?;
        let mut pre = random_precoders(seed, &l1, 3, 10.0)?;
        let m = Metric::sum_rate(k);
        ok &= evaluate(&ch, &l1, &pre, &m)? == evaluate(&ch, &lg, &pre, &m)?;
        pre.precoders[0] = CMat::zeros(3, 1);
        let ls = build_layout(SchemeKind::SDMA, k, &[1; 3], &LayoutOptions::default())?;
        let sd = PrecoderSet::new(pre.precoders[1..].to_vec(), 10.0)?;
        ok &= evaluate(&ch, &l1, &pre, &m)?.user_total == evaluate(&ch, &ls, &sd, &m)?.user_total;
    }
    Ok((ok, "GRS{full, singletons} = 1-layer RS; zero common = SDMA".into()))
}

fn uplink_conservation() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (p1, p2, g1, g2) in [(10.0, 10.0, 1.0, 0.5), (100.0, 3.0, 0.2, 2.0), (1.0, 50.0, 4.0, 0.01)] {
        let r = mac_region_2user(p1, p2, g1, g2)?;
        for i in 0..=100 {
            let (a, b) = siso_rates(p1, p2, g1, g2, i as f64 / 100.0, SisoOrder::Split);
            worst = worst.max((a + b - r.r_sum).abs());
        }
    }
    Ok((worst < 1e-10, format!("max sum-rate deviation {worst:.3e}")))
}

fn gradients() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..4u64 {
        let ch = gen_rayleigh(seed, 3, &[1, 1, 1], &[1.0, 0.6, 0.3])?;
        let l = build_layout(SchemeKind::OneLayerRS, 3, &[1; 3], &LayoutOptions::default())?;
        let pre = random_precoders(seed + 100, &l, 3, 10.0)?;
        for m in [Metric::sum_rate(3), Metric::mmf(), Metric::ee_default()] {
            worst = worst.max(gradient_check(&ch, &l, &m, &pre, 0.3, 10.0, 1e-5)?.max_rel_err);
        }
    }
    Ok((worst < 1e-4, format!("max relative error {worst:.3e}")))
}

fn refine_dominates_grid() -> Result<(bool, String)> {
    let mut ok = true;
    for seed in 0..3u64 {
        let ch = gen_rayleigh(seed, 2, &[1, 1], &[1.0, 0.4])?;
        let l = build_layout(SchemeKind::OneLayerRS, 2, &[1, 1], &LayoutOptions::default())?;
        let m = Metric::mmf();
        let g = optimize_powers_fixed_directions(&ch, &l, &m, 10.0, 21)?;
        let r = optimize_precoders_refine(&ch, &l, &m, &g.precoders, &RefineConfig { iters: 60, ..Default::default() })?;
        ok &= r.objective >= g.objective;
    }
    Ok((ok, "refined objective >= grid objective".into()))
}

fn ee_arithmetic() -> Result<(bool, String)> {
    let mut a = CMat::zeros(2, 1);
    a[(0, 0)] = c(1.0, 0.0);
    let pre = PrecoderSet::new(vec![a], 1.0)?;
    let report = RateReport { streams: Vec::new(), private_rate: vec![2.0, 2.0], user_total: vec![2.0, 2.0] };
    let ee = evaluate_metric(&report, &pre, &Metric::ee_default());
    let hand = 4.0 / (1.0 / 0.35 + 2.0 * dbm_to_watt(27.0) + 0.001);
    Ok(((ee - hand).abs() < 1e-9, format!("EE {ee:.9}")))
}

fn determinism() -> Result<(bool, String)> {
    let cfg = RunConfig::parse("kind = \"ic2_sweep\"\n[params]\npoints = 20\n").map_err(|e| {
        crate::error::RsmaError::Config(e.to_string())
    })?;
    let once = || -> std::result::Result<_, super::RunError> { render(&resolve(&cfg, None)?, Some(2)) };
    match (once(), once()) {
        (Ok(a), Ok(b)) => Ok((a == b, "two renders of one config are identical".into())),
        (Err(e), _) | (_, Err(e)) => Ok((false, e.to_string())),
    }
}

/// Quick invariant suite behind `rsma selftest`.
pub fn selftest() -> Vec<SelfCheck> {
    let checks: [(&'static str, fn() -> Result<(bool, String)>); 7] = [
        ("ic2_rs_dominates_baselines", ic2_dominance),
        ("scheme_specializations", specializations),
        ("uplink_sum_rate_conservation", uplink_conservation),
        ("analytic_gradient", gradients),
        ("refine_dominates_grid", refine_dominates_grid),
        ("ee_arithmetic", ee_arithmetic),
        ("csv_determinism", determinism),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => SelfCheck { name, passed, detail },
            Err(e) => SelfCheck { name, passed: false, detail: e.to_string() },
        })
        .collect()
}
