use super::*;
use crate::channel::{gen_rayleigh, geometry_2user};
use crate::schemes::{evaluate, LayoutSpec};
use crate::channel::{cn_matrix, rng_from};

fn report(totals: Vec<f64>) -> RateReport {
    RateReport { streams: Vec::new(), private_rate: totals.clone(), user_total: totals }
}

fn unit_power(m: usize, p: f64) -> PrecoderSet {
    let mut a = crate::linalg::CMat::zeros(m, 1);
    a[(0, 0)] = c(p.sqrt(), 0.0);
    PrecoderSet::new(vec![a], p).unwrap()
}

fn rs(k: usize) -> StreamLayout {
    build_layout(SchemeKind::OneLayerRS, k, &vec![1; k], &LayoutOptions::default()).unwrap()
}

#[test]
fn metric_examples() {
    let pre = unit_power(2, 1.0);
    assert_eq!(evaluate_metric(&report(vec![2.0, 2.0]), &pre, &Metric::sum_rate(2)), 4.0);
    assert_eq!(evaluate_metric(&report(vec![0.5, 3.0]), &pre, &Metric::mmf()), 0.5);
    let p_dyn = dbm_to_watt(27.0);
    assert!((p_dyn - 0.501187233627).abs() < 1e-11);
    let ee = evaluate_metric(&report(vec![1.5, 2.5]), &pre, &Metric::ee_default());
    let hand = 4.0 / (1.0 / 0.35 + 2.0 * p_dyn + 0.001);
    assert!((ee - hand).abs() < 1e-12);
    assert!((ee - 1.036).abs() < 1e-3);
    let q = Metric::sum_rate(2).with_qos(vec![1.0, 3.5]);
    assert_eq!(evaluate_metric(&report(vec![2.0, 3.0]), &pre, &q), f64::NEG_INFINITY);
    assert!(Metric::wsr(vec![0.0, 0.0]).validate(2).is_err());
    assert!(Metric::ee(1.5, 1.0, 1.0).validate(2).is_err());
}

#[test]
fn gradient_matches_finite_differences() {
    let metrics = [
        Metric::wsr(vec![1.0, 2.0, 0.5]),
        Metric::mmf(),
        Metric::ee_default(),
        Metric::sum_rate(3).with_qos(vec![3.0, 3.0, 3.0]),
    ];
    for seed in 0..8u64 {
        let ch = gen_rayleigh(seed, 3, &[1, 2, 1], &[1.0, 0.7, 0.4]).unwrap();
        let opts = LayoutOptions { groups: Some(vec![vec![0, 1], vec![2]]), ..Default::default() };
        let layouts = [rs(3), build_layout(SchemeKind::HRS, 3, &[1; 3], &opts).unwrap(), build_layout(SchemeKind::GRS, 3, &[1; 3], &LayoutOptions::default()).unwrap()];
        for (i, l) in layouts.iter().enumerate() {
            let grid = optimize_powers_fixed_directions(&ch, l, &Metric::mmf(), 10.0, 5).unwrap();
            let mut pre = grid.precoders.clone();
            // Perturb so no precoder is exactly zero.
            let mut rng = rng_from(seed * 7 + i as u64);
            for p in &mut pre.precoders {
                *p += cn_matrix(&mut rng, p.nrows(), p.ncols(), 0.1);
            }
            let m = &metrics[(seed as usize + i) % metrics.len()];
            let g = gradient_check(&ch, l, m, &pre, 0.3, 5.0, 1e-5).unwrap();
            assert!(g.checked > 0);
            assert!(g.max_rel_err < 1e-4, "seed {seed} layout {i} metric {}: {}", m.name(), g.max_rel_err);
        }
    }
}

#[test]
fn single_user_refine_reaches_matched_beamforming() {
    let ch = gen_rayleigh(4, 4, &[1], &[1.0]).unwrap();
    let l = build_layout(SchemeKind::SDMA, 1, &[1], &LayoutOptions::default()).unwrap();
    let mut rng = rng_from(9);
    let mut p = cn_matrix(&mut rng, 4, 1, 1.0);
    p *= c((1.0 / fro2(&p)).sqrt() * 0.5, 0.0);
    let init = PrecoderSet::new(vec![p], 10.0).unwrap();
    let r = optimize_precoders_refine(&ch, &l, &Metric::sum_rate(1), &init, &RefineConfig::default()).unwrap();
    let opt = (1.0 + 10.0 * fro2(&ch.users[0].true_channel)).log2();
    assert!((r.objective - opt).abs() < 1e-3, "{} vs {opt}", r.objective);
}

#[test]
fn refinement_never_below_grid_and_trace_monotone() {
    for seed in 0..6u64 {
        let ch = gen_rayleigh(seed, 3, &[1; 3], &[1.0, 0.5, 0.2]).unwrap();
        for metric in [Metric::sum_rate(3), Metric::mmf(), Metric::ee_default()] {
            let l = rs(3);
            let g = optimize_powers_fixed_directions(&ch, &l, &metric, 20.0, 21).unwrap();
            let r = optimize_precoders_refine(&ch, &l, &metric, &g.precoders, &RefineConfig { iters: 120, ..Default::default() }).unwrap();
            assert!(r.objective >= g.objective);
            assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
            assert!((r.objective - evaluate_metric(&r.report, &r.precoders, &metric)).abs() < 1e-9);
            assert!(r.precoders.total_power() <= 20.0 + 1e-9);
        }
    }
}

#[test]
fn grid_argmax_invariant_to_weight_scaling() {
    for seed in 0..5u64 {
        let ch = gen_rayleigh(seed, 2, &[1, 1], &[1.0, 0.3]).unwrap();
        let base = optimize_powers_fixed_directions(&ch, &rs(2), &Metric::wsr(vec![0.7, 1.3]), 10.0, 51).unwrap();
        for s in [0.25, 2.0, 8.0] {
            let scaled = optimize_powers_fixed_directions(&ch, &rs(2), &Metric::wsr(vec![0.7 * s, 1.3 * s]), 10.0, 51).unwrap();
            assert_eq!(base.precoders, scaled.precoders);
        }
    }
}

#[test]
fn qos_feasible_results_meet_thresholds() {
    let ch = gen_rayleigh(12, 3, &[1, 1], &[1.0, 0.3]).unwrap();
    let metric = Metric::sum_rate(2).with_qos(vec![1.0, 1.0]);
    let r = optimize(&ch, &rs(2), &metric, 20.0, &OptimizerConfig { iters: 100, ..Default::default() }).unwrap();
    assert!(r.feasible);
    assert!(r.report.user_total.iter().all(|&t| t >= 1.0 - 1e-6));
}

#[test]
fn siso_rs_turns_off_weak_private() {
    for seed in 0..4u64 {
        let ch = gen_rayleigh(seed, 1, &[1, 1], &[1.0, 0.1]).unwrap();
        let r = optimize(&ch, &rs(2), &Metric::sum_rate(2), 100.0, &OptimizerConfig { iters: 100, ..Default::default() }).unwrap();
        let g: Vec<f64> = ch.users.iter().map(|u| fro2(&u.true_channel)).collect();
        let weak = if g[0] < g[1] { 0 } else { 1 };
        let lay = rs(2);
        assert!(r.precoders.stream_power(lay.private_of(weak).unwrap()) < 1e-3 * 100.0);
        let noma_best = (1.0 + 100.0 * g[0].max(g[1])).log2();
        assert!(r.objective >= 0.97 * noma_best);
    }
}

#[test]
fn aligned_disparate_users_match_noma() {
    let ch = geometry_2user(-20.0, 0.0, 2).unwrap();
    let r = optimize_powers_fixed_directions(&ch, &rs(2), &Metric::sum_rate(2), 100.0, 101).unwrap();
    let nl = LayoutSpec::new(SchemeKind::NOMA, vec![1, 1]).build(&ch).unwrap();
    let n = optimize_powers_fixed_directions(&ch, &nl, &Metric::sum_rate(2), 100.0, 101).unwrap();
    assert!(r.objective >= n.objective);
    assert!((r.objective - n.objective).abs() <= 0.01 * n.objective);
}

#[test]
fn ergodic_contracts() {
    let spec = EnsembleSpec { tx: 2, rx: vec![1, 1], variances: vec![1.0, 1.0], csit_alpha: None, power: 10.0 };
    let lay = LayoutSpec::new(SchemeKind::OneLayerRS, vec![1, 1]);
    let metric = Metric::sum_rate(2);
    let cfg = OptimizerConfig::grid_only(21);
    let one = ergodic_average(&spec, &lay, &metric, &cfg, 1, 5).unwrap();
    let ch = spec.sample(5, 0).unwrap().channels;
    let single = optimize(&ch, &lay.build(&ch).unwrap(), &metric, 10.0, &cfg).unwrap();
    assert_eq!(one.mean_objective, single.objective);
    assert_eq!(one.stderr_objective, 0.0);

    let fixed = vec![ch.clone(); 5];
    let f = ergodic_average_over(&fixed, &lay, &metric, 10.0, &cfg).unwrap();
    assert_eq!(f.stderr_objective, 0.0);
    assert!((f.mean_objective - single.objective).abs() < 1e-12);

    let a = ergodic_average(&spec, &lay, &metric, &cfg, 100, 1).unwrap();
    let b = ergodic_average(&spec, &lay, &metric, &cfg, 100, 2).unwrap();
    let se = (a.stderr_objective.powi(2) + b.stderr_objective.powi(2)).sqrt();
    assert!((a.mean_objective - b.mean_objective).abs() <= 3.0 * se);
}

#[test]
fn imperfect_csit_sample_rates() {
    let spec = EnsembleSpec { tx: 2, rx: vec![1, 1], variances: vec![1.0, 1.0], csit_alpha: Some(-0.6), power: 100.0 };
    let lay = LayoutSpec::new(SchemeKind::OneLayerRS, vec![1, 1]);
    let r = ergodic_average(&spec, &lay, &Metric::sum_rate(2), &OptimizerConfig::grid_only(21), 10, 3).unwrap();
    assert!(r.mean_objective.is_finite() && r.mean_objective > 0.0);
}

#[test]
fn region_rs_contains_sdma() {
    let ch = gen_rayleigh(77, 2, &[1, 1], &[1.0, 1.0]).unwrap();
    let cfg = OptimizerConfig { iters: 60, ..Default::default() };
    let rsr = rate_region_boundary(std::slice::from_ref(&ch), &LayoutSpec::new(SchemeKind::OneLayerRS, vec![1, 1]), 10.0, &cfg, 7).unwrap();
    let sd = rate_region_boundary(std::slice::from_ref(&ch), &LayoutSpec::new(SchemeKind::SDMA, vec![1, 1]), 10.0, &cfg, 7).unwrap();
    for (a, b) in rsr.points.iter().zip(&sd.points) {
        assert!(a.objective >= b.objective);
    }
    let end = rsr.points.last().unwrap();
    let single = (1.0 + 10.0 * fro2(&ch.users[0].true_channel)).log2();
    assert!(end.r1 <= single + 1e-9 && end.r1 >= single - 0.05, "{} vs {single}", end.r1);
    assert!(!rsr.frontier.is_empty());
    assert_eq!(pareto_filter(&[(1.0, 1.0), (0.5, 0.5), (2.0, 0.0)]), vec![(1.0, 1.0), (2.0, 0.0)]);
}

#[test]
fn evaluate_on_true_uses_design_precoders() {
    let ch = gen_rayleigh(3, 2, &[1, 1], &[1.0, 1.0]).unwrap();
    let r = optimize(&ch, &rs(2), &Metric::mmf(), 10.0, &OptimizerConfig::grid_only(11)).unwrap();
    let again = evaluate(&ch, &rs(2), &r.precoders, &Metric::mmf()).unwrap();
    assert_eq!(again, r.report);
}
