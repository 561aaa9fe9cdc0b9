//! Rare-event samplers against each other and against exact values.

use uptail::ldp::{importance_estimate, rejection_conditional_samples, SamplingPlan, TiltPlan};
use uptail::lpp::sampled_last_passage;

fn within(est: f64, se: f64, truth: f64, se_truth: f64) -> bool {
    (est - truth).abs() <= 3.0 * se.hypot(se_truth)
}

#[test]
fn single_site_tail_is_exact() {
    let delta = 0.5;
    let truth = -(4.0 + delta);
    for plan in [SamplingPlan::path_mixture(0.5).unwrap(), SamplingPlan::Tilt(TiltPlan::full(0.7).unwrap())] {
        let e = importance_estimate(1, delta, &plan, 20_000, 3).unwrap();
        assert!(within(e.log_p, e.std_err, truth, 0.0), "{plan:?}: {} ± {}", e.log_p, e.std_err);
    }
    let r = rejection_conditional_samples(1, delta, 2_000_000, 3).unwrap();
    let p = truth.exp();
    let sd = (p * (1.0 - p) / r.trials as f64).sqrt();
    assert!((r.acceptance - p).abs() <= 3.0 * sd, "{} vs {p}", r.acceptance);
}

#[test]
fn importance_matches_plain_monte_carlo_at_n2() {
    // threshold 10 for T_2
    let trials = 1_000_000u64;
    let hits = (0..trials).filter(|&i| sampled_last_passage(2, 2, 1_000_000 + i).value >= 10.0).count();
    let p = hits as f64 / trials as f64;
    let se_mc = ((1.0 - p) / (p * trials as f64)).sqrt();
    let e = importance_estimate(2, 1.0, &SamplingPlan::path_mixture(0.5).unwrap(), 100_000, 4).unwrap();
    assert!(within(e.log_p, e.std_err, p.ln(), se_mc), "IS {} ± {} vs MC {} ± {se_mc}", e.log_p, e.std_err, p.ln());
}

#[test]
fn rejection_and_importance_agree() {
    for (n, delta) in [(4, 1.0), (6, 0.5)] {
        let r = rejection_conditional_samples(n, delta, 1_000_000, 5).unwrap();
        let se_rej = ((1.0 - r.acceptance) / (r.acceptance * r.trials as f64)).sqrt();
        let e = importance_estimate(n, delta, &SamplingPlan::path_mixture(0.5).unwrap(), 50_000, 6).unwrap();
        assert!(!e.degenerate);
        assert!(
            within(e.log_p, e.std_err, r.acceptance.ln(), se_rej),
            "n={n}: IS {} ± {} vs rejection {}",
            e.log_p,
            e.std_err,
            r.acceptance.ln()
        );
    }
}
