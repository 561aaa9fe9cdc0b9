//! Conditioned geodesics by plain rejection, checked against importance
//! sampling.

use uptail::ldp::{importance_estimate, rejection_conditional_samples, SamplingPlan};

fn main() -> uptail::Result<()> {
    let (n, delta) = (6, 1.0);
    let r = rejection_conditional_samples(n, delta, 2_000_000, 4)?;
    println!("accepted {} of {} (rate {:.3e}, CI {:.3e}..{:.3e})", r.accepted, r.trials, r.acceptance, r.ci.0, r.ci.1);
    let d: Vec<usize> = r.records.iter().take(20).map(|g| g.max_fluct).collect();
    println!("first D_max values {d:?}");
    let e = importance_estimate(n, delta, &SamplingPlan::path_mixture(0.5)?, 100_000, 4)?;
    println!("importance sampling: p = {:.3e} (log se {:.4})", e.p(), e.std_err);
    if let Err(err) = rejection_conditional_samples(n, 100.0, 1000, 4) {
        println!("delta = 100: {err}");
    }
    Ok(())
}
