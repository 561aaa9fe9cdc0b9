//! Estimating P(T_n >= (4+delta)n) with different proposals.

use uptail::ldp::{choose_theta, default_theta_grid, importance_estimate, LdEvent, SamplingPlan, Statistic, TiltPlan};
use uptail::rates::rate_i;

fn main() -> uptail::Result<()> {
    let (n, delta, trials) = (12, 1.0, 40_000);
    let ev = LdEvent::upper(n, delta)?;
    let choice = choose_theta(Statistic::Full, n, n, ev.threshold(), &default_theta_grid(), 4000, 1)?;
    println!("pilot ESS by theta: {:?}", choice.grid.iter().map(|(t, e)| format!("{t}:{e:.0}")).collect::<Vec<_>>());
    let plans = [
        SamplingPlan::Rejection,
        SamplingPlan::Tilt(TiltPlan::full(0.1)?),
        SamplingPlan::Tilt(TiltPlan::new(0.2, 1.0)?),
        SamplingPlan::path_mixture(choice.theta)?,
    ];
    for plan in plans {
        let e = importance_estimate(n, delta, &plan, trials, 2)?;
        println!(
            "{plan:?}: log p = {:.4} ± {:.4}, ESS {:.0}, hits {}{}",
            e.log_p,
            e.std_err,
            e.ess,
            e.hits,
            if e.degenerate { " (degenerate)" } else { "" }
        );
    }
    println!("-n I(delta) = {:.4}", -(n as f64) * rate_i(delta)?.value);
    Ok(())
}
