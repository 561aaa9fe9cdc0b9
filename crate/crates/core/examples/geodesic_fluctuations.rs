//! Transversal fluctuation D_n of the point-to-point geodesic, with the
//! unconditioned exponent fit over a size grid.

use uptail::ldp::unconditioned_exponent;
use uptail::lpp::sampled_geodesic;

fn main() -> uptail::Result<()> {
    let g = sampled_geodesic(64, 64, 7)?;
    println!("n=64: T = {:.3}, D_max = {}, profile head {:?}", g.weight, g.max_fluct, &g.profile[..12]);

    let fit = unconditioned_exponent(&[32, 64, 128], 400, 1000, 7)?;
    for (n, s) in fit.ns.iter().zip(&fit.summaries) {
        println!("n={n:4}  median D = {:6.2}  (95% CI {:.2}..{:.2})", s.median, s.median_ci95.0, s.median_ci95.1);
    }
    println!("log-log slope {:.3}, bootstrap CI {:.3}..{:.3}", fit.fit.slope, fit.fit.ci95.0, fit.fit.ci95.1);
    Ok(())
}
