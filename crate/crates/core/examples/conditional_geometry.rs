//! Transversal fluctuations with and without the upper-tail conditioning,
//! on a small grid.

use uptail::ldp::{conditional_tf_experiment_with, TfOptions};

fn main() -> uptail::Result<()> {
    let opts = TfOptions {
        unconditioned_trials: 1000,
        rejection_budget: 2_000_000,
        rejection_target: 500,
        importance_trials: 20_000,
        bootstrap: 1000,
    };
    let r = conditional_tf_experiment_with(&[8, 12, 16], 1.0, &opts, 21)?;
    for p in &r.points {
        let c = p.conditioned.as_ref();
        println!(
            "n = {:2}: unconditioned median {:.2}, conditioned median {} via {:?}",
            p.n,
            p.unconditioned.median,
            c.map_or("-".into(), |c| format!("{:.2} (ESS {:.0})", c.median, c.sample.ess)),
            p.method
        );
    }
    println!("unconditioned slope {:.3}", r.unconditioned_fit.slope);
    if let Some(f) = r.conditioned_fit {
        println!("conditioned slope {:.3} (CI {:.3}..{:.3})", f.slope, f.ci95.0, f.ci95.1);
    }
    for c in &r.comparisons {
        println!("n = {}: difference {:.2}, 1st percentile {:.2}", c.n, c.difference, c.lower99);
    }
    Ok(())
}
