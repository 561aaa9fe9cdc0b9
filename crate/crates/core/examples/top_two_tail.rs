//! Given lambda_1 > N(4+delta), how often is lambda_2 > N(4+delta/2)?

use uptail::rmt::top_two_tail_experiment;

fn main() -> uptail::Result<()> {
    for n in [10, 20] {
        let r = top_two_tail_experiment(n, 0.25, 400_000, 9)?;
        println!(
            "N = {n}: pilot acceptance {:.2e}, accepted {}, both {} -> fraction {:.4} (CI {:.4}..{:.4})",
            r.pilot_acceptance, r.accepted, r.both, r.fraction, r.ci.0, r.ci.1
        );
    }
    match top_two_tail_experiment(10, 2.0, 100_000, 9) {
        Err(e) => println!("delta = 2: {e}"),
        Ok(_) => println!("delta = 2 unexpectedly feasible"),
    }
    Ok(())
}
