//! log P(T'_n >= (4+delta)n) <= -n I(delta) at every n.

use uptail::ldp::subadditive_bound_check;

fn main() -> uptail::Result<()> {
    for n in [5, 10, 20] {
        let r = subadditive_bound_check(n, 1.0, 20_000, 3)?;
        println!(
            "n = {n:2}: log p = {:8.4} ± {:.4}, bound {:8.4}, gap {:.4} -> {}",
            r.estimate.log_p, r.estimate.std_err, r.bound, r.gap, r.passed
        );
    }
    Ok(())
}
