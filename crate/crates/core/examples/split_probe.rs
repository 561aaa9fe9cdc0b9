//! Product bound for two independent pieces whose excesses add up.

use uptail::ldp::two_scale_split_probe;

fn main() -> uptail::Result<()> {
    // 10 * 1.5 + 10 * 0.5 = 20 * 1.0
    for (d1, d2) in [(1.0, 1.0), (1.5, 0.5), (1.8, 0.4)] {
        let r = two_scale_split_probe(20, 10, 1.0, d1, d2, 10_000, 6)?;
        println!(
            "delta1 = {d1}, delta2 = {d2}: log P1 + log P2 = {:.4} ± {:.4}, bound {:.4} (penalty {:.4}) -> {}",
            r.log_product, r.sigma, r.bound, r.penalty, r.passed
        );
    }
    if let Err(e) = two_scale_split_probe(20, 10, 1.0, 0.5, 0.5, 10_000, 6) {
        println!("{e}");
    }
    Ok(())
}
