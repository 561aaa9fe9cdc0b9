//! Stochastic ordering of the top eigenvalue: (M, N) dominates (M+1, N-1).

use uptail::rmt::dominance_check;

fn main() -> uptail::Result<()> {
    for (m, n) in [(2, 2), (6, 4)] {
        let r = dominance_check(m, n, 20_000, 5)?;
        println!(
            "{:?} over {:?}: sup(F_upper - F_lower) = {:.4}, band {:.4} -> {}",
            r.upper, r.lower, r.excess, r.band, r.passed
        );
        if let Some(e) = r.exact {
            println!("  exact Gamma comparison: excess {:.4}, band {:.4} -> {}", e.excess, e.band, e.passed);
        }
    }
    Ok(())
}
