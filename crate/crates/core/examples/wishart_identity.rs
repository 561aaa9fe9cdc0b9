//! T_{(1,1),(M,N)} against the top eigenvalue of an M x N complex Wishart
//! matrix, by two-sample KS.

use uptail::rmt::lpp_wishart_identity_test;

fn main() -> uptail::Result<()> {
    for (m, n) in [(1, 1), (3, 2), (8, 8)] {
        let r = lpp_wishart_identity_test(m, n, 20_000, 11)?;
        println!(
            "({m},{n}): mean T {:.4} vs mean lambda_1 {:.4}; KS {:.4} (threshold {:.4}) p = {:.3} -> {}",
            r.lpp_mean,
            r.wishart_mean,
            r.ks.statistic,
            r.ks.threshold,
            r.ks.p_value,
            if r.ks.passed { "pass" } else { "fail" }
        );
    }
    Ok(())
}
