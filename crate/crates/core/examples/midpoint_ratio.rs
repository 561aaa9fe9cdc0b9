//! Probability that the best path splits at the midpoint given the upper
//! tail, and its off-diagonal decay.

use uptail::ldp::{midpoint_ratio_offset, midpoint_trend};

fn main() -> uptail::Result<()> {
    for k in [0, 2, 4] {
        let r = midpoint_ratio_offset(16, 1.0, k, 20_000, 8)?;
        println!("n = 16, k = {k}: ratio {:.4} (log se {:.4}), sqrt(n) ratio {:.4}", r.ratio, r.log_ratio_se, r.scaled);
    }
    let t = midpoint_trend(&[8, 16, 24], 1.0, 20_000, 8)?;
    println!("trend slope {:.4} ± {:.4}, z = {:.2}, upward: {}", t.fit.slope, t.fit.slope_se, t.z, t.upward);
    Ok(())
}
