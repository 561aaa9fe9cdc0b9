//! Dense and bidiagonal Wishart samplers agree in law.

use uptail::rmt::{sample_spectrum_with, Backend, WishartSpec};
use uptail::stats::ks_report;

fn main() -> uptail::Result<()> {
    let spec = WishartSpec::new(20, 20, false)?;
    let trials = 4000u64;
    let draw = |b: Backend, salt: u64| -> uptail::Result<Vec<(f64, f64, f64)>> {
        (0..trials)
            .map(|i| sample_spectrum_with(&spec, 1000 * salt + i, b).map(|s| (s.largest(), s.smallest(), s.trace())))
            .collect()
    };
    let dense = draw(Backend::Dense, 1)?;
    let bidiag = draw(Backend::Bidiagonal, 2)?;
    let pick = |v: &[(f64, f64, f64)], k: usize| v.iter().map(|t| [t.0, t.1, t.2][k]).collect::<Vec<_>>();
    for (k, name) in ["largest", "smallest", "trace"].iter().enumerate() {
        let r = ks_report(&pick(&dense, k), &pick(&bidiag, k), 0.01);
        println!("{name:8}: KS {:.4} (threshold {:.4}) -> {}", r.statistic, r.threshold, r.passed);
    }
    Ok(())
}
