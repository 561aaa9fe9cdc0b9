//! Marchenko-Pastur density, CDF, quantiles and classical locations.

use uptail::mp::{classical_locations, mp_cdf, mp_density, mp_quantile, MpLaw};

fn main() -> uptail::Result<()> {
    for y in [0.25, 1.0] {
        let law = MpLaw::new(y)?;
        println!("y = {y}: support [{:.4}, {:.4}]", law.a, law.b);
        for x in [0.5, 1.0, 2.0] {
            println!("  x = {x}: density {:.6}, cdf {:.6}", mp_density(&law, x), mp_cdf(&law, x));
        }
        println!("  median {:.6}", mp_quantile(&law, 0.5)?);
        let g = classical_locations(&law, 5)?;
        println!("  classical locations (N = 5) {:?}", g.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    }
    Ok(())
}
