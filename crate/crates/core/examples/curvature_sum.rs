//! Exact curvature sums for an (n+c) x (n-c) rectangle against the square,
//! and their quadratic coefficient in c.

use uptail::rates::{beta_coefficient, curvature_sum_check};
use uptail::stats::fit_polynomial;

fn main() -> uptail::Result<()> {
    let (delta, n) = (1.0, 1_000_000);
    let cs: Vec<usize> = (1..=30).map(|k| 100 * k).collect();
    let mut totals = Vec::new();
    for &c in &cs {
        let s = curvature_sum_check(delta, n, c)?;
        if c % 1000 == 0 {
            println!("c = {c:5}: components {:?}", s.components.map(|v| format!("{v:.6}")));
        }
        totals.push(s.total);
    }
    let x: Vec<f64> = cs.iter().map(|&c| c as f64).collect();
    let coef = fit_polynomial(&x, &totals, 2);
    let beta = beta_coefficient(delta)?;
    println!("fitted c^2 coefficient {:.6e}", coef[2]);
    println!("-beta/n                {:.6e}", -beta / n as f64);
    println!("-(beta-4)/n            {:.6e}", -(beta - 4.0) / n as f64);
    Ok(())
}
