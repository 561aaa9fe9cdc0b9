//! Upper-tail rate functions and the curvature coefficient.

use uptail::rates::{beta_coefficient, beta_prime, rate_derivatives, rate_i, rate_iy, rate_jy};

fn main() -> uptail::Result<()> {
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "delta", "I", "I'", "I''", "beta");
    for delta in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let i = rate_i(delta)?;
        let (d1, d2) = rate_derivatives(delta)?;
        println!("{delta:6} {:12.8} {d1:12.8} {d2:12.8} {:10.6}", i.value, beta_coefficient(delta)?);
    }
    println!("beta'(1) = {:.8}", beta_prime(1.0)?);
    // rectangular aspect y = N/M
    for y in [0.25, 0.5, 1.0] {
        println!("y = {y}: J_y(1) = {:.8}, I_y(1) = {:.8}", rate_jy(y, 1.0)?.value, rate_iy(y, 1.0)?.value);
    }
    Ok(())
}
