//! Laguerre projection kernel in L²(e^{-x} dx): one-point density, trace and
//! the reproducing property.

use uptail::quadrature::integrate_adaptive;
use uptail::rmt::build_projection_kernel;

fn main() -> uptail::Result<()> {
    let (m, n) = (12, 8);
    let k = build_projection_kernel(m, n)?;
    for x in [1.0, 5.0, 20.0, 40.0] {
        println!("density K(x,x)e^-x at x = {x:4}: {:.6e}", k.eval(x, x) * (-x).exp());
    }
    let top = 4.0 * (m + n) as f64 + 60.0;
    let breaks: Vec<f64> = (0..=40).map(|i| top * i as f64 / 40.0).collect();
    let trace = integrate_adaptive(|x| k.eval(x, x) * (-x).exp(), &breaks, 1e-12, 4000)?;
    println!("trace = {:.10} (N = {n})", trace.value);
    // ∫ K(x,z) K(z,y) e^{-z} dz = K(x,y)
    let kk = integrate_adaptive(|z| k.eval(3.0, z) * k.eval(z, 7.0) * (-z).exp(), &breaks, 1e-12, 4000)?;
    println!("K*K(3,7) = {:.10e}, K(3,7) = {:.10e}", kk.value, k.eval(3.0, 7.0));
    Ok(())
}
