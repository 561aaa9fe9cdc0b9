//! Eigenvalue rigidity: deviations from classical locations, normalized by
//! the envelope, inside the bulk window.

use uptail::rmt::{rigidity_experiment, rigidity_report, sample_spectrum, Backend, WishartSpec};

fn main() -> uptail::Result<()> {
    let spec = WishartSpec::new(200, 200, true)?;
    let r = rigidity_report(&sample_spectrum(&spec, 3)?, 1.0)?;
    println!("one sample: window {:?}, max normalized deviation {:.4} at j = {}", r.window, r.window_max, r.argmax);
    let s = rigidity_experiment(&spec, 1.0, 40, 3, Backend::Bidiagonal)?;
    println!("40 samples: median {:.4}, p99 {:.4}", s.median, s.p99);
    Ok(())
}
