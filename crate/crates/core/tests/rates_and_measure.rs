//! Rate functions against direct integrals over the Marchenko-Pastur law.

use uptail::mp::{classical_locations, mp_cdf, mp_integrate, MpLaw};
use uptail::quadrature::QuadratureSpec;
use uptail::rates::{rate_derivatives, rate_i, rate_iy, rate_jy};

#[test]
fn rate_is_log_integral() {
    let spec = QuadratureSpec::with_tol(1e-13);
    let law = MpLaw::standard();
    for d in [0.5, 2.0, 7.0] {
        let l = mp_integrate(&law, |x| (4.0 + d - x).ln(), &spec).unwrap().value;
        let direct = 2.0 + d - 2.0 * l;
        assert!((rate_i(d).unwrap().value - direct).abs() < 1e-10, "δ = {d}");
    }
}

#[test]
fn jy_at_one_is_the_log_moment() {
    let spec = QuadratureSpec::with_tol(1e-13);
    let law = MpLaw::standard();
    let l = mp_integrate(&law, |x| (5.0 - x).ln(), &spec).unwrap().value;
    assert!((rate_jy(1.0, 1.0).unwrap().value - l).abs() < 1e-10);
}

#[test]
fn rectangular_rate_grows_with_delta() {
    for y in [0.3, 0.9] {
        let vals: Vec<f64> = [0.2, 0.5, 1.0, 3.0].iter().map(|&d| rate_iy(y, d).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "y = {y}: {vals:?}");
    }
}

#[test]
fn derivative_matches_difference_quotient() {
    let (d, h) = (1.5, 1e-4);
    let fd = (rate_i(d + h).unwrap().value - rate_i(d - h).unwrap().value) / (2.0 * h);
    let (d1, d2) = rate_derivatives(d).unwrap();
    assert!(((d1 - fd) / d1).abs() < 1e-6);
    assert!(d2 > 0.0);
}

#[test]
fn classical_locations_split_mass_evenly() {
    let law = MpLaw::new(0.5).unwrap();
    let n = 40;
    let g = classical_locations(&law, n).unwrap();
    assert_eq!(g.len(), n);
    assert!(g.windows(2).all(|w| w[0] > w[1]));
    assert!(g.iter().all(|&x| x >= law.a - 1e-12 && x <= law.b + 1e-12));
    // the mass above γ_j is j/N
    for (j, &x) in g.iter().enumerate().take(n - 1) {
        assert!((1.0 - mp_cdf(&law, x) - (j + 1) as f64 / n as f64).abs() < 1e-8, "j = {}", j + 1);
    }
}
