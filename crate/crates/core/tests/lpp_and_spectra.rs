//! Passage times, fields on disk and the Wishart side of the same law.

use std::io::BufReader;

use uptail::lpp::{geodesic, last_passage, passage_through_all, WeightField};
use uptail::rmt::{lpp_wishart_identity_test, sample_spectrum, WishartSpec};
use uptail::stats::mean;

#[test]
fn csv_round_trip_keeps_the_geodesic() {
    let f = WeightField::sample(15, 11, 8).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let back = WeightField::read_csv(BufReader::new(buf.as_slice())).unwrap();
    let (a, b) = (geodesic(&f, (1, 1), f.corner()).unwrap(), geodesic(&back, (1, 1), back.corner()).unwrap());
    assert_eq!(a.path, b.path);
    assert!((a.weight - b.weight).abs() < 1e-9 * a.weight);
}

#[test]
fn through_max_equals_passage_on_geodesic() {
    let f = WeightField::sample(9, 9, 2).unwrap();
    let t = last_passage(&f, (1, 1), (9, 9)).unwrap().value;
    let through = passage_through_all(&f);
    let best = through.iter().cloned().fold(f64::MIN, f64::max);
    assert!((best - t).abs() < 1e-12 * t);
    for p in geodesic(&f, (1, 1), (9, 9)).unwrap().path {
        assert!((through[(p.0 - 1) * 9 + (p.1 - 1)] - t).abs() < 1e-12 * t);
    }
}

#[test]
fn single_column_is_gamma_on_both_sides() {
    // (M, 1): T is a sum of M exponentials and so is the only eigenvalue
    let r = lpp_wishart_identity_test(5, 1, 20_000, 12).unwrap();
    assert!(r.ks.passed);
    assert!((r.lpp_mean - 5.0).abs() < 0.1 && (r.wishart_mean - 5.0).abs() < 0.1);
}

#[test]
fn scaled_spectrum_has_unit_mean() {
    let spec = WishartSpec::new(80, 40, true).unwrap();
    let means: Vec<f64> = (0..20).map(|s| sample_spectrum(&spec, s).unwrap().trace() / 40.0).collect();
    assert!((mean(&means) - 1.0).abs() < 0.01, "{}", mean(&means));
}
