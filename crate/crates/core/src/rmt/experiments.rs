use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};

use super::{bidiagonal_tridiagonal, sample_spectrum_with, Backend, Spectrum, WishartSpec};
use crate::error::{Error, Result};
use crate::linalg::sturm_count_above;
use crate::lpp::sampled_last_passage;
use crate::mp::{classical_locations, mp_cdf, MpLaw};
use crate::rng::{derive_seed, stream, trial_seed};
use crate::stats::{
    dkw_epsilon, ecdf_excess, ecdf_excess_over, fit_line, ks_report, mean, quantile_sorted, sorted, variance,
    wilson_interval, KsReport, LineFit,
};

const LPP_STREAM: u64 = 0x1;
const WISHART_STREAM: u64 = 0x2;

fn largest_samples(spec: &WishartSpec, trials: usize, seed: u64, backend: Backend) -> Result<Vec<f64>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| sample_spectrum_with(spec, trial_seed(seed, i), backend).map(|s| s.largest()))
        .collect()
}

fn spectra(spec: &WishartSpec, samples: usize, seed: u64, backend: Backend) -> Result<Vec<Spectrum>> {
    (0..samples as u64).into_par_iter().map(|i| sample_spectrum_with(spec, trial_seed(seed, i), backend)).collect()
}

/// Scaled eigenvalues regardless of the spec's flag.
fn scaled_values(s: &Spectrum) -> Vec<f64> {
    if s.spec.scaled {
        s.values.clone()
    } else {
        s.values.iter().map(|x| x / s.spec.m as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub lpp_mean: f64,
    pub wishart_mean: f64,
    pub ks: KsReport,
}

/// Two-sample KS between `T_{(1,1),(M,N)}` and the unscaled `λ̂₁`.
pub fn lpp_wishart_identity_test(m: usize, n: usize, trials: usize, seed: u64) -> Result<IdentityReport> {
    let spec = WishartSpec::new(m, n, false)?;
    if trials < 1000 {
        return Err(Error::Range(format!("need at least 1000 trials, got {trials}")));
    }
    let lpp_seed = derive_seed(seed, LPP_STREAM);
    let t: Vec<f64> =
        (0..trials as u64).into_par_iter().map(|i| sampled_last_passage(m, n, trial_seed(lpp_seed, i)).value).collect();
    let lam = largest_samples(&spec, trials, derive_seed(seed, WISHART_STREAM), spec.default_backend())?;
    Ok(IdentityReport {
        m,
        n,
        trials,
        seed,
        lpp_mean: mean(&t),
        wishart_mean: mean(&lam),
        ks: ks_report(&t, &lam, 0.01),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub level: f64,
    pub exceed: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsmReport {
    pub m: usize,
    pub n: usize,
    pub samples: usize,
    /// `sup |F_ESM - F_MP|` for the sample-averaged spectral CDF.
    pub ks_distance: f64,
    pub tails: Vec<TailEstimate>,
}

pub const TAIL_LEVELS: [f64; 3] = [4.5, 5.0, 6.0];

pub fn esm_diagnostics(spec: &WishartSpec, samples: usize, seed: u64, backend: Backend) -> Result<EsmReport> {
    if samples == 0 {
        return Err(Error::Range("need at least one sample".into()));
    }
    let law = MpLaw::new(spec.y())?;
    let all = spectra(spec, samples, seed, backend)?;
    let scaled: Vec<Vec<f64>> = all.iter().map(scaled_values).collect();
    let pooled = sorted(&scaled.concat());
    let total = pooled.len() as f64;
    let ks_distance = pooled
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = mp_cdf(&law, x);
            ((i as f64 + 1.0) / total - f).max(f - i as f64 / total)
        })
        .reduce(|| 0.0, f64::max);
    let tails = TAIL_LEVELS
        .iter()
        .map(|&level| {
            let exceed = scaled.iter().filter(|v| v[0] > level).count();
            TailEstimate { level, exceed, fraction: exceed as f64 / samples as f64 }
        })
        .collect();
    Ok(EsmReport { m: spec.m, n: spec.n, samples, ks_distance, tails })
}

/// Envelope `g_c(N) = (ln N)^{c ln ln N}`.
pub fn rigidity_envelope(n: usize, c: f64) -> f64 {
    let l = (n as f64).ln();
    l.powf(c * l.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub n: usize,
    pub c: f64,
    pub g: f64,
    /// Inclusive 1-based index window.
    pub window: (usize, usize),
    pub deviations: Vec<f64>,
    pub normalized: Vec<f64>,
    pub window_max: f64,
    /// 1-based index attaining `window_max`.
    pub argmax: usize,
}

fn rigidity_window(n: usize, c: f64) -> Result<(f64, usize, usize)> {
    let g = rigidity_envelope(n, c);
    if !(g < n as f64 / 2.0) {
        return Err(Error::Window { g, n });
    }
    let lo = (g.ceil() as usize).max(1);
    let hi = ((n as f64 - g).floor() as usize).min(n);
    if lo > hi {
        return Err(Error::Window { g, n });
    }
    Ok((g, lo, hi))
}

/// Rigidity of decreasing scaled eigenvalues against given classical
/// locations.
pub fn rigidity_from_values(values: &[f64], gammas: &[f64], c: f64) -> Result<RigidityReport> {
    let n = values.len();
    if gammas.len() != n {
        return Err(Error::Dimension(format!("{} eigenvalues but {} locations", n, gammas.len())));
    }
    let (g, lo, hi) = rigidity_window(n, c)?;
    let nf = n as f64;
    let deviations: Vec<f64> = values.iter().zip(gammas).map(|(l, g)| (l - g).abs()).collect();
    let normalized: Vec<f64> = deviations
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let j = i + 1;
            d * (j.min(n + 1 - j) as f64).cbrt() * nf.powf(2.0 / 3.0)
        })
        .collect();
    let (mut window_max, mut argmax) = (f64::NEG_INFINITY, lo);
    for j in lo..=hi {
        if normalized[j - 1] > window_max {
            window_max = normalized[j - 1];
            argmax = j;
        }
    }
    Ok(RigidityReport { n, c, g, window: (lo, hi), deviations, normalized, window_max, argmax })
}

pub fn rigidity_report(spectrum: &Spectrum, c: f64) -> Result<RigidityReport> {
    let gammas = classical_locations(&MpLaw::new(spectrum.spec.y())?, spectrum.spec.n)?;
    rigidity_from_values(&scaled_values(spectrum), &gammas, c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigiditySummary {
    pub m: usize,
    pub n: usize,
    pub c: f64,
    pub samples: usize,
    pub window_max: Vec<f64>,
    pub median: f64,
    pub p99: f64,
}

pub fn rigidity_experiment(
    spec: &WishartSpec,
    c: f64,
    samples: usize,
    seed: u64,
    backend: Backend,
) -> Result<RigiditySummary> {
    rigidity_window(spec.n, c)?;
    let gammas = classical_locations(&MpLaw::new(spec.y())?, spec.n)?;
    let window_max: Vec<f64> = spectra(spec, samples, seed, backend)?
        .par_iter()
        .map(|s| rigidity_from_values(&scaled_values(s), &gammas, c).map(|r| r.window_max))
        .collect::<Result<_>>()?;
    let s = sorted(&window_max);
    Ok(RigiditySummary {
        m: spec.m,
        n: spec.n,
        c,
        samples,
        median: quantile_sorted(&s, 0.5),
        p99: quantile_sorted(&s, 0.99),
        window_max,
    })
}

/// `tr f = (1/N) Σ f(λ_i)`.
pub fn linear_statistic<F: Fn(f64) -> f64>(spectrum: &Spectrum, f: F) -> f64 {
    spectrum.values.iter().map(|&x| f(x)).sum::<f64>() / spectrum.values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub m: usize,
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
}

pub fn concentration_experiment<F>(
    spec: &WishartSpec,
    f: F,
    samples: usize,
    seed: u64,
    backend: Backend,
) -> Result<ConcentrationPoint>
where
    F: Fn(f64) -> f64 + Sync,
{
    let v: Vec<f64> = spectra(spec, samples, seed, backend)?.iter().map(|s| linear_statistic(s, &f)).collect();
    Ok(ConcentrationPoint { m: spec.m, n: spec.n, samples, mean: mean(&v), variance: variance(&v) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub points: Vec<ConcentrationPoint>,
    /// Least-squares fit of `ln Var` against `ln N`.
    pub fit: LineFit,
}

/// Square scaled ensembles `M = N` over `ns`, each with its own seed stream.
pub fn concentration_decay<F>(ns: &[usize], f: F, samples: usize, seed: u64) -> Result<ConcentrationReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    if ns.len() < 2 {
        return Err(Error::Range("need at least two sizes".into()));
    }
    let points = ns
        .iter()
        .map(|&n| {
            let spec = WishartSpec::new(n, n, true)?;
            concentration_experiment(&spec, &f, samples, derive_seed(seed, n as u64), spec.default_backend())
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.variance.ln()).collect();
    Ok(ConcentrationReport { fit: fit_line(&x, &y), points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    /// `sup (F̂_{M,N} - G)` against the exact Gamma(M+1) CDF `G`.
    pub excess: f64,
    pub band: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub upper: (usize, usize),
    pub lower: (usize, usize),
    pub trials: usize,
    pub alpha: f64,
    /// `sup (F̂_upper - F̂_lower)`; zero under perfect ordering.
    pub excess: f64,
    pub band: f64,
    pub passed: bool,
    /// Present when the lower side is `(M+1, 1)`, whose `λ̂₁` is Gamma(M+1).
    pub exact: Option<ExactComparison>,
}

/// Checks `λ̂₁(upper) ⪰ λ̂₁(lower)` from independent samples: the lower
/// side's empirical CDF must not fall below the upper side's by more than
/// the sum of the two DKW bands.
pub fn compare_largest(
    upper: (usize, usize),
    lower: (usize, usize),
    trials: usize,
    seed: u64,
    alpha: f64,
) -> Result<DominanceReport> {
    let su = WishartSpec::new(upper.0, upper.1, false)?;
    let sl = WishartSpec::new(lower.0, lower.1, false)?;
    let a = largest_samples(&su, trials, derive_seed(seed, 0x11), su.default_backend())?;
    let b = largest_samples(&sl, trials, derive_seed(seed, 0x12), sl.default_backend())?;
    let excess = ecdf_excess(&a, &b);
    let band = 2.0 * dkw_epsilon(trials, alpha);
    let exact = (lower.1 == 1).then(|| {
        let g = GammaDist::new(lower.0 as f64, 1.0).expect("positive shape");
        let excess = ecdf_excess_over(&a, |x| g.cdf(x));
        let band = dkw_epsilon(trials, alpha);
        ExactComparison { excess, band, passed: excess <= band }
    });
    Ok(DominanceReport { upper, lower, trials, alpha, excess, band, passed: excess <= band, exact })
}

/// `(M, N)` against `(M+1, N-1)` at `α = 0.01`.
pub fn dominance_check(m: usize, n: usize, trials: usize, seed: u64) -> Result<DominanceReport> {
    if n < 2 || m < n {
        return Err(Error::Dimension(format!("need M >= N >= 2, got M = {m}, N = {n}")));
    }
    if (m - n) % 2 == 1 {
        return Err(Error::UnsupportedParity(m - n));
    }
    compare_largest((m, n), (m + 1, n - 1), trials, seed, 0.01)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopTwoReport {
    pub n: usize,
    pub delta: f64,
    pub budget: u64,
    pub pilot_trials: u64,
    pub pilot_acceptance: f64,
    /// Samples with `λ₁ > 4 + δ`.
    pub accepted: u64,
    /// Of those, samples with `λ₂ > 4 + δ/2`.
    pub both: u64,
    pub fraction: f64,
    /// Wilson 95% interval for `fraction`.
    pub ci: (f64, f64),
}

pub const MIN_PILOT_ACCEPTANCE: f64 = 1e-4;

fn top_two_counts(n: usize, delta: f64, seed: u64, range: std::ops::Range<u64>) -> (u64, u64) {
    let nf = n as f64;
    let (t1, t2) = (nf * (4.0 + delta), nf * (4.0 + delta / 2.0));
    range
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(trial_seed(seed, i), 0);
            let (d, e) = bidiagonal_tridiagonal(n, n, &mut rng);
            if sturm_count_above(&d, &e, t1) == 0 {
                (0, 0)
            } else {
                (1, u64::from(sturm_count_above(&d, &e, t2) >= 2))
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Among square scaled spectra with `λ₁ > 4 + δ`, the fraction that also
/// have `λ₂ > 4 + δ/2`. Only Sturm counts are computed per sample.
pub fn top_two_tail_experiment(n: usize, delta: f64, budget: u64, seed: u64) -> Result<TopTwoReport> {
    if !(2..=40).contains(&n) {
        return Err(Error::Range(format!("N must lie in [2, 40], got {n}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let pilot_trials = (budget / 10).clamp(budget.min(10_000), 1_000_000);
    let (pa, pb) = top_two_counts(n, delta, seed, 0..pilot_trials);
    let pilot_acceptance = pa as f64 / pilot_trials.max(1) as f64;
    if pilot_acceptance < MIN_PILOT_ACCEPTANCE {
        return Err(Error::Budget {
            pilot: pilot_acceptance,
            msg: format!("P(λ₁ > 4 + {delta}) at N = {n} is below {MIN_PILOT_ACCEPTANCE:e}"),
        });
    }
    let (ra, rb) = top_two_counts(n, delta, seed, pilot_trials..budget);
    let (accepted, both) = (pa + ra, pb + rb);
    Ok(TopTwoReport {
        n,
        delta,
        budget,
        pilot_trials,
        pilot_acceptance,
        accepted,
        both,
        fraction: both as f64 / accepted as f64,
        ci: wilson_interval(both, accepted, 1.96),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_in_the_trivial_case() {
        let r = lpp_wishart_identity_test(1, 1, 20_000, 4).unwrap();
        assert!(r.ks.passed, "{r:?}");
        assert!((r.lpp_mean - 1.0).abs() < 0.03 && (r.wishart_mean - 1.0).abs() < 0.03);
        assert!(lpp_wishart_identity_test(3, 2, 999, 4).is_err());
    }

    #[test]
    fn identity_rectangular() {
        let r = lpp_wishart_identity_test(3, 2, 20_000, 5).unwrap();
        assert!(r.ks.passed, "{r:?}");
    }

    #[test]
    fn esm_is_close_to_mp() {
        let spec = WishartSpec::new(50, 50, true).unwrap();
        let r = esm_diagnostics(&spec, 200, 1, Backend::Bidiagonal).unwrap();
        assert!(r.ks_distance <= 0.05, "{}", r.ks_distance);
        assert_eq!(r.tails[2].exceed, 0);
        assert!(r.tails[0].fraction <= r.tails[1].fraction.max(r.tails[0].fraction));
    }

    #[test]
    fn esm_degenerate_n1_is_reported() {
        let spec = WishartSpec::new(1, 1, true).unwrap();
        let r = esm_diagnostics(&spec, 500, 2, Backend::Dense).unwrap();
        assert!(r.ks_distance > 0.05 && r.ks_distance < 1.0);
        assert!(r.tails[0].fraction > 0.0);
    }

    #[test]
    fn envelope_and_window() {
        assert!((rigidity_envelope(200, 1.0) - 200f64.ln().powf(200f64.ln().ln())).abs() < 1e-12);
        let (g, lo, hi) = rigidity_window(200, 1.0).unwrap();
        assert!(lo as f64 >= g && (hi as f64) <= 200.0 - g && lo <= hi);
        assert!(matches!(rigidity_window(200, 5.0), Err(Error::Window { .. })));
    }

    #[test]
    fn rigidity_at_classical_locations_is_zero() {
        let law = MpLaw::new(0.5).unwrap();
        let gammas = classical_locations(&law, 40).unwrap();
        let r = rigidity_from_values(&gammas, &gammas, 1.0).unwrap();
        assert!(r.deviations.iter().all(|d| *d == 0.0));
        assert_eq!(r.window_max, 0.0);
    }

    #[test]
    fn rigidity_flags_a_shifted_eigenvalue() {
        let law = MpLaw::new(1.0).unwrap();
        let gammas = classical_locations(&law, 100).unwrap();
        let mut v = gammas.clone();
        v[49] += 0.5;
        let r = rigidity_from_values(&v, &gammas, 1.0).unwrap();
        assert_eq!(r.argmax, 50);
        assert!((r.deviations[49] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rigidity_on_samples_is_moderate() {
        let spec = WishartSpec::new(100, 100, true).unwrap();
        let s = rigidity_experiment(&spec, 1.0, 20, 3, Backend::Bidiagonal).unwrap();
        assert!(s.median > 0.0 && s.p99 < 20.0, "{s:?}");
        let one = super::super::sample_spectrum(&spec, 3).unwrap();
        assert_eq!(rigidity_report(&one, 1.0).unwrap().n, 100);
    }

    #[test]
    fn linear_statistic_identities() {
        let spec = WishartSpec::new(30, 30, true).unwrap();
        let s = super::super::sample_spectrum(&spec, 8).unwrap();
        assert_eq!(linear_statistic(&s, |_| 1.0), 1.0);
        assert!((30.0 * linear_statistic(&s, |x| x) - s.trace()).abs() < 1e-9);
    }

    #[test]
    fn concentration_slope() {
        let r = concentration_decay(&[25, 50, 100], |x| x.min(5.0), 400, 6).unwrap();
        assert!(r.fit.slope < -1.6, "{r:?}");
    }

    #[test]
    fn dominance_small_cases() {
        let r = dominance_check(2, 2, 20_000, 9).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.exact.unwrap().passed);
        assert_eq!(dominance_check(5, 2, 10, 1).unwrap_err(), Error::UnsupportedParity(3));
        assert!(dominance_check(3, 1, 10, 1).is_err());
    }

    #[test]
    fn identical_specs_sit_inside_the_band() {
        let r = compare_largest((4, 4), (4, 4), 20_000, 10, 0.01).unwrap();
        assert!(r.passed);
        let back = compare_largest((4, 4), (4, 4), 20_000, 11, 0.01).unwrap();
        assert!(back.excess <= back.band);
    }

    #[test]
    fn top_two_budget_gate() {
        match top_two_tail_experiment(10, 50.0, 100_000, 1) {
            Err(Error::Budget { pilot, .. }) => assert_eq!(pilot, 0.0),
            other => panic!("{other:?}"),
        }
        let r = top_two_tail_experiment(10, 0.5, 200_000, 1).unwrap();
        assert!(r.accepted > 0 && r.fraction >= 0.0 && r.fraction <= 1.0);
        assert!(r.ci.0 <= r.fraction && r.fraction <= r.ci.1);
    }
}
