//! Small statistical toolkit: empirical CDFs, Kolmogorov–Smirnov distances,
//! DKW bands, bootstrap, least squares, weighted quantiles.

use serde::{Deserialize, Serialize};

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut k = KahanSum::new();
    for x in xs {
        k.add(x);
    }
    k.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    kahan_sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    kahan_sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() as f64 - 1.0)
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical CDF of a sorted sample, evaluated at `x` (right-continuous).
pub fn ecdf_sorted(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sided `sup_x (F_a(x) - F_b(x))`, never negative.
pub fn ecdf_excess(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() {
        let x = a[i];
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max(i as f64 / na - j as f64 / nb);
    }
    d
}

/// One-sided `sup_x (F_n(x) - F(x))` against a continuous CDF.
pub fn ecdf_excess_over<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let s = sorted(xs);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| d.max((i as f64 + 1.0) / n - cdf(x)))
}

/// One-sample KS distance of a sample against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let s = sorted(xs);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// DKW–Massart half-width: `P(sup|F_n - F| > eps) <= alpha` for
/// `eps = sqrt(ln(2/alpha) / (2n))`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Finite-sample two-sample threshold built from two DKW bands at level
/// `alpha / 2` each. Under equal laws the KS statistic exceeds it with
/// probability at most `alpha`.
pub fn dkw_two_sample_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    dkw_epsilon(n, alpha / 2.0) + dkw_epsilon(m, alpha / 2.0)
}

/// Asymptotic Kolmogorov survival function `Q(t) = 2 sum (-1)^{k-1} e^{-2k^2t^2}`.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.27 {
        return 1.0;
    }
    if t < 1.0 {
        // Jacobi-transformed series converges fast for small t.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * t * t);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return 1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic p-value of the two-sample KS statistic.
pub fn ks_two_sample_pvalue(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    kolmogorov_survival(d * ne.sqrt())
}

/// Outcome of a two-sample comparison.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub passed: bool,
}

pub fn ks_report(a: &[f64], b: &[f64], alpha: f64) -> KsReport {
    let d = ks_two_sample(a, b);
    let threshold = dkw_two_sample_threshold(a.len(), b.len(), alpha);
    KsReport {
        statistic: d,
        threshold,
        p_value: ks_two_sample_pvalue(d, a.len(), b.len()),
        alpha,
        passed: d <= threshold,
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes >= trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Ordinary least squares line `y = intercept + slope x` with the standard
/// error of the slope.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    LineFit { intercept, slope, slope_se }
}

/// Weighted least squares line with known per-point standard deviations.
pub fn fit_line_weighted(x: &[f64], y: &[f64], sigma: &[f64]) -> LineFit {
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, w)| w * (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).zip(&w).map(|((a, b), w)| w * (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    LineFit { intercept: my - slope * mx, slope, slope_se: (1.0 / sxx).sqrt() }
}

/// Least-squares polynomial fit of the given degree; returns coefficients in
/// increasing powers. Abscissae are rescaled internally for conditioning.
pub fn fit_polynomial(x: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let k = degree + 1;
    let mut a = nalgebra::DMatrix::<f64>::zeros(x.len(), k);
    for (i, &xi) in x.iter().enumerate() {
        let t = xi / scale;
        let mut p = 1.0;
        for j in 0..k {
            a[(i, j)] = p;
            p *= t;
        }
    }
    let b = nalgebra::DVector::from_column_slice(y);
    let qr = a.clone().qr();
    let qtb = qr.q().transpose() * b;
    let r = qr.r();
    let coef = r.solve_upper_triangular(&qtb).expect("polynomial fit: rank-deficient design");
    (0..k).map(|j| coef[j] / scale.powi(j as i32)).collect()
}

/// Quantile of a sorted sample by linear interpolation (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Interpolated quantile of a weighted sample of nonnegative integers.
///
/// Each integer `d` is treated as a unit-width bin `[d - 1/2, d + 1/2)` and the
/// weighted CDF is interpolated linearly inside the bin that crosses `p`.
/// This removes the lattice artefacts a plain median has on integer data.
pub fn grouped_quantile(hist: &[f64], p: f64) -> f64 {
    let total: f64 = hist.iter().sum();
    if total <= 0.0 {
        return f64::NAN;
    }
    let target = p * total;
    let mut acc = 0.0;
    for (d, &w) in hist.iter().enumerate() {
        if w > 0.0 && acc + w >= target {
            let frac = (target - acc) / w;
            return d as f64 - 0.5 + frac;
        }
        acc += w;
    }
    hist.len() as f64 - 0.5
}

/// Histogram of weighted integer observations.
pub fn weighted_histogram(values: &[usize], weights: &[f64], len: usize) -> Vec<f64> {
    let mut h = vec![0.0; len];
    for (&v, &w) in values.iter().zip(weights) {
        h[v] += w;
    }
    h
}
