use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    choose_theta, default_theta_grid, draw_field, estimate_event, rejection_conditional_samples_until,
    rejection_feasibility, weighted_conditional_geodesics, LdEstimate, LdEvent, SamplingPlan, Statistic, MIN_ESS,
    MIN_TRIALS,
};
use crate::error::{Error, Result};
use crate::lpp::{passage_through_all, sampled_geodesic, WeightField};
use crate::rates::rate_i;
use crate::rng::{derive_seed, stream, trial_seed};
use crate::stats::{
    fit_line, fit_line_weighted, grouped_quantile, quantile_sorted, sorted, weighted_histogram, LineFit,
};

fn pilot_size(trials: usize) -> usize {
    (trials / 10).clamp(1000, 5000)
}

fn tuned_plan(
    stat: Statistic,
    rows: usize,
    cols: usize,
    threshold: f64,
    trials: usize,
    seed: u64,
) -> Result<SamplingPlan> {
    let c = choose_theta(stat, rows, cols, threshold, &default_theta_grid(), pilot_size(trials), seed)?;
    SamplingPlan::path_mixture(c.theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditiveReport {
    pub n: usize,
    pub delta: f64,
    pub estimate: LdEstimate,
    pub rate: f64,
    /// `-n I(δ)`.
    pub bound: f64,
    /// `-log P̂ / n - I(δ)`.
    pub gap: f64,
    /// `log P̂ + 3σ̂ <= -n I(δ)`.
    pub passed: bool,
}

/// Importance estimate of `P(T'_n >= (4+δ)n)` against `-n I(δ)`.
pub fn subadditive_bound_check(n: usize, delta: f64, trials: usize, seed: u64) -> Result<SubadditiveReport> {
    let ev = LdEvent::upper(n, delta)?;
    if trials < MIN_TRIALS {
        return Err(Error::Range(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let plan = tuned_plan(Statistic::Truncated, n, n, ev.threshold(), trials, derive_seed(seed, 1))?;
    let estimate = estimate_event(&ev, Statistic::Truncated, &plan, trials, derive_seed(seed, 2))?;
    let rate = rate_i(delta)?.value;
    let bound = -(n as f64) * rate;
    Ok(SubadditiveReport {
        n,
        delta,
        rate,
        bound,
        gap: -estimate.log_p / n as f64 - rate,
        passed: !estimate.degenerate && estimate.log_p + 3.0 * estimate.std_err <= bound,
        estimate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidpointReport {
    pub n: usize,
    pub delta: f64,
    /// `v = (n/2 + k, n/2 - k)`.
    pub offset: usize,
    /// `P(T_{1,v} + T^{ind}_{v,n} >= (4+δ)n)` with independent halves.
    pub numerator: LdEstimate,
    /// `P(T_n >= (4+δ)n)`.
    pub denominator: LdEstimate,
    pub ratio: f64,
    /// Standard error of `log ratio`.
    pub log_ratio_se: f64,
    /// `√n · ratio`.
    pub scaled: f64,
}

pub fn midpoint_ratio_experiment(n: usize, delta: f64, trials: usize, seed: u64) -> Result<MidpointReport> {
    midpoint_ratio_offset(n, delta, 0, trials, seed)
}

/// Numerator and denominator share the path-mixture `θ` tuned on the
/// denominator.
pub fn midpoint_ratio_offset(n: usize, delta: f64, k: usize, trials: usize, seed: u64) -> Result<MidpointReport> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::Domain(format!("n must be even and at least 2, got {n}")));
    }
    if k >= n / 2 {
        return Err(Error::Range(format!("offset {k} leaves the grid for n = {n}")));
    }
    if trials < MIN_TRIALS {
        return Err(Error::Range(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let ev = LdEvent::upper(n, delta)?;
    let s = ev.threshold();
    let plan = tuned_plan(Statistic::Full, n, n, s, trials, derive_seed(seed, 1))?;
    let denominator = estimate_event(&ev, Statistic::Full, &plan, trials, derive_seed(seed, 2))?;

    let h = n / 2;
    let (a_rows, a_cols) = (h + k, h - k);
    let (b_rows, b_cols) = (h - k + 1, h + k + 1);
    let nseed = derive_seed(seed, 3);
    let samples: Vec<(bool, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let ts = trial_seed(nseed, i);
            let a = draw_field(&plan, a_rows, a_cols, derive_seed(ts, 1));
            let b = draw_field(&plan, b_rows, b_cols, derive_seed(ts, 2));
            (a.passage().0 + b.passage().0 >= s, a.log_lr + b.log_lr)
        })
        .collect();
    let numerator = LdEstimate::from_trials(plan, &samples);
    let log_ratio = numerator.log_p - denominator.log_p;
    let ratio = log_ratio.exp();
    Ok(MidpointReport {
        n,
        delta,
        offset: k,
        ratio,
        log_ratio_se: numerator.std_err.hypot(denominator.std_err),
        scaled: (n as f64).sqrt() * ratio,
        numerator,
        denominator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidpointTrend {
    pub points: Vec<MidpointReport>,
    /// Weighted fit of `ln(√n r̂)` against `ln n`.
    pub fit: LineFit,
    /// `slope / se`.
    pub z: f64,
    /// One-sided 95% test for a positive slope.
    pub upward: bool,
}

pub fn midpoint_trend(ns: &[usize], delta: f64, trials: usize, seed: u64) -> Result<MidpointTrend> {
    if ns.len() < 2 {
        return Err(Error::Range("need at least two sizes".into()));
    }
    let points = ns
        .iter()
        .map(|&n| midpoint_ratio_experiment(n, delta, trials, derive_seed(seed, n as u64)))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.scaled.ln()).collect();
    let s: Vec<f64> = points.iter().map(|p| p.log_ratio_se).collect();
    let fit = fit_line_weighted(&x, &y, &s);
    let z = fit.slope / fit.slope_se;
    Ok(MidpointTrend { points, fit, z, upward: z > 1.645 })
}

/// Integer observations with weights (all ones for plain samples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySample {
    pub values: Vec<usize>,
    pub weights: Vec<f64>,
    pub ess: f64,
}

impl GeometrySample {
    pub fn plain(values: Vec<usize>) -> Self {
        let ess = values.len() as f64;
        let weights = vec![1.0; values.len()];
        Self { values, weights, ess }
    }

    fn support(&self) -> usize {
        self.values.iter().copied().max().unwrap_or(0) + 1
    }

    pub fn quantile(&self, p: f64) -> f64 {
        grouped_quantile(&weighted_histogram(&self.values, &self.weights, self.support()), p)
    }

    /// Medians of `b` resamples drawn with replacement.
    pub fn bootstrap_medians(&self, b: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, 0xb007);
        let len = self.values.len();
        let mut hist = vec![0.0; self.support()];
        (0..b)
            .map(|_| {
                hist.iter_mut().for_each(|h| *h = 0.0);
                for _ in 0..len {
                    let i = rng.random_range(0..len);
                    hist[self.values[i]] += self.weights[i];
                }
                grouped_quantile(&hist, 0.5)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditioningMethod {
    Rejection,
    Importance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub median: f64,
    pub q75: f64,
    pub median_ci95: (f64, f64),
    pub sample: GeometrySample,
}

fn summarize(sample: GeometrySample, boots: &[f64]) -> GeometrySummary {
    let s = sorted(boots);
    GeometrySummary {
        median: sample.quantile(0.5),
        q75: sample.quantile(0.75),
        median_ci95: (quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975)),
        sample,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfPoint {
    pub n: usize,
    pub unconditioned: GeometrySummary,
    pub conditioned: Option<GeometrySummary>,
    pub method: Option<ConditioningMethod>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianComparison {
    pub n: usize,
    /// Unconditioned minus conditioned median.
    pub difference: f64,
    /// First percentile of the bootstrap difference.
    pub lower99: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfReport {
    pub delta: f64,
    pub points: Vec<TfPoint>,
    pub unconditioned_fit: ExponentFit,
    pub conditioned_fit: Option<ExponentFit>,
    pub comparisons: Vec<MedianComparison>,
    /// Some grid point had no usable conditioned sample.
    pub incomplete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfOptions {
    pub unconditioned_trials: usize,
    /// Rejection budget per grid point.
    pub rejection_budget: u64,
    /// Rejection is used when the pilot predicts at least this many accepted
    /// fields; sampling stops once it is reached.
    pub rejection_target: usize,
    pub importance_trials: usize,
    pub bootstrap: usize,
}

impl TfOptions {
    pub fn from_budget(budget: u64) -> Self {
        Self {
            unconditioned_trials: 2000,
            rejection_budget: budget,
            rejection_target: 1000,
            importance_trials: 200_000,
            bootstrap: 10_000,
        }
    }
}

fn unconditioned_sample(n: usize, trials: usize, seed: u64) -> Result<GeometrySample> {
    let d = (0..trials as u64)
        .into_par_iter()
        .map(|i| sampled_geodesic(n, n, trial_seed(seed, i)).map(|g| g.max_fluct))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeometrySample::plain(d))
}

fn conditioned_sample(
    n: usize,
    delta: f64,
    opts: &TfOptions,
    seed: u64,
) -> Result<Option<(GeometrySample, ConditioningMethod)>> {
    let ev = LdEvent::upper(n, delta)?;
    let choice = choose_theta(
        Statistic::Full,
        n,
        n,
        ev.threshold(),
        &default_theta_grid(),
        pilot_size(opts.importance_trials),
        derive_seed(seed, 1),
    )?;
    let predicted = choice.pilot.p() * opts.rejection_budget as f64;
    if predicted >= opts.rejection_target as f64 && rejection_feasibility(n, delta, seed).is_ok() {
        let r = rejection_conditional_samples_until(n, delta, opts.rejection_budget, opts.rejection_target, seed)?;
        let d = r.records.iter().map(|g| g.max_fluct).collect();
        return Ok(Some((GeometrySample::plain(d), ConditioningMethod::Rejection)));
    }
    let plan = SamplingPlan::path_mixture(choice.theta)?;
    let w = weighted_conditional_geodesics(n, delta, &plan, opts.importance_trials, derive_seed(seed, 2))?;
    if w.ess < MIN_ESS {
        return Ok(None);
    }
    let weights = w.weights();
    Ok(Some((GeometrySample { values: w.max_fluct, weights, ess: w.ess }, ConditioningMethod::Importance)))
}

/// Slope of `ln median` against `ln n`, with a percentile bootstrap interval
/// from per-size resampled medians.
fn exponent_fit(ns: &[usize], medians: &[f64], boots: &[Vec<f64>]) -> ExponentFit {
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let fit = fit_line(&x, &y);
    let b = boots[0].len();
    let slopes: Vec<f64> = (0..b)
        .map(|j| {
            let yb: Vec<f64> = boots.iter().map(|v| v[j].ln()).collect();
            fit_line(&x, &yb).slope
        })
        .filter(|s| s.is_finite())
        .collect();
    let s = sorted(&slopes);
    ExponentFit {
        slope: fit.slope,
        intercept: fit.intercept,
        ci95: (quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconditionedExponent {
    pub ns: Vec<usize>,
    pub summaries: Vec<GeometrySummary>,
    pub fit: ExponentFit,
}

pub fn unconditioned_exponent(
    ns: &[usize],
    trials: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<UnconditionedExponent> {
    if ns.len() < 3 {
        return Err(Error::Range("need at least three sizes".into()));
    }
    let mut summaries = Vec::new();
    let mut boots = Vec::new();
    for &n in ns {
        let s = unconditioned_sample(n, trials, derive_seed(seed, n as u64))?;
        let b = s.bootstrap_medians(bootstrap, derive_seed(seed, 0x1000 + n as u64));
        summaries.push(summarize(s, &b));
        boots.push(b);
    }
    let med: Vec<f64> = summaries.iter().map(|s| s.median).collect();
    Ok(UnconditionedExponent { ns: ns.to_vec(), fit: exponent_fit(ns, &med, &boots), summaries })
}

pub fn conditional_tf_experiment(n_grid: &[usize], delta: f64, budget: u64, seed: u64) -> Result<TfReport> {
    conditional_tf_experiment_with(n_grid, delta, &TfOptions::from_budget(budget), seed)
}

pub fn conditional_tf_experiment_with(n_grid: &[usize], delta: f64, opts: &TfOptions, seed: u64) -> Result<TfReport> {
    if n_grid.len() < 3 {
        return Err(Error::Range("need at least three grid points".into()));
    }
    LdEvent::upper(n_grid[0], delta)?;
    let mut points = Vec::new();
    let mut uboots = Vec::new();
    let mut cboots = Vec::new();
    let mut comparisons = Vec::new();
    for &n in n_grid {
        let useed = derive_seed(seed, 0x100 + n as u64);
        let cseed = derive_seed(seed, 0x200 + n as u64);
        let u = unconditioned_sample(n, opts.unconditioned_trials, useed)?;
        let ub = u.bootstrap_medians(opts.bootstrap, useed);
        let (conditioned, method) = match conditioned_sample(n, delta, opts, cseed)? {
            Some((c, m)) => {
                let cb = c.bootstrap_medians(opts.bootstrap, cseed);
                let diffs: Vec<f64> = ub.iter().zip(&cb).map(|(a, b)| a - b).collect();
                let lower99 = quantile_sorted(&sorted(&diffs), 0.01);
                comparisons.push(MedianComparison {
                    n,
                    difference: u.quantile(0.5) - c.quantile(0.5),
                    lower99,
                    significant: lower99 > 0.0,
                });
                let s = summarize(c, &cb);
                cboots.push(cb);
                (Some(s), Some(m))
            }
            None => (None, None),
        };
        points.push(TfPoint { n, unconditioned: summarize(u, &ub), conditioned, method });
        uboots.push(ub);
    }
    let umed: Vec<f64> = points.iter().map(|p| p.unconditioned.median).collect();
    let unconditioned_fit = exponent_fit(n_grid, &umed, &uboots);
    let incomplete = points.iter().any(|p| p.conditioned.is_none());
    let conditioned_fit = (!incomplete).then(|| {
        let cmed: Vec<f64> = points.iter().map(|p| p.conditioned.as_ref().map_or(f64::NAN, |c| c.median)).collect();
        exponent_fit(n_grid, &cmed, &cboots)
    });
    Ok(TfReport { delta, points, unconditioned_fit, conditioned_fit, comparisons, incomplete })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub n: usize,
    pub t1: usize,
    pub t2: usize,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub first: LdEstimate,
    pub second: LdEstimate,
    pub log_product: f64,
    pub sigma: f64,
    /// `-n I(δ)`.
    pub base: f64,
    /// `t1 I(δ1) + t2 I(δ2) - n I(δ) >= 0`.
    pub penalty: f64,
    /// `base - penalty`.
    pub bound: f64,
    /// `log_product - 3σ <= bound`.
    pub passed: bool,
}

/// Both factors use `T'` on independent `t_i x t_i` squares, for which
/// `log P(T'_t >= (4+δ)t) <= -t I(δ)` holds exactly.
pub fn two_scale_split_probe(
    n: usize,
    t1: usize,
    delta: f64,
    delta1: f64,
    delta2: f64,
    trials: usize,
    seed: u64,
) -> Result<SplitReport> {
    if t1 == 0 || t1 >= n {
        return Err(Error::Range(format!("need 0 < t1 < n, got t1 = {t1}, n = {n}")));
    }
    let t2 = n - t1;
    let mix = t1 as f64 * delta1 + t2 as f64 * delta2;
    if mix < n as f64 * delta * (1.0 - 1e-12) {
        return Err(Error::Constraint(format!("t1·δ1 + t2·δ2 = {mix} is below n·δ = {}", n as f64 * delta)));
    }
    let e1 = LdEvent::upper(t1, delta1)?;
    let e2 = LdEvent::upper(t2, delta2)?;
    let factor = |ev: &LdEvent, k: u64| -> Result<LdEstimate> {
        let s = derive_seed(seed, k);
        let plan = tuned_plan(Statistic::Truncated, ev.n, ev.n, ev.threshold(), trials, derive_seed(s, 1))?;
        estimate_event(ev, Statistic::Truncated, &plan, trials, derive_seed(s, 2))
    };
    let first = factor(&e1, 1)?;
    let second = factor(&e2, 2)?;
    let i = |d: f64| rate_i(d).map(|r| r.value);
    let base = -(n as f64) * i(delta)?;
    let penalty = t1 as f64 * i(delta1)? + t2 as f64 * i(delta2)? + base;
    let log_product = first.log_p + second.log_p;
    let sigma = first.std_err.hypot(second.std_err);
    let bound = base - penalty;
    Ok(SplitReport {
        n,
        t1,
        t2,
        delta,
        delta1,
        delta2,
        passed: log_product - 3.0 * sigma <= bound,
        first,
        second,
        log_product,
        sigma,
        base,
        penalty,
        bound,
    })
}

/// `P(ℓ(Γ(v)) >= s)` for `v = (t/2 + k, t/2 - k)` on the anti-diagonal
/// `x + y = t`, by plain sampling. Entries are `(k, fraction, std_err)`.
pub fn passage_through_tail(
    n: usize,
    t: usize,
    offsets: &[usize],
    s: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    if t % 2 == 1 || t < 2 || t > 2 * n {
        return Err(Error::Range(format!("anti-diagonal t = {t} must be even and meet the grid")));
    }
    let h = t / 2;
    for &k in offsets {
        if h + k > n || h <= k {
            return Err(Error::Range(format!("offset {k} leaves the grid on t = {t}")));
        }
    }
    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let f = WeightField::sample(n, n, trial_seed(seed, i))?;
            let all = passage_through_all(&f);
            Ok(offsets.iter().map(|&k| u64::from(all[(h + k - 1) * n + (h - k - 1)] >= s)).collect::<Vec<u64>>())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(vec![0u64; offsets.len()], |mut acc, v| {
            acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
            acc
        });
    Ok(offsets
        .iter()
        .zip(counts)
        .map(|(&k, c)| {
            let p = c as f64 / trials as f64;
            (k, p, (p * (1.0 - p) / trials as f64).sqrt())
        })
        .collect())
}
