//! Upper-tail rare events of `T_n`: rejection, exponential tilting and the
//! experiments built on them.
//!
//! Two importance proposals are available. [`TiltPlan`] tilts a fixed set of
//! vertices (a diagonal strip, or everything). [`SamplingPlan::PathMixture`]
//! picks a uniformly random up-right path and tilts only its vertices; the
//! likelihood ratio is then `|Π| / Σ_π Π_{v∈π} (1-θ)e^{θX_v}`, one forward
//! pass in log space.

mod experiments;

pub use experiments::*;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::lpp::{geodesic, last_passage_with, sampled_last_passage, GeodesicRecord, WeightField};
use crate::rates::rate_i;
use crate::rng::{cell_exp, derive_seed, stream, trial_seed};
use crate::stats::{wilson_interval, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Upper,
    Lower,
}

/// `{T_n >= (4+δ)n}` or `{T_n <= (4-δ)n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdEvent {
    pub kind: Tail,
    pub delta: f64,
    pub n: usize,
}

impl LdEvent {
    pub fn new(kind: Tail, n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("n must be at least 1".into()));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        if kind == Tail::Lower && delta >= 4.0 {
            return Err(Error::Domain(format!("lower tail needs delta < 4, got {delta}")));
        }
        Ok(Self { kind, delta, n })
    }

    pub fn upper(n: usize, delta: f64) -> Result<Self> {
        Self::new(Tail::Upper, n, delta)
    }

    pub fn threshold(&self) -> f64 {
        match self.kind {
            Tail::Upper => (4.0 + self.delta) * self.n as f64,
            Tail::Lower => (4.0 - self.delta) * self.n as f64,
        }
    }

    pub fn holds(&self, t: f64) -> bool {
        match self.kind {
            Tail::Upper => t >= self.threshold(),
            Tail::Lower => t <= self.threshold(),
        }
    }
}

/// Tilt every vertex with `|x - y| <= strip_half_width·√n` to Exp(1-θ);
/// a zero width tilts the whole grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltPlan {
    pub theta: f64,
    pub strip_half_width: f64,
}

impl TiltPlan {
    pub fn new(theta: f64, strip_half_width: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::Domain(format!("theta must lie in [0, 1), got {theta}")));
        }
        if !(strip_half_width >= 0.0) {
            return Err(Error::Domain(format!("strip half-width must be >= 0, got {strip_half_width}")));
        }
        Ok(Self { theta, strip_half_width })
    }

    pub fn full(theta: f64) -> Result<Self> {
        Self::new(theta, 0.0)
    }

    pub fn tilts(&self, n: usize, r: usize, c: usize) -> bool {
        self.strip_half_width == 0.0 || (r.abs_diff(c) as f64) <= self.strip_half_width * (n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplingPlan {
    /// Plain Monte Carlo.
    Rejection,
    Tilt(TiltPlan),
    /// Tilts the cells of a uniformly random up-right path.
    PathMixture {
        theta: f64,
    },
}

impl SamplingPlan {
    pub fn path_mixture(theta: f64) -> Result<Self> {
        TiltPlan::full(theta)?;
        Ok(SamplingPlan::PathMixture { theta })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingPlan::Rejection => Ok(()),
            SamplingPlan::Tilt(p) => TiltPlan::new(p.theta, p.strip_half_width).map(|_| ()),
            SamplingPlan::PathMixture { theta } => TiltPlan::full(theta).map(|_| ()),
        }
    }
}

/// Which passage statistic an event is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `T_{u,v}`.
    Full,
    /// `T'_{u,v} = T_{u,v} - X_v`.
    Truncated,
}

/// Estimate of `log P(event)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdEstimate {
    pub log_p: f64,
    /// Delta-method standard error of `log_p`.
    pub std_err: f64,
    /// `(Σ L)² / Σ L²` over trials in the event.
    pub ess: f64,
    pub trials: usize,
    pub hits: usize,
    pub plan: SamplingPlan,
    /// Set when `ess < MIN_ESS`; the estimate is then not trustworthy.
    pub degenerate: bool,
}

pub const MIN_ESS: f64 = 30.0;

impl LdEstimate {
    pub fn p(&self) -> f64 {
        self.log_p.exp()
    }

    /// Combines per-trial `(hit, log L)` pairs in trial order.
    pub fn from_trials(plan: SamplingPlan, samples: &[(bool, f64)]) -> Self {
        let trials = samples.len();
        let hits: Vec<f64> = samples.iter().filter(|s| s.0).map(|s| s.1).collect();
        if hits.is_empty() {
            return LdEstimate {
                log_p: f64::NEG_INFINITY,
                std_err: f64::INFINITY,
                ess: 0.0,
                trials,
                hits: 0,
                plan,
                degenerate: true,
            };
        }
        let m = hits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut s1, mut s2) = (KahanSum::new(), KahanSum::new());
        for l in &hits {
            let e = (l - m).exp();
            s1.add(e);
            s2.add(e * e);
        }
        let (s1, s2) = (s1.value(), s2.value());
        let nf = trials as f64;
        let rel_var = if trials > 1 { ((nf * s2 / (s1 * s1) - 1.0) / (nf - 1.0)).max(0.0) } else { 0.0 };
        let ess = s1 * s1 / s2;
        LdEstimate {
            log_p: m + s1.ln() - nf.ln(),
            std_err: rel_var.sqrt(),
            ess,
            trials,
            hits: hits.len(),
            plan,
            degenerate: ess < MIN_ESS,
        }
    }
}

/// A field drawn under a proposal, with `log dP/dQ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedField {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub log_lr: f64,
}

impl TiltedField {
    pub fn passage(&self) -> (f64, f64) {
        let w = &self.weights;
        let cols = self.cols;
        last_passage_with(self.rows, self.cols, |r, c| w[(r - 1) * cols + c - 1])
    }

    pub fn statistic(&self, stat: Statistic) -> f64 {
        let (t, x) = self.passage();
        match stat {
            Statistic::Full => t,
            Statistic::Truncated => t - x,
        }
    }

    pub fn to_field(&self) -> Result<WeightField> {
        WeightField::from_values(self.rows, self.cols, self.weights.clone())
    }
}

const PATH_STREAM: u64 = 0x7a11;

/// Uniformly random up-right path from `(1,1)` to `(rows,cols)`, as a
/// row-major mask.
fn random_path_mask(rows: usize, cols: usize, seed: u64) -> Vec<bool> {
    let mut rng = stream(seed, PATH_STREAM);
    let mut mask = vec![false; rows * cols];
    let (mut r, mut c) = (1, 1);
    mask[0] = true;
    while (r, c) != (rows, cols) {
        let (down, right) = ((rows - r) as f64, (cols - c) as f64);
        if rng.random::<f64>() * (down + right) < down {
            r += 1;
        } else {
            c += 1;
        }
        mask[(r - 1) * cols + c - 1] = true;
    }
    mask
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ_π Π_{v∈π} e^{lw_v}` over up-right paths of a `rows x cols` grid.
/// Runs in linear space with one rescale per row, falling back to log
/// space on overflow or underflow.
pub fn log_path_partition(rows: usize, cols: usize, log_weight: &[f64]) -> f64 {
    let mut z = vec![0.0; cols];
    let mut offset = 0.0;
    for r in 0..rows {
        let row = &log_weight[r * cols..(r + 1) * cols];
        let mut left = 0.0;
        for c in 0..cols {
            let up = if r > 0 {
                z[c]
            } else if c == 0 {
                1.0
            } else {
                0.0
            };
            left = row[c].exp() * (up + left);
            z[c] = left;
        }
        let top = z.iter().copied().fold(0.0, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return log_path_partition_logspace(rows, cols, log_weight);
        }
        z.iter_mut().for_each(|v| *v /= top);
        offset += top.ln();
    }
    if z[cols - 1] > 0.0 {
        offset + z[cols - 1].ln()
    } else {
        log_path_partition_logspace(rows, cols, log_weight)
    }
}

fn log_path_partition_logspace(rows: usize, cols: usize, log_weight: &[f64]) -> f64 {
    let mut z = vec![f64::NEG_INFINITY; cols];
    for r in 0..rows {
        for c in 0..cols {
            let prev = match (r, c) {
                (0, 0) => 0.0,
                (0, _) => z[c - 1],
                (_, 0) => z[c],
                _ => log_add_exp(z[c], z[c - 1]),
            };
            z[c] = log_weight[r * cols + c] + prev;
        }
    }
    z[cols - 1]
}

/// Draws a `rows x cols` field under `plan`. Base Exp(1) variables are the
/// cell draws of `seed`, so `Rejection` reproduces `WeightField::sample`.
pub fn draw_field(plan: &SamplingPlan, rows: usize, cols: usize, seed: u64) -> TiltedField {
    let base = |r: usize, c: usize| cell_exp(seed, r, c);
    match *plan {
        SamplingPlan::Rejection => TiltedField {
            rows,
            cols,
            weights: (0..rows * cols).map(|i| base(i / cols + 1, i % cols + 1)).collect(),
            log_lr: 0.0,
        },
        SamplingPlan::Tilt(tp) => {
            let n = rows.max(cols);
            let scale = 1.0 / (1.0 - tp.theta);
            let mut log_lr = KahanSum::new();
            let weights = (0..rows * cols)
                .map(|i| {
                    let (r, c) = (i / cols + 1, i % cols + 1);
                    if tp.tilts(n, r, c) {
                        let x = base(r, c) * scale;
                        log_lr.add(-tp.theta * x - (1.0 - tp.theta).ln());
                        x
                    } else {
                        base(r, c)
                    }
                })
                .collect();
            TiltedField { rows, cols, weights, log_lr: log_lr.value() }
        }
        SamplingPlan::PathMixture { theta } => {
            let mask = random_path_mask(rows, cols, seed);
            let scale = 1.0 / (1.0 - theta);
            let weights: Vec<f64> = (0..rows * cols)
                .map(|i| {
                    let x = base(i / cols + 1, i % cols + 1);
                    if mask[i] {
                        x * scale
                    } else {
                        x
                    }
                })
                .collect();
            let lc = (1.0 - theta).ln();
            let lw: Vec<f64> = weights.iter().map(|x| lc + theta * x).collect();
            let log_paths = ln_binomial((rows + cols - 2) as u64, (rows - 1) as u64);
            let log_lr = log_paths - log_path_partition(rows, cols, &lw);
            TiltedField { rows, cols, weights, log_lr }
        }
    }
}

/// Per-trial `(hit, log L)` for `stat >= threshold` on a `rows x cols` grid,
/// in trial order.
pub fn tail_trials(
    plan: &SamplingPlan,
    stat: Statistic,
    rows: usize,
    cols: usize,
    threshold: f64,
    trials: usize,
    seed: u64,
) -> Vec<(bool, f64)> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let f = draw_field(plan, rows, cols, trial_seed(seed, i));
            (f.statistic(stat) >= threshold, f.log_lr)
        })
        .collect()
}

pub const MIN_TRIALS: usize = 1000;

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::Range(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// `log P(T_n >= (4+δ)n)` under `plan`.
pub fn importance_estimate(n: usize, delta: f64, plan: &SamplingPlan, trials: usize, seed: u64) -> Result<LdEstimate> {
    let ev = LdEvent::upper(n, delta)?;
    estimate_event(&ev, Statistic::Full, plan, trials, seed)
}

pub fn estimate_event(
    ev: &LdEvent,
    stat: Statistic,
    plan: &SamplingPlan,
    trials: usize,
    seed: u64,
) -> Result<LdEstimate> {
    plan.validate()?;
    check_trials(trials)?;
    let samples: Vec<(bool, f64)> = match ev.kind {
        Tail::Upper => tail_trials(plan, stat, ev.n, ev.n, ev.threshold(), trials, seed),
        Tail::Lower => (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let f = draw_field(plan, ev.n, ev.n, trial_seed(seed, i));
                (f.statistic(stat) <= ev.threshold(), f.log_lr)
            })
            .collect(),
    };
    Ok(LdEstimate::from_trials(*plan, &samples))
}

/// ESS by `θ` on a pilot run, with the maximizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaChoice {
    pub theta: f64,
    /// `(θ, ESS)` per grid point.
    pub grid: Vec<(f64, f64)>,
    /// Pilot estimate at the chosen `θ`.
    pub pilot: LdEstimate,
}

pub fn default_theta_grid() -> Vec<f64> {
    (0..=10).map(|i| (25 + 5 * i) as f64 / 100.0).collect()
}

/// Path-mixture `θ` maximizing the ESS of the pilot estimate of
/// `P(stat >= threshold)` on a `rows x cols` grid.
pub fn choose_theta(
    stat: Statistic,
    rows: usize,
    cols: usize,
    threshold: f64,
    grid: &[f64],
    pilot_trials: usize,
    seed: u64,
) -> Result<ThetaChoice> {
    if grid.is_empty() {
        return Err(Error::Range("empty theta grid".into()));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut best: Option<LdEstimate> = None;
    for (k, &theta) in grid.iter().enumerate() {
        let plan = SamplingPlan::path_mixture(theta)?;
        let s = tail_trials(&plan, stat, rows, cols, threshold, pilot_trials, derive_seed(seed, k as u64));
        let est = LdEstimate::from_trials(plan, &s);
        out.push((theta, est.ess));
        if best.as_ref().is_none_or(|b| est.ess > b.ess) {
            best = Some(est);
        }
    }
    let pilot = best.expect("grid is nonempty");
    let SamplingPlan::PathMixture { theta } = pilot.plan else { unreachable!() };
    Ok(ThetaChoice { theta, grid: out, pilot })
}

/// Accepted fields from plain sampling, conditioned on `U_δ(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionSample {
    pub n: usize,
    pub delta: f64,
    pub budget: u64,
    pub pilot_acceptance: f64,
    pub trials: u64,
    pub accepted: u64,
    pub acceptance: f64,
    /// Wilson 95% interval for the acceptance rate.
    pub ci: (f64, f64),
    pub records: Vec<GeodesicRecord>,
}

pub const PILOT_TRIALS: u64 = 10_000;
pub const MIN_REJECTION_ACCEPTANCE: f64 = 1e-6;
/// Largest `n·I(δ)` for which rejection is attempted.
pub const MAX_REJECTION_EXPONENT: f64 = 16.0;

const PILOT_STREAM: u64 = 0x9170;
const MAIN_STREAM: u64 = 0x3a17;
const CHUNK: u64 = 1 << 14;

/// Pilot acceptance of `U_δ(n)`; with no pilot hits the rate-engine value
/// `e^{-nI(δ)}` stands in.
pub fn rejection_feasibility(n: usize, delta: f64, seed: u64) -> Result<f64> {
    let ev = LdEvent::upper(n, delta)?;
    let exponent = n as f64 * rate_i(delta)?.value;
    let pseed = derive_seed(seed, PILOT_STREAM);
    let hits = (0..PILOT_TRIALS)
        .into_par_iter()
        .filter(|&i| ev.holds(sampled_last_passage(n, n, trial_seed(pseed, i)).value))
        .count();
    let pilot = if hits > 0 { hits as f64 / PILOT_TRIALS as f64 } else { (-exponent).exp() };
    if pilot < MIN_REJECTION_ACCEPTANCE || exponent > MAX_REJECTION_EXPONENT {
        return Err(Error::Budget {
            pilot,
            msg: format!("rejection for n = {n}, delta = {delta} is infeasible (n·I(δ) = {exponent:.3})"),
        });
    }
    Ok(pilot)
}

/// Samples up to `budget` fields and keeps the geodesics of those in
/// `U_δ(n)`.
pub fn rejection_conditional_samples(n: usize, delta: f64, budget: u64, seed: u64) -> Result<RejectionSample> {
    rejection_conditional_samples_until(n, delta, budget, usize::MAX, seed)
}

/// As [`rejection_conditional_samples`], stopping after the first chunk of
/// trials that brings the accepted count to `max_accepted`.
pub fn rejection_conditional_samples_until(
    n: usize,
    delta: f64,
    budget: u64,
    max_accepted: usize,
    seed: u64,
) -> Result<RejectionSample> {
    let pilot_acceptance = rejection_feasibility(n, delta, seed)?;
    let ev = LdEvent::upper(n, delta)?;
    let mseed = derive_seed(seed, MAIN_STREAM);
    let mut records = Vec::new();
    let mut trials = 0u64;
    while trials < budget && records.len() < max_accepted {
        let end = (trials + CHUNK).min(budget);
        let hits: Vec<u64> = (trials..end)
            .into_par_iter()
            .filter(|&i| ev.holds(sampled_last_passage(n, n, trial_seed(mseed, i)).value))
            .collect();
        let geos: Vec<GeodesicRecord> = hits
            .par_iter()
            .map(|&i| {
                let f = WeightField::sample(n, n, trial_seed(mseed, i))?;
                geodesic(&f, (1, 1), (n, n))
            })
            .collect::<Result<_>>()?;
        records.extend(geos);
        trials = end;
    }
    let accepted = records.len() as u64;
    Ok(RejectionSample {
        n,
        delta,
        budget,
        pilot_acceptance,
        trials,
        accepted,
        acceptance: accepted as f64 / trials.max(1) as f64,
        ci: wilson_interval(accepted, trials, 1.96),
        records,
    })
}

/// Importance-weighted conditional geodesics: `D_n` of every proposal field
/// in the event with its `log L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGeodesics {
    pub n: usize,
    pub delta: f64,
    pub plan: SamplingPlan,
    pub trials: usize,
    pub max_fluct: Vec<usize>,
    pub log_weights: Vec<f64>,
    pub ess: f64,
}

impl WeightedGeodesics {
    /// Weights rescaled to a maximum of one.
    pub fn weights(&self) -> Vec<f64> {
        let m = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_weights.iter().map(|l| (l - m).exp()).collect()
    }
}

pub fn weighted_conditional_geodesics(
    n: usize,
    delta: f64,
    plan: &SamplingPlan,
    trials: usize,
    seed: u64,
) -> Result<WeightedGeodesics> {
    plan.validate()?;
    let ev = LdEvent::upper(n, delta)?;
    let rows: Vec<Option<(usize, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let f = draw_field(plan, n, n, trial_seed(seed, i));
            if !ev.holds(f.passage().0) {
                return Ok(None);
            }
            let g = geodesic(&f.to_field()?, (1, 1), (n, n))?;
            Ok(Some((g.max_fluct, f.log_lr)))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<(usize, f64)> = rows.into_iter().flatten().collect();
    let pairs: Vec<(bool, f64)> = kept.iter().map(|&(_, l)| (true, l)).collect();
    let ess = if pairs.is_empty() { 0.0 } else { LdEstimate::from_trials(*plan, &pairs).ess };
    Ok(WeightedGeodesics {
        n,
        delta,
        plan: *plan,
        trials,
        max_fluct: kept.iter().map(|p| p.0).collect(),
        log_weights: kept.iter().map(|p| p.1).collect(),
        ess,
    })
}

/// One line of raw per-trial output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "D_max")]
    pub d_max: usize,
    pub accepted: bool,
    #[serde(rename = "L")]
    pub l: f64,
}

pub fn trial_records(n: usize, delta: f64, plan: &SamplingPlan, trials: usize, seed: u64) -> Result<Vec<TrialRecord>> {
    trial_records_range(n, delta, plan, 0..trials as u64, seed)
}

/// Records for trial indices `range`; the same index always yields the same
/// record, so chunked runs concatenate to a full one.
pub fn trial_records_range(
    n: usize,
    delta: f64,
    plan: &SamplingPlan,
    range: std::ops::Range<u64>,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    plan.validate()?;
    let ev = LdEvent::upper(n, delta)?;
    range
        .into_par_iter()
        .map(|i| {
            let f = draw_field(plan, n, n, trial_seed(seed, i));
            let g = geodesic(&f.to_field()?, (1, 1), (n, n))?;
            Ok(TrialRecord {
                trial: i,
                t: g.weight,
                d_max: g.max_fluct,
                accepted: ev.holds(g.weight),
                l: f.log_lr.exp(),
            })
        })
        .collect()
}
