//! Complex Wishart (LUE) spectra and the experiments built on them.
//!
//! Entries of `X` (`M x N`) are standard complex Gaussians with
//! `E|X_ij|^2 = 1`. Unscaled eigenvalues `λ̂_i` are those of `X*X`; the
//! scaled ones are `λ_i = λ̂_i / M`.

mod experiments;
mod kernel;

pub use experiments::*;
pub use kernel::*;

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigenvalues;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Dense,
    Bidiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WishartSpec {
    pub m: usize,
    pub n: usize,
    pub scaled: bool,
}

impl WishartSpec {
    pub fn new(m: usize, n: usize, scaled: bool) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::Dimension(format!("need M >= N >= 1, got M = {m}, N = {n}")));
        }
        Ok(Self { m, n, scaled })
    }

    /// `y = N / M`.
    pub fn y(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    /// Bidiagonal above `N = 64`, dense otherwise.
    pub fn default_backend(&self) -> Backend {
        if self.n > 64 {
            Backend::Bidiagonal
        } else {
            Backend::Dense
        }
    }

    fn factor(&self) -> f64 {
        if self.scaled {
            1.0 / self.m as f64
        } else {
            1.0
        }
    }
}

/// Eigenvalues in decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub spec: WishartSpec,
    pub values: Vec<f64>,
    pub seed: u64,
    pub backend: Backend,
    /// Set when the first draw produced a tie or a nonpositive value and was
    /// replaced by a fresh draw.
    pub resampled: bool,
}

impl Spectrum {
    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Gamma(k, 1) for integer `k >= 1`: a sum of exponentials for small `k`,
/// Marsaglia–Tsang otherwise.
pub fn gamma_int<R: Rng + ?Sized>(k: usize, rng: &mut R) -> f64 {
    if k <= 6 {
        (0..k).map(|_| -> f64 { Exp1.sample(rng) }).sum()
    } else {
        Gamma::new(k as f64, 1.0).expect("positive shape").sample(rng)
    }
}

/// Tridiagonal `B B^T` for the lower-bidiagonal model: diagonal entries of
/// `B` squared are Gamma(M-i+1, 1), subdiagonal entries squared are
/// Gamma(N-i, 1), `i = 1..N`. Eigenvalues are the unscaled `λ̂`.
pub fn bidiagonal_tridiagonal<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let d2: Vec<f64> = (1..=n).map(|i| gamma_int(m - i + 1, rng)).collect();
    let e2: Vec<f64> = (1..n).map(|i| gamma_int(n - i, rng)).collect();
    let diag = (0..n).map(|i| d2[i] + if i > 0 { e2[i - 1] } else { 0.0 }).collect();
    let off = (0..n.saturating_sub(1)).map(|i| (d2[i] * e2[i]).sqrt()).collect();
    (diag, off)
}

fn draw_bidiagonal(spec: &WishartSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (diag, off) = bidiagonal_tridiagonal(spec.m, spec.n, rng);
    tridiagonal_eigenvalues(&diag, &off)
}

fn draw_dense(spec: &WishartSpec, rng: &mut ChaCha8Rng, seed: u64) -> Result<Vec<f64>> {
    let mut gauss = || -> f64 { StandardNormal.sample(rng) };
    let x = DMatrix::<Complex<f64>>::from_fn(spec.m, spec.n, |_, _| {
        Complex::new(gauss() * FRAC_1_SQRT_2, gauss() * FRAC_1_SQRT_2)
    });
    let a = x.adjoint() * &x;
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 200 * spec.n.max(1))
        .ok_or_else(|| Error::Numeric { seed, msg: "Hermitian eigensolver did not converge".into() })?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

fn well_formed(v: &[f64]) -> bool {
    v.iter().all(|x| *x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[0] > w[1])
}

pub fn sample_spectrum(spec: &WishartSpec, seed: u64) -> Result<Spectrum> {
    sample_spectrum_with(spec, seed, spec.default_backend())
}

pub fn sample_spectrum_with(spec: &WishartSpec, seed: u64, backend: Backend) -> Result<Spectrum> {
    for attempt in 0..8u64 {
        let mut rng = stream(seed, attempt);
        let raw = match backend {
            Backend::Dense => draw_dense(spec, &mut rng, seed)?,
            Backend::Bidiagonal => draw_bidiagonal(spec, &mut rng),
        };
        if well_formed(&raw) {
            let f = spec.factor();
            return Ok(Spectrum {
                spec: *spec,
                values: raw.into_iter().map(|x| x * f).collect(),
                seed,
                backend,
                resampled: attempt > 0,
            });
        }
    }
    Err(Error::Numeric { seed, msg: "spectrum had ties or nonpositive values in eight consecutive draws".into() })
}
