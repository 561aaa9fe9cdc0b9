use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::Dd;

/// Largest supported `M + N`.
pub const KERNEL_SIZE_CAP: usize = 60;

/// Projection onto `span{x^a, ..., x^(a+N-1)}`, `a = (M-N)/2`, in
/// `L²(ℝ₊, e^{-x} dx)`.
///
/// Gram–Schmidt runs on the monomials in exact rational arithmetic against
/// the factorial moments `∫ x^k e^{-x} dx = k!`. The resulting coefficients
/// are rounded once to double-double and evaluated in double-double.
#[derive(Debug, Clone)]
pub struct ProjectionKernel {
    m: usize,
    n: usize,
    a: usize,
    /// `coeffs[k][i]` multiplies `x^(a+i)` in `φ_k`.
    coeffs: Vec<Vec<Dd>>,
}

fn rational_to_dd(r: &BigRational) -> Dd {
    let hi = r.to_f64().unwrap_or(f64::NAN);
    let rest = r - BigRational::from_float(hi).expect("finite");
    Dd::new(hi) + Dd::new(rest.to_f64().unwrap_or(0.0))
}

pub fn build_projection_kernel(m: usize, n: usize) -> Result<ProjectionKernel> {
    if n == 0 || m < n {
        return Err(Error::Dimension(format!("need M >= N >= 1, got M = {m}, N = {n}")));
    }
    if (m - n) % 2 == 1 {
        return Err(Error::UnsupportedParity(m - n));
    }
    if m + n > KERNEL_SIZE_CAP {
        return Err(Error::Conditioning(format!("M + N = {} exceeds the cap {KERNEL_SIZE_CAP}", m + n)));
    }
    let a = (m - n) / 2;
    let mut fact = vec![BigRational::one()];
    for k in 1..=2 * a + 2 * n {
        let next = &fact[k - 1] * BigRational::from_integer((k as u64).into());
        fact.push(next);
    }
    let moment = |i: usize, j: usize| &fact[2 * a + i + j];

    // monic orthogonal p_k with coefficients over x^(a+i), and their norms
    let mut polys: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    let mut norms: Vec<BigRational> = Vec::with_capacity(n);
    for k in 0..n {
        let mut p = vec![BigRational::zero(); k + 1];
        p[k] = BigRational::one();
        for (q, nq) in polys.iter().zip(&norms) {
            let ip = q.iter().enumerate().fold(BigRational::zero(), |s, (i, c)| s + c * moment(k, i));
            let r = ip / nq;
            for (i, c) in q.iter().enumerate() {
                p[i] -= &r * c;
            }
        }
        let norm = p.iter().enumerate().fold(BigRational::zero(), |s, (i, c)| s + c * moment(k, i));
        if !norm.is_positive() {
            return Err(Error::Conditioning(format!("Gram–Schmidt norm {k} is not positive")));
        }
        polys.push(p);
        norms.push(norm);
    }
    let coeffs = polys
        .iter()
        .zip(&norms)
        .map(|(p, nk)| {
            let s = rational_to_dd(nk).sqrt();
            p.iter().map(|c| rational_to_dd(c) / s).collect()
        })
        .collect();
    Ok(ProjectionKernel { m, n, a, coeffs })
}

impl ProjectionKernel {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn phis_dd(&self, x: f64) -> Vec<Dd> {
        let xd = Dd::new(x);
        let mut xa = Dd::ONE;
        for _ in 0..self.a {
            xa = xa * xd;
        }
        self.coeffs.iter().map(|c| c.iter().rev().fold(Dd::ZERO, |s, ci| s * xd + *ci) * xa).collect()
    }

    /// The `N` orthonormal functions at `x`.
    pub fn phis(&self, x: f64) -> Vec<f64> {
        self.phis_dd(x).into_iter().map(Dd::to_f64).collect()
    }

    /// `K(x, y) = Σ φ_i(x) φ_i(y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (u, v) = (self.phis_dd(x), self.phis_dd(y));
        u.iter().zip(&v).fold(Dd::ZERO, |s, (a, b)| s + *a * *b).to_f64()
    }

    /// `[K(x_i, x_j)]`.
    pub fn gram(&self, xs: &[f64]) -> Vec<Vec<f64>> {
        let ph: Vec<Vec<Dd>> = xs.iter().map(|&x| self.phis_dd(x)).collect();
        ph.iter()
            .map(|u| ph.iter().map(|v| u.iter().zip(v).fold(Dd::ZERO, |s, (a, b)| s + *a * *b).to_f64()).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive;
    use nalgebra::DMatrix;
    use rand::Rng;
    use statrs::function::gamma::ln_gamma;

    /// Orthonormal generalized Laguerre functions by the three-term
    /// recurrence, a separate route to the same kernel.
    fn laguerre_kernel(m: usize, n: usize, x: f64, y: f64) -> f64 {
        let a = (m - n) / 2;
        let alpha = (2 * a) as f64;
        let lag = |x: f64| -> Vec<f64> {
            let mut v = vec![1.0, 1.0 + alpha - x];
            for k in 1..n {
                let k = k as f64;
                let next = ((2.0 * k + 1.0 + alpha - x) * v[k as usize] - (k + alpha) * v[k as usize - 1]) / (k + 1.0);
                v.push(next);
            }
            v.truncate(n);
            v
        };
        let (lx, ly) = (lag(x), lag(y));
        let mut s = 0.0;
        for k in 0..n {
            let log_norm = ln_gamma(k as f64 + alpha + 1.0) - ln_gamma(k as f64 + 1.0);
            s += lx[k] * ly[k] * (-log_norm).exp();
        }
        s * (x * y).powi(a as i32)
    }

    fn det(m: Vec<Vec<f64>>) -> f64 {
        let n = m.len();
        DMatrix::from_fn(n, n, |i, j| m[i][j]).determinant()
    }

    #[test]
    fn errors() {
        assert_eq!(build_projection_kernel(5, 2).unwrap_err(), Error::UnsupportedParity(3));
        assert!(matches!(build_projection_kernel(32, 30), Err(Error::Conditioning(_))));
        assert!(matches!(build_projection_kernel(2, 3), Err(Error::Dimension(_))));
    }

    #[test]
    fn one_by_one_is_constant() {
        let k = build_projection_kernel(1, 1).unwrap();
        for (x, y) in [(0.0, 0.0), (0.3, 7.0), (40.0, 2.0)] {
            assert!((k.eval(x, y) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_laguerre_functions() {
        for (m, n) in [(2, 2), (7, 3), (12, 8), (30, 30), (40, 20), (59, 1)] {
            let k = build_projection_kernel(m, n).unwrap();
            for &(x, y) in &[(0.5, 0.5), (1.0, 9.0), (3.0, 40.0), (25.0, 26.0), (70.0, 80.0)] {
                let (got, want) = (k.eval(x, y), laguerre_kernel(m, n, x, y));
                let scale = (laguerre_kernel(m, n, x, x) * laguerre_kernel(m, n, y, y)).sqrt();
                assert!((got - want).abs() <= 1e-10 * scale, "({m},{n}) at ({x},{y}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn trace_is_n() {
        for (m, n) in [(1, 1), (4, 2), (10, 10), (30, 20), (30, 30)] {
            let k = build_projection_kernel(m, n).unwrap();
            let top = 4.0 * (m + n) as f64 + 60.0;
            let breaks: Vec<f64> = (0..=40).map(|i| top * i as f64 / 40.0).collect();
            let r = integrate_adaptive(|x| k.eval(x, x) * (-x).exp(), &breaks, 1e-13, 4000).unwrap();
            assert!((r.value - n as f64).abs() < 1e-8, "({m},{n}): {}", r.value);
        }
    }

    #[test]
    fn two_point_density_ratio_is_constant() {
        for (m, n) in [(2, 2), (4, 2)] {
            let k = build_projection_kernel(m, n).unwrap();
            let mut rng = crate::rng::stream(17, 0);
            let mut ratios = Vec::new();
            for _ in 0..50 {
                let (x, y): (f64, f64) = (rng.random::<f64>() * 8.0 + 0.01, rng.random::<f64>() * 8.0 + 0.01);
                let d = det(k.gram(&[x, y])) * (-x - y).exp();
                let lue = (x - y).powi(2) * (x * y).powi((m - n) as i32) * (-x - y).exp();
                ratios.push(d / lue);
            }
            let r0 = ratios[0];
            assert!(ratios.iter().all(|r| (r / r0 - 1.0).abs() < 1e-8), "{ratios:?}");
        }
    }

    #[test]
    fn kernel_difference_is_psd() {
        let mut rng = crate::rng::stream(23, 0);
        for (m, n) in [(2, 2), (6, 4), (10, 8)] {
            let big = build_projection_kernel(m, n).unwrap();
            let small = build_projection_kernel(m + 1, n - 1).unwrap();
            for _ in 0..5 {
                let xs: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 20.0).collect();
                let (g1, g2) = (big.gram(&xs), small.gram(&xs));
                let d = DMatrix::from_fn(12, 12, |i, j| g1[i][j] - g2[i][j]);
                let scale = g1.iter().enumerate().map(|(i, r)| r[i]).fold(0.0, f64::max);
                let min = d.symmetric_eigenvalues().min();
                assert!(min >= -1e-10 * scale, "({m},{n}): {min}");
            }
        }
    }
}
