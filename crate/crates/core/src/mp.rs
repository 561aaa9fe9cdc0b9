//! Marchenko–Pastur laws: density, quadrature, CDF and quantiles, classical
//! eigenvalue locations, and two closed-form integrals against the `y = 1`
//! law used by the curvature calculus.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, QuadMethod, QuadResult, QuadratureSpec};

/// Marchenko–Pastur law `MP_y` with support `[a, b]`,
/// `a = (1 - sqrt y)^2`, `b = (1 + sqrt y)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpLaw {
    pub y: f64,
    pub a: f64,
    pub b: f64,
}

impl MpLaw {
    pub fn new(y: f64) -> Result<Self> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::Domain(format!("MP parameter y = {y} must lie in (0, 1]")));
        }
        let r = y.sqrt();
        Ok(Self { y, a: (1.0 - r) * (1.0 - r), b: (1.0 + r) * (1.0 + r) })
    }

    /// The standard law `MP = MP_1` on `[0, 4]`.
    pub fn standard() -> Self {
        Self { y: 1.0, a: 0.0, b: 4.0 }
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    /// Angle of the cosine substitution that maps to `x`; `x = b` at 0 and
    /// `x = a` at pi.
    fn theta_of(&self, x: f64) -> f64 {
        let t = ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0);
        2.0 * t.sqrt().acos()
    }

    /// Point on the support for angle `theta`, with `b - x` computed without
    /// cancellation.
    #[inline]
    fn point(&self, theta: f64) -> (f64, f64) {
        let h = self.half_width();
        let (s, c) = (0.5 * theta).sin_cos();
        (self.a + 2.0 * h * c * c, 2.0 * h * s * s)
    }
}

/// Density of `MP_y` at `x`; zero off `(a, b)`.
pub fn mp_density(law: &MpLaw, x: f64) -> f64 {
    if x <= law.a || x >= law.b || x <= 0.0 {
        return 0.0;
    }
    ((law.b - x) * (x - law.a)).sqrt() / (2.0 * PI * x * law.y)
}

/// `∫ f dMP_y` for an integrand given `(x, b - x)`; `x_breaks` are interior
/// points in `(a, b)` at which panels must be split.
pub fn mp_integrate_edge<F: Fn(f64, f64) -> f64>(
    law: &MpLaw,
    f: F,
    spec: &QuadratureSpec,
    x_breaks: &[f64],
) -> Result<QuadResult> {
    spec.validate()?;
    match spec.method {
        QuadMethod::ChebyshevSubstitution => {
            let h = law.half_width();
            let y = law.y;
            let g = |theta: f64| {
                let (x, bx) = law.point(theta);
                let (s, c) = (0.5 * theta).sin_cos();
                // (b - x)(x - a) = 4 h^2 sin^2(t/2) cos^2(t/2); dx = h sin(t) dt.
                // density * dx = 2 h^2 sin^2(t) / (2 pi y x) dt
                let sin_t = 2.0 * s * c;
                let w = h * h * sin_t * sin_t / (2.0 * PI * y * x);
                if w == 0.0 {
                    0.0
                } else {
                    f(x, bx) * w
                }
            };
            let mut breaks = vec![0.0];
            let mut inner: Vec<f64> =
                x_breaks.iter().filter(|&&x| x > law.a && x < law.b).map(|&x| law.theta_of(x)).collect();
            inner.sort_by(f64::total_cmp);
            breaks.extend(inner);
            breaks.push(0.5 * PI);
            breaks.push(PI);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            integrate_adaptive(g, &breaks, spec.target_abs_tol, spec.max_subdivisions)
        }
        QuadMethod::Adaptive => {
            let g = |x: f64| {
                let d = mp_density(law, x);
                if d == 0.0 {
                    0.0
                } else {
                    f(x, law.b - x) * d
                }
            };
            let mut breaks = vec![law.a, law.b];
            breaks.extend(x_breaks.iter().filter(|&&x| x > law.a && x < law.b));
            breaks.sort_by(f64::total_cmp);
            integrate_adaptive(g, &breaks, spec.target_abs_tol, spec.max_subdivisions)
        }
    }
}

/// `∫ f dMP_y`.
pub fn mp_integrate<F: Fn(f64) -> f64>(law: &MpLaw, f: F, spec: &QuadratureSpec) -> Result<QuadResult> {
    mp_integrate_edge(law, |x, _| f(x), spec, &[])
}

/// `∫ f(x, 4 + delta - x) dMP_y` for integrands built on `log(4 + delta - x)`
/// or its powers. When the pole `4 + delta` sits within one unit of the upper
/// edge the last panel is split at `b - min(delta, 1)` and refined once more.
pub fn mp_integrate_near_pole<F: Fn(f64, f64) -> f64>(
    law: &MpLaw,
    delta: f64,
    f: F,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    // distance from x to the pole 4 + delta, accurate near the edge
    let gap = 4.0 + delta - law.b;
    let g = |x: f64, bx: f64| f(x, bx + gap);
    let dist = (4.0 + delta - law.b).max(0.0);
    let mut breaks = Vec::new();
    if dist < 1.0 {
        let s = dist.max(delta).min(1.0);
        breaks.push(law.b - s);
        breaks.push(law.b - 0.5 * s);
        breaks.push(law.b - 0.25 * s);
    }
    mp_integrate_edge(law, g, spec, &breaks)
}

/// Cumulative distribution function of `MP_y`.
pub fn mp_cdf(law: &MpLaw, x: f64) -> f64 {
    if x <= law.a {
        return 0.0;
    }
    if x >= law.b {
        return 1.0;
    }
    let theta_x = law.theta_of(x);
    let h = law.half_width();
    let y = law.y;
    let g = |theta: f64| {
        let (xx, _) = law.point(theta);
        let sin_t = theta.sin();
        if xx <= 0.0 {
            return 0.0;
        }
        h * h * sin_t * sin_t / (2.0 * PI * y * xx)
    };
    let mut breaks = vec![theta_x, PI];
    if theta_x < 0.5 * PI {
        breaks.insert(1, 0.5 * PI);
    }
    let r = integrate_adaptive(g, &breaks, 1e-15, 5000).unwrap_or_else(|e| match e {
        Error::ToleranceNotMet { estimate, .. } => QuadResult { value: estimate, abs_err: f64::NAN, subdivisions: 0 },
        _ => unreachable!(),
    });
    r.value.clamp(0.0, 1.0)
}

/// Quantile of `MP_y` by bisection on the CDF to `1e-12` in `x`.
pub fn mp_quantile(law: &MpLaw, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range(format!("probability {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(law.a);
    }
    if p == 1.0 {
        return Ok(law.b);
    }
    let (mut lo, mut hi) = (law.a, law.b);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mp_cdf(law, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Classical eigenvalue locations `gamma_1 >= ... >= gamma_N` solving
/// `∫^{gamma_j} dMP_y = 1 - j/N`.
pub fn classical_locations(law: &MpLaw, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Dimension("N must be at least 1".into()));
    }
    (1..=n).map(|j| mp_quantile(law, 1.0 - j as f64 / n as f64)).collect()
}

fn check_positive(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("coefficients must be positive, got ({a}, {b})")));
    }
    Ok(())
}

/// `∫_0^4 sqrt(x(4-x)) / (2π(a x + b)) dx = (2a + b - sqrt(4ab + b^2)) / (2a^2)`.
///
/// Evaluated in the rationalised form `2 / (2a + b + sqrt(4ab + b^2))`.
pub fn closed_form_sqrt_rational(a: f64, b: f64) -> Result<f64> {
    check_positive(a, b)?;
    Ok(2.0 / (2.0 * a + b + (4.0 * a * b + b * b).sqrt()))
}

/// `∫_0^4 dx / (sqrt(x)(b x + a)) = 2 arctan(2 sqrt(b/a)) / sqrt(ab)`.
pub fn closed_form_arctan(a: f64, b: f64) -> Result<f64> {
    check_positive(a, b)?;
    Ok(2.0 * (2.0 * (b / a).sqrt()).atan() / (a * b).sqrt())
}

/// `∫_0^4 f(x) / (π sqrt(x(4-x))) dx`, the arcsine law on `[0, 4]`, through
/// `x = 2 + 2 cos θ`. The integrand receives `(x, 4 - x)`.
pub fn arcsine_integrate<F: Fn(f64, f64) -> f64>(
    f: F,
    spec: &QuadratureSpec,
    theta_breaks: &[f64],
) -> Result<QuadResult> {
    let g = |theta: f64| {
        let (s, c) = (0.5 * theta).sin_cos();
        f(4.0 * c * c, 4.0 * s * s) / PI
    };
    let mut breaks = vec![0.0, 0.5 * PI, PI];
    breaks.extend(theta_breaks.iter().filter(|&&t| t > 0.0 && t < PI));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    integrate_adaptive(g, &breaks, spec.target_abs_tol, spec.max_subdivisions)
}
