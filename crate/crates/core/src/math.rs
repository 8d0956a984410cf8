//! Scalar normal-distribution helpers and quadrature rules shared across the
//! crate.

use crate::error::{invalid, Result};
use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

/// 1/sqrt(2*pi).
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, accurate over the full double
/// range (erfc keeps deep tails from cancelling; libm's erfc is correct to
/// about one ulp).
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// E[X 1{uX + vY <= 0}] for independent standard normals X, Y.
///
/// W = uX + vY is centered Gaussian with variance u^2 + v^2 and
/// E[X | W] = uW/(u^2+v^2), so the moment reduces to
/// u/(u^2+v^2) * E[W 1{W<=0}] = -u / sqrt(2 pi (u^2+v^2)).
#[inline]
pub fn gauss_half_moment(u: f64, v: f64) -> f64 {
    -u / (2.0 * PI * (u * u + v * v)).sqrt()
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE32: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static CACHE64: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        32 => CACHE32.get_or_init(|| legendre_rule(32)),
        64 => CACHE64.get_or_init(|| legendre_rule(64)),
        _ => panic!("only 32- and 64-point rules are cached"),
    }
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-angle initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and derivative at x, by recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (p0 - x * p1) / (1.0 - x * x);
    (p1, d)
}

/// Fixed Gauss-Legendre integral of `f` over [a, b].
pub fn integrate_gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + c * x);
    }
    acc * c
}

/// Adaptive Simpson integration with absolute tolerance. The recursion is
/// seeded from a 24-panel base partition so narrow features cannot slip
/// between the first probe points.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("integration bounds must be finite"));
    }
    const SEEDS: usize = 24;
    let mut evals = 3usize;
    let mut total = 0.0;
    let width = (b - a) / SEEDS as f64;
    for i in 0..SEEDS {
        let lo = a + width * i as f64;
        let hi = if i + 1 == SEEDS {
            b
        } else {
            a + width * (i + 1) as f64
        };
        let flo = f(lo);
        let fhi = f(hi);
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        let whole = simpson(lo, hi, flo, fm, fhi);
        total += adaptive_rec(
            f,
            lo,
            hi,
            flo,
            fm,
            fhi,
            whole,
            tol / SEEDS as f64,
            48,
            &mut evals,
        )?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > 4_000_000 {
        return Err(crate::error::Error::Numerical {
            message: "adaptive quadrature exceeded evaluation budget".into(),
        });
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Do not chase tolerances below rounding noise on this panel.
    let tol = tol.max(0.5 * f64::EPSILON * whole.abs());
    if delta.abs() <= 15.0 * tol || depth == 0 {
        return Ok(left + right + delta / 15.0);
    }
    let lv = adaptive_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals)?;
    let rv = adaptive_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals)?;
    Ok(lv + rv)
}

/// Iterated adaptive integral of `f(x, y)` over the box
/// [x_lo, x_hi] x [y_lo(x), y_hi(x)], absolute tolerance `tol`.
pub fn integrate_2d<F, L, U>(f: &F, x_lo: f64, x_hi: f64, y_lo: L, y_hi: U, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    U: Fn(f64) -> f64,
{
    let inner_tol = tol / (x_hi - x_lo).max(1.0) * 0.1;
    let inner = |x: f64| -> f64 {
        let lo = y_lo(x);
        let hi = y_hi(x);
        if hi <= lo {
            return 0.0;
        }
        integrate_adaptive(&|y| f(x, y), lo, hi, inner_tol).unwrap_or(f64::NAN)
    };
    let v = integrate_adaptive(&inner, x_lo, x_hi, tol)?;
    if !v.is_finite() {
        return Err(crate::error::Error::Numerical {
            message: "2-D quadrature produced a non-finite value".into(),
        });
    }
    Ok(v)
}

/// Composite Gauss-Legendre over panels that refine geometrically toward
/// `a`. Handles integrands whose variation concentrates near the left
/// endpoint (power-kernel covariance integrals after the smoothing
/// substitution).
pub fn integrate_gl_geometric<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, y_star: f64) -> f64 {
    debug_assert!(b >= a);
    if b - a <= 0.0 {
        return 0.0;
    }
    let first = y_star.clamp((b - a) * 1e-15, b - a);
    let mut acc = 0.0;
    let mut left = a;
    let mut width = first;
    loop {
        let right = (left + width).min(b);
        acc += integrate_gl(f, left, right, 32);
        if right >= b {
            break;
        }
        left = right;
        width *= 2.0;
    }
    acc
}

/// Ordinary least squares of y on x. Returns (slope, intercept, r2,
/// slope_stderr). For a perfectly flat response (zero total variation) the
/// fit is exact, so r2 degenerates to 1.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(invalid("ols needs at least two paired points"));
    }
    let nf = n as f64;
    let xm = x.iter().sum::<f64>() / nf;
    let ym = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    if sxx <= 0.0 {
        return Err(invalid("ols regressor is constant"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_tot: f64 = y.iter().map(|v| (v - ym) * (v - ym)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r2 = if ss_tot < 1e-30 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    let se = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, r2, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(-0.1) - 0.460_172_162_722_971).abs() < 1e-12);
        assert!((norm_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        // Deep tail stays positive and finite.
        assert!(norm_cdf(-8.0) > 0.0);
        assert!((norm_cdf(-8.0) - 6.220_960_574_271_78e-16).abs() < 1e-21);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // Degree-63 exactness for the 32-point rule.
        let f = |x: f64| x.powi(10) - 3.0 * x.powi(5) + 2.0;
        let v = integrate_gl(&f, -1.0, 1.0, 32);
        let exact = 2.0 / 11.0 + 4.0;
        assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
    }

    #[test]
    fn adaptive_matches_gaussian_mass() {
        let v = integrate_adaptive(&norm_pdf, -8.0, 8.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn half_moment_reduces_to_sign_cases() {
        // u=-1, v=0: E[X 1{X >= 0}] = 1/sqrt(2 pi).
        assert!((gauss_half_moment(-1.0, 0.0) - FRAC_1_SQRT_2PI).abs() < 1e-15);
        // Symmetric region: zero.
        assert!(gauss_half_moment(0.0, 1.0).abs() < 1e-300);
    }

    #[test]
    fn integrate_2d_gaussian_quadrant() {
        // P(X>0, Y>0) = 1/4 for independent standard normals.
        let f = |x: f64, y: f64| norm_pdf(x) * norm_pdf(y);
        let v = integrate_2d(&f, 0.0, 8.0, |_| 0.0, |_| 8.0, 1e-9).unwrap();
        assert!((v - 0.25).abs() < 1e-7, "{v}");
    }

    #[test]
    fn ols_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, b, r2, se) = ols(&x, &y).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
        assert!((b + 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }
}
