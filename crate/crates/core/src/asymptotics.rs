//! Small-maturity expansions: futures coefficients, the two-asset density
//! expansion, and predicted ATM-skew blow-up rates.
//!
//! The futures price expands as `F_{0,T} = I_0 + m1.sqrt(T) + ...` for
//! distinct initial prices and `F_{0,T} = I_0 + m5.sqrt(T) + ...` when
//! exactly two adjacent initial prices tie. The `m5` integrand is
//! permutation-aware: each of the two rank orders at the tie contributes a
//! half-plane integral in which the k-th ranked slot draws the permuted
//! asset's (s0, sqrt(v0), x) triple. The unpermuted variant evaluates to
//! zero for the two-asset top-1 index, contradicting both the nonzero-m5
//! premise behind the sqrt(T) term and the closed-form exchange
//! (Margrabe) slope `s0 sqrt(v1 + v2) / sqrt(2 pi)` that this module is
//! validated against.
//!
//! Higher-order coefficients (m2, m3, m4 and their tie counterparts m6,
//! m7, m8) require the conditional-expectation derivative functions of the
//! underlying stochastic-volatility model; they are exposed through the
//! [`ExpansionModel`] hook trait and evaluated by quadrature. The worked
//! model families set them to zero, which is the only regime exercised by
//! tests.

use crate::error::{invalid, Result};
use crate::index::IndexSpec;
use crate::math::{gauss_half_moment, integrate_2d, norm_pdf};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Quadrature box half-width. The standard normal carries less than 1e-14
/// of mass beyond |x| = 8 (Gaussian tail bound
/// `int_z^inf e^{-x^2/2} dx <= e^{-z^2/2} (1 + 1/z^2) / z`), so [-8, 8]^2
/// truncation is below every tolerance used here.
const QUAD_BOX: f64 = 8.0;
const QUAD_TOL: f64 = 1e-8;

/// E[X 1{Y <= aX}] for independent standard normals: `a / sqrt(2 pi (1+a^2))`.
pub fn trunc_gauss_moment(a: f64) -> f64 {
    a / (2.0 * PI * (1.0 + a * a)).sqrt()
}

/// E[X 1{Y >= aX}], evaluated by quadrature of `x (1 - N(ax)) phi(x)` on a
/// 16-panel composite Gauss-Legendre rule (smooth integrand, so the rule is
/// accurate well past 1e-12). Complements [`trunc_gauss_moment`]; the two
/// satisfy `trunc_gauss_moment(a) = trunc_gauss_moment_complement(-a)`.
pub fn trunc_gauss_moment_complement(a: f64) -> Result<f64> {
    let f = |x: f64| x * (1.0 - crate::math::norm_cdf(a * x)) * norm_pdf(x);
    let mut acc = 0.0;
    let panels = 16;
    for i in 0..panels {
        let lo = -QUAD_BOX + 2.0 * QUAD_BOX * i as f64 / panels as f64;
        let hi = -QUAD_BOX + 2.0 * QUAD_BOX * (i + 1) as f64 / panels as f64;
        acc += crate::math::integrate_gl(&f, lo, hi, 64);
    }
    Ok(acc)
}

/// Hooks that a stochastic-volatility model supplies to the general
/// expansion machinery. Defaults are the geometric-Brownian case: every
/// conditional-derivative function vanishes.
pub trait ExpansionModel {
    fn n_assets(&self) -> usize;
    /// Hurst exponent per asset (1/2 for Brownian dynamics).
    fn hurst(&self, j: usize) -> f64;
    /// Initial forward variance v_0(0) per asset.
    fn v0(&self, j: usize) -> f64;
    fn a1(&self, _j: usize, _x: &[f64]) -> f64 {
        0.0
    }
    fn a2(&self, _j: usize, _x: &[f64]) -> f64 {
        0.0
    }
    fn a3(&self, _j: usize, _x: &[f64]) -> f64 {
        0.0
    }
    fn b(&self, _j: usize, _x: &[f64]) -> f64 {
        0.0
    }
    fn c(&self, _j: usize, _x: &[f64]) -> f64 {
        0.0
    }
    fn d(&self, _k: usize, _j: usize, _x: &[f64]) -> f64 {
        0.0
    }
    fn e(&self, _k: usize, _j: usize, _x: &[f64]) -> f64 {
        0.0
    }
}

/// Geometric Brownian model: all hooks vanish.
pub struct GbmExpansion {
    pub sigmas: Vec<f64>,
}

impl ExpansionModel for GbmExpansion {
    fn n_assets(&self) -> usize {
        self.sigmas.len()
    }
    fn hurst(&self, _j: usize) -> f64 {
        0.5
    }
    fn v0(&self, j: usize) -> f64 {
        self.sigmas[j] * self.sigmas[j]
    }
}

/// General density expansion at time t under the standard-Gaussian
/// baseline. Plugging all-zero hooks reproduces the closed two-asset
/// geometric-Brownian expansion exactly.
pub fn density_expansion<M: ExpansionModel>(model: &M, x: &[f64], t: f64) -> f64 {
    let n = model.n_assets();
    debug_assert_eq!(x.len(), n);
    let phi: f64 = x.iter().map(|&v| norm_pdf(v)).product();
    let v: Vec<f64> = (0..n).map(|j| (model.v0(j) * t).sqrt()).collect();

    let mut gaussian_part = 1.0;
    for j in 0..n {
        gaussian_part += -0.5 * v[j] * x[j] + v[j] * v[j] / 8.0 * (x[j] * x[j] - 1.0);
    }
    for k in 0..n {
        for j in (k + 1)..n {
            gaussian_part += 0.25 * v[k] * v[j] * x[k] * x[j];
        }
    }
    let mut hook_part = 0.0;
    for j in 0..n {
        let th = t.powf(model.hurst(j));
        let t2h = th * th;
        hook_part += -th * model.a1(j, x) - t2h * model.a2(j, x)
            + 0.5 * t2h * model.c(j, x)
            + 0.5 * v[j] * th * (model.a3(j, x) - model.b(j, x));
    }
    for k in 0..n {
        for j in (k + 1)..n {
            let thk = t.powf(model.hurst(k));
            let thj = t.powf(model.hurst(j));
            hook_part += thk * thj * model.d(k, j, x)
                - 0.5 * v[k] * thj * model.e(k, j, x)
                - 0.5 * v[j] * thk * model.e(j, k, x);
        }
    }
    phi * gaussian_part + hook_part
}

/// Two-asset geometric-Brownian density expansion with identity baseline
/// covariance: the product of the per-asset expansions of the shifted
/// normal densities `N(-sigma_j sqrt(t)/2, 1)`, kept to order t. An
/// expansion, not a density: it may go slightly negative far in the tails.
pub fn density_expansion_gbm2(x: &[f64; 2], t: f64, sigmas: &[f64; 2]) -> f64 {
    let v1 = sigmas[0] * t.sqrt();
    let v2 = sigmas[1] * t.sqrt();
    let phi = norm_pdf(x[0]) * norm_pdf(x[1]);
    phi * (1.0 - 0.5 * (v1 * x[0] + v2 * x[1])
        + v1 * v1 / 8.0 * (x[0] * x[0] - 1.0)
        + v2 * v2 / 8.0 * (x[1] * x[1] - 1.0)
        + 0.25 * v1 * v2 * x[0] * x[1])
}

/// Coefficients of the sqrt(T) term of the futures expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    /// Per aggregated rank, distinct-start case; exactly zero when the
    /// baseline Gaussian is centered.
    pub m1: Vec<f64>,
    /// Per aggregated rank, tie case, with the tie position (index of the
    /// first tied asset).
    pub m5: Option<(Vec<f64>, usize)>,
}

/// nu_k = w_k s0_k sqrt(v0_k) for the aggregated ranks.
fn nu(spec: &IndexSpec, v0: &[f64]) -> Vec<f64> {
    (0..spec.n_top)
        .map(|k| spec.w[k] * spec.s0[k] * v0[k].sqrt())
        .collect()
}

/// m1 per aggregated rank: `nu_k mu_k` under a baseline Gaussian with mean
/// `mu` and identity covariance (the integrand `nu_k x_k phi` is odd when
/// `mu = 0`, so the coefficients vanish).
pub fn m1_coefficients(spec: &IndexSpec, v0: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
    check_v0(spec, v0)?;
    if mu.len() != spec.n_assets() {
        return Err(invalid("mu must have one entry per asset"));
    }
    if spec.tie_position().is_some() {
        return Err(invalid(
            "initial prices carry a tie: the sqrt(T) coefficient is m5, not m1",
        ));
    }
    Ok(nu(spec, v0)
        .iter()
        .zip(mu)
        .map(|(n_k, m_k)| n_k * m_k)
        .collect())
}

/// Total sqrt(T) coefficient `sum_k m5_k` for a single adjacent tie at
/// `(tie, tie+1)`, centered standard-Gaussian baseline.
///
/// For each rank order at the tie the k-th ranked slot draws the permuted
/// asset's triple. Ranks away from the tie integrate an odd function over a
/// region independent of their coordinate and contribute nothing.
pub fn m5_total(spec: &IndexSpec, v0: &[f64], tie: usize) -> Result<f64> {
    check_v0(spec, v0)?;
    match spec.tie_position() {
        Some(p) if p == tie => {}
        Some(p) => {
            return Err(invalid(format!("tie is at position {p}, not {tie}")));
        }
        None => return Err(invalid("initial prices carry no tie; use m1_coefficients")),
    }
    let a = tie;
    let b = tie + 1;
    let (sa, sb) = (spec.s0[a], spec.s0[b]);
    let (ra, rb) = (v0[a].sqrt(), v0[b].sqrt());
    let mut total = 0.0;
    for k in 0..spec.n_top {
        let w = spec.w[k];
        if k == a {
            // Rank a: asset a on {rb x_b <= ra x_a}, asset b on the swap.
            total += w * sa * ra * gauss_half_moment(-ra, rb);
            total += w * sb * rb * gauss_half_moment(-rb, ra);
        } else if k == b {
            // Rank b: asset b on {rb x_b <= ra x_a}, asset a on the swap.
            total += w * sb * rb * gauss_half_moment(rb, -ra);
            total += w * sa * ra * gauss_half_moment(ra, -rb);
        }
    }
    Ok(total)
}

/// m5 under a general baseline Gaussian for the tie pair, by iterated
/// quadrature over the two half-planes. `mu` and `cov` describe the joint
/// law of (x_tie, x_tie+1). Ranks away from the tie still contribute
/// nothing because the baseline is independent across assets there.
pub fn m5_total_with_baseline(
    spec: &IndexSpec,
    v0: &[f64],
    tie: usize,
    mu: [f64; 2],
    cov: [[f64; 2]; 2],
) -> Result<f64> {
    check_v0(spec, v0)?;
    if spec.tie_position() != Some(tie) {
        return Err(invalid("tie position does not match the initial prices"));
    }
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    if det <= 0.0 || cov[0][0] <= 0.0 {
        return Err(invalid("tie-pair covariance must be positive definite"));
    }
    let a = tie;
    let b = tie + 1;
    let (ra, rb) = (v0[a].sqrt(), v0[b].sqrt());
    let density = move |u: f64, v: f64| {
        let du = u - mu[0];
        let dv = v - mu[1];
        let q = (cov[1][1] * du * du - 2.0 * cov[0][1] * du * dv + cov[0][0] * dv * dv) / det;
        (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
    };
    let sd0 = cov[0][0].sqrt();
    let sd1 = cov[1][1].sqrt();
    let (x_lo, x_hi) = (mu[0] - QUAD_BOX * sd0, mu[0] + QUAD_BOX * sd0);
    let (y_lo, y_hi) = (mu[1] - QUAD_BOX * sd1, mu[1] + QUAD_BOX * sd1);
    // Region 1: rb v <= ra u (asset order kept); region 2: complement.
    let mut total = 0.0;
    for k in 0..spec.n_top {
        if k != a && k != b {
            continue;
        }
        let w = spec.w[k];
        // (asset index, weight on that asset's x, region selector)
        let slots: [(usize, f64, bool); 2] = if k == a {
            [
                (a, w * spec.s0[a] * ra, true),
                (b, w * spec.s0[b] * rb, false),
            ]
        } else {
            [
                (b, w * spec.s0[b] * rb, true),
                (a, w * spec.s0[a] * ra, false),
            ]
        };
        for (asset, coeff, kept_order) in slots {
            let f = |u: f64, v: f64| {
                let xval = if asset == a { u } else { v };
                coeff * xval * density(u, v)
            };
            let v = if kept_order {
                integrate_2d(
                    &f,
                    x_lo,
                    x_hi,
                    |_| y_lo,
                    |u| (ra * u / rb).clamp(y_lo, y_hi),
                    QUAD_TOL,
                )?
            } else {
                integrate_2d(
                    &f,
                    x_lo,
                    x_hi,
                    |u| (ra * u / rb).clamp(y_lo, y_hi),
                    |_| y_hi,
                    QUAD_TOL,
                )?
            };
            total += v;
        }
    }
    Ok(total)
}

/// Higher-order futures coefficients for the two-asset case, evaluated by
/// quadrature from the model's hook functions. Indexed `[rank][asset]`
/// (and `[rank][asset][asset]` for the cross term). The sign convention
/// follows the distinct-start expansion: each coefficient enters
/// `F - I_0` with a positive sign after the leading sqrt(T) term.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherCoeffs {
    pub m2: Vec<Vec<f64>>,
    pub m3: Vec<Vec<f64>>,
    pub m4: Vec<Vec<Vec<f64>>>,
}

/// Quadrature evaluation of m2, m3, m4 (distinct starts) or their tie
/// counterparts m6, m7, m8 (`tie = Some(position)`), for two-asset models.
pub fn higher_coefficients<M: ExpansionModel>(
    spec: &IndexSpec,
    model: &M,
    tie: Option<usize>,
) -> Result<HigherCoeffs> {
    let n = spec.n_assets();
    if n != 2 || model.n_assets() != 2 {
        return Err(invalid(
            "higher-order quadrature hooks are implemented for two assets",
        ));
    }
    let v0: Vec<f64> = (0..n).map(|j| model.v0(j)).collect();
    check_v0(spec, &v0)?;
    if let Some(p) = tie {
        if spec.tie_position() != Some(p) {
            return Err(invalid("tie position does not match the initial prices"));
        }
    }
    let ra = v0[0].sqrt();
    let rb = v0[1].sqrt();

    // Weighted integral of `slot_value(x) * g(x)` over the relevant
    // region(s); permutation-aware in the tie case.
    let weighted = |k: usize, g: &dyn Fn(&[f64]) -> f64| -> Result<f64> {
        match tie {
            None => {
                let coeff = spec.w[k] * spec.s0[k] * v0[k].sqrt();
                let f = |u: f64, v: f64| {
                    let x = [u, v];
                    coeff * x[k] * g(&x)
                };
                integrate_2d(
                    &f,
                    -QUAD_BOX,
                    QUAD_BOX,
                    |_| -QUAD_BOX,
                    |_| QUAD_BOX,
                    QUAD_TOL,
                )
            }
            Some(_) => {
                // Two half-planes split by ra u = rb v; the second draws
                // the swapped asset's triple.
                let slots: [(usize, f64, bool); 2] = if k == 0 {
                    [
                        (0, spec.w[k] * spec.s0[0] * ra, true),
                        (1, spec.w[k] * spec.s0[1] * rb, false),
                    ]
                } else {
                    [
                        (1, spec.w[k] * spec.s0[1] * rb, true),
                        (0, spec.w[k] * spec.s0[0] * ra, false),
                    ]
                };
                let mut acc = 0.0;
                for (asset, coeff, kept) in slots {
                    let f = |u: f64, v: f64| {
                        let x = [u, v];
                        coeff * x[asset] * g(&x)
                    };
                    acc += if kept {
                        integrate_2d(
                            &f,
                            -QUAD_BOX,
                            QUAD_BOX,
                            |_| -QUAD_BOX,
                            |u| (ra * u / rb).clamp(-QUAD_BOX, QUAD_BOX),
                            QUAD_TOL,
                        )?
                    } else {
                        integrate_2d(
                            &f,
                            -QUAD_BOX,
                            QUAD_BOX,
                            |u| (ra * u / rb).clamp(-QUAD_BOX, QUAD_BOX),
                            |_| QUAD_BOX,
                            QUAD_TOL,
                        )?
                    };
                }
                Ok(acc)
            }
        }
    };

    let ranks = spec.n_top;
    let mut m2 = vec![vec![0.0; n]; ranks];
    let mut m3 = vec![vec![0.0; n]; ranks];
    let mut m4 = vec![vec![vec![0.0; n]; n]; ranks];
    for k in 0..ranks {
        for j in 0..n {
            m2[k][j] = -weighted(k, &|x| model.a1(j, x))?;
            m3[k][j] = -weighted(k, &|x| 0.5 * model.a2(j, x) + model.c(j, x))?;
            for l in 0..n {
                m4[k][j][l] = weighted(k, &|x| model.d(j, l, x))?;
            }
        }
    }
    Ok(HigherCoeffs { m2, m3, m4 })
}

fn check_v0(spec: &IndexSpec, v0: &[f64]) -> Result<()> {
    if v0.len() != spec.n_assets() {
        return Err(invalid("v0 must have one entry per asset"));
    }
    if v0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("initial forward variances must be positive"));
    }
    Ok(())
}

/// Zero-or-not flags for the expansion coefficients feeding a rate
/// prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffFlags {
    pub m1_zero: bool,
    pub m2_zero: bool,
    pub m5_zero: bool,
}

/// Predicted short-maturity behavior of the ATM skew.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateKind {
    /// Bounded skew as T -> 0.
    NoBlowUp,
    /// |skew| ~ c T^{-1/2}.
    RateHalf,
    /// |skew| ~ c T^{H-1/2} for the smallest Hurst exponent.
    RateHMinusHalf { hurst: f64 },
    /// The configuration sits outside the covered cases.
    NoPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub kind: RateKind,
    /// Which condition produced the prediction.
    pub rationale: &'static str,
}

impl RateKind {
    /// Power-law exponent alpha in |skew| ~ c T^{-alpha}, where defined.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            RateKind::NoBlowUp => Some(0.0),
            RateKind::RateHalf => Some(0.5),
            RateKind::RateHMinusHalf { hurst } => Some(0.5 - hurst),
            RateKind::NoPrediction => None,
        }
    }

    pub fn blows_up(&self) -> Option<bool> {
        match self {
            RateKind::NoBlowUp => Some(false),
            RateKind::RateHalf => Some(true),
            RateKind::RateHMinusHalf { hurst } => Some(*hurst < 0.5),
            RateKind::NoPrediction => None,
        }
    }
}

/// Rate prediction from the Hurst exponents, the tie structure of the
/// initial prices, and the coefficient flags.
pub fn predicted_rate(hurst: &[f64], s0: &[f64], flags: CoeffFlags) -> Result<RatePrediction> {
    if hurst.len() != s0.len() || s0.is_empty() {
        return Err(invalid("hurst and s0 must be equal-length and non-empty"));
    }
    if s0.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("initial prices must be sorted non-increasing"));
    }
    let ties = s0.windows(2).filter(|w| w[0] == w[1]).count();
    if ties > 1 {
        return Err(invalid("at most one adjacent tie is allowed"));
    }
    let h_min = hurst.iter().cloned().fold(f64::INFINITY, f64::min);
    let all_persistent = hurst.iter().all(|h| *h >= 0.5);
    let pick = if ties == 1 {
        if !flags.m5_zero {
            RatePrediction {
                kind: RateKind::RateHalf,
                rationale: "tied starts with nonzero sqrt(T) futures coefficient",
            }
        } else {
            RatePrediction {
                kind: RateKind::NoPrediction,
                rationale: "tied starts but the sqrt(T) coefficient vanishes",
            }
        }
    } else if all_persistent {
        if flags.m1_zero {
            RatePrediction {
                kind: RateKind::NoBlowUp,
                rationale: "distinct starts, persistent volatility, centered baseline",
            }
        } else {
            RatePrediction {
                kind: RateKind::NoPrediction,
                rationale: "distinct starts with a drifted baseline",
            }
        }
    } else if flags.m1_zero && !flags.m2_zero {
        RatePrediction {
            kind: RateKind::RateHMinusHalf { hurst: h_min },
            rationale: "distinct starts, rough volatility with leverage",
        }
    } else {
        RatePrediction {
            kind: RateKind::NoPrediction,
            rationale: "rough volatility without an active first-order coefficient",
        }
    };
    Ok(pick)
}
