//! Browser demo bindings. Three interactive operations over the two-asset
//! geometric Brownian index, small enough to run in a single-threaded wasm
//! module: the ATM-skew term structure with its power-law fit, the
//! small-time density expansion against the exact density, and a smile
//! slice with both ATM-skew estimators.
//!
//! Every export takes plain numbers and returns a JSON string; the page
//! renders with a bare canvas. Build with
//! `wasm-pack build crates/demo-wasm --target web` and serve `www/`.

use rankvol::asymptotics::{density_expansion_gbm2, predicted_rate, CoeffFlags, RateKind};
use rankvol::index::{index_samples, IndexSpec, McEstimate};
use rankvol::math::norm_pdf;
use rankvol::models::{euler_simulate, ModelSpec, SimConfig};
use rankvol::pricing::{call_price_from_samples, implied_vol, skew_pair_from_samples};
use rankvol::term::{fit_power_law, log_spaced_grid, skew_curve, SweepConfig};
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

const MAX_PATHS: usize = 40_000;
const DT_YEARS: f64 = 1.0 / 1460.0; // quarter-day Euler step

#[derive(Serialize)]
struct CurvePoint {
    t: f64,
    skew: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct FitOut {
    c: f64,
    alpha: f64,
    r2: f64,
}

#[derive(Serialize)]
struct SkewDemoOut {
    points: Vec<CurvePoint>,
    fit: Option<FitOut>,
    predicted: String,
    predicted_exponent: Option<f64>,
    error: Option<String>,
}

fn predicted_label(kind: RateKind) -> String {
    match kind {
        RateKind::NoBlowUp => "bounded skew (quasi-blow-up regime near a tie)".into(),
        RateKind::RateHalf => "blow-up at rate T^-1/2".into(),
        RateKind::RateHMinusHalf { hurst } => format!("blow-up at rate T^{:+.2}", hurst - 0.5),
        RateKind::NoPrediction => "outside the covered cases".into(),
    }
}

/// ATM-skew term structure for a two-asset geometric Brownian top-1 index
/// with `s0 = (100, s2)`, 12 log-spaced maturities in [1/365, 1/4].
#[wasm_bindgen]
pub fn skew_curve_demo(sigma1: f64, sigma2: f64, s2: f64, paths: u32, seed: u32) -> String {
    let result = (|| -> rankvol::Result<SkewDemoOut> {
        let model = ModelSpec::gbm(&[sigma1, sigma2])?;
        let s0 = vec![100.0, s2.min(100.0)];
        let spec = IndexSpec::new(s0.clone(), vec![1.0], 1)?;
        let grid = log_spaced_grid(1.0 / 365.0, 0.25, 12);
        let paths = (paths as usize).clamp(200, MAX_PATHS);
        let cfg = SweepConfig::new(paths, DT_YEARS, seed as u64);
        let curve = skew_curve(
            &model,
            &spec,
            &grid,
            &cfg,
            rankvol::pricing::SkewMethod::FiniteDifference,
        )?;
        let fit = fit_power_law(&curve, None).ok();
        let tie = spec.tie_position().is_some();
        let flags = CoeffFlags {
            m1_zero: true,
            m2_zero: true,
            m5_zero: !tie,
        };
        let prediction = predicted_rate(&[0.5, 0.5], &s0, flags)?;
        Ok(SkewDemoOut {
            points: curve
                .points
                .iter()
                .map(|p| CurvePoint {
                    t: p.t,
                    skew: p.skew,
                    stderr: p.stderr,
                })
                .collect(),
            fit: fit.map(|f| FitOut {
                c: f.c,
                alpha: f.alpha,
                r2: f.r2,
            }),
            predicted: predicted_label(prediction.kind),
            predicted_exponent: prediction.kind.exponent(),
            error: None,
        })
    })();
    let out = result.unwrap_or_else(|e| SkewDemoOut {
        points: Vec::new(),
        fit: None,
        predicted: String::new(),
        predicted_exponent: None,
        error: Some(e.to_string()),
    });
    serde_json::to_string(&out).expect("serializable")
}

#[derive(Serialize)]
struct DensityDemoOut {
    xs: Vec<f64>,
    expansion: Vec<f64>,
    exact: Vec<f64>,
    sup_error: f64,
    sup_error_half_t: f64,
    /// Error contraction when t halves; the expansion converges at
    /// O(t^{3/2}), so this sits near 2.83.
    ratio: f64,
    error: Option<String>,
}

/// Slice of the two-asset density expansion along x1 (x2 = 0) plus the
/// sup-norm error against the exact product density on a 41x41 grid.
#[wasm_bindgen]
pub fn density_demo(t: f64, sigma1: f64, sigma2: f64) -> String {
    let mut out = DensityDemoOut {
        xs: Vec::new(),
        expansion: Vec::new(),
        exact: Vec::new(),
        sup_error: 0.0,
        sup_error_half_t: 0.0,
        ratio: f64::NAN,
        error: None,
    };
    if !(t > 0.0 && t < 1.0) || sigma1 < 0.0 || sigma2 < 0.0 {
        out.error = Some("need 0 < t < 1 and nonnegative volatilities".into());
        return serde_json::to_string(&out).expect("serializable");
    }
    let sigmas = [sigma1, sigma2];
    let exact = |x: &[f64; 2], t: f64| {
        norm_pdf(x[0] + 0.5 * sigmas[0] * t.sqrt()) * norm_pdf(x[1] + 0.5 * sigmas[1] * t.sqrt())
    };
    for i in 0..=160 {
        let x1 = -4.0 + i as f64 * 0.05;
        let x = [x1, 0.0];
        out.xs.push(x1);
        out.expansion.push(density_expansion_gbm2(&x, t, &sigmas));
        out.exact.push(exact(&x, t));
    }
    let sup = |t: f64| {
        let mut worst: f64 = 0.0;
        for i in 0..41 {
            for j in 0..41 {
                let x = [-5.0 + 0.25 * i as f64, -5.0 + 0.25 * j as f64];
                worst = worst.max((density_expansion_gbm2(&x, t, &sigmas) - exact(&x, t)).abs());
            }
        }
        worst
    };
    out.sup_error = sup(t);
    out.sup_error_half_t = sup(0.5 * t);
    out.ratio = out.sup_error / out.sup_error_half_t;
    serde_json::to_string(&out).expect("serializable")
}

#[derive(Serialize)]
struct SmilePoint {
    k: f64,
    price: f64,
    iv: Option<f64>,
}

#[derive(Serialize)]
struct SmileDemoOut {
    forward: f64,
    forward_stderr: f64,
    atm_vol: f64,
    fd_skew: f64,
    fd_stderr: f64,
    digital_skew: f64,
    digital_stderr: f64,
    smile: Vec<SmilePoint>,
    error: Option<String>,
}

/// Implied-vol smile of the top-1 index at one maturity, plus both ATM
/// skew estimators from the same paths.
#[wasm_bindgen]
pub fn smile_demo(sigma1: f64, sigma2: f64, s2: f64, t: f64, paths: u32, seed: u32) -> String {
    let result = (|| -> rankvol::Result<SmileDemoOut> {
        let model = ModelSpec::gbm(&[sigma1, sigma2])?;
        let spec = IndexSpec::new(vec![100.0, s2.min(100.0)], vec![1.0], 1)?;
        let paths = (paths as usize).clamp(200, MAX_PATHS);
        let cfg = SimConfig::uniform(paths, t, DT_YEARS.min(t / 4.0), seed as u64)?;
        let batch = euler_simulate(&model, &spec.s0, &cfg)?;
        let samples = index_samples(&batch, &spec)?;
        let pair = skew_pair_from_samples(&samples, t, None)?;
        let forward = McEstimate::from_samples(samples.iter().copied());
        let mut smile = Vec::new();
        for i in 0..=14 {
            let k = -0.14 + 0.02 * i as f64;
            let price = call_price_from_samples(&samples, forward.value, k);
            let iv = implied_vol(price.value, t, forward.value, k).ok();
            smile.push(SmilePoint {
                k,
                price: price.value,
                iv,
            });
        }
        Ok(SmileDemoOut {
            forward: forward.value,
            forward_stderr: forward.stderr,
            atm_vol: pair.fd.atm_vol,
            fd_skew: pair.fd.skew,
            fd_stderr: pair.fd.stderr,
            digital_skew: pair.digital.skew,
            digital_stderr: pair.digital.stderr,
            smile,
            error: None,
        })
    })();
    let out = result.unwrap_or_else(|e| SmileDemoOut {
        forward: f64::NAN,
        forward_stderr: f64::NAN,
        atm_vol: f64::NAN,
        fd_skew: f64::NAN,
        fd_stderr: f64::NAN,
        digital_skew: f64::NAN,
        digital_stderr: f64::NAN,
        smile: Vec::new(),
        error: Some(e.to_string()),
    });
    serde_json::to_string(&out).expect("serializable")
}
