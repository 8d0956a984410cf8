//! Experiment execution: sweeps, fits, classification, rate prediction.

use crate::config::{ConfigError, ExperimentConfig};
use rankvol::asymptotics::{m5_total, predicted_rate, CoeffFlags, RatePrediction};
use rankvol::models::AssetDynamics;
use rankvol::pricing::SkewMethod;
use rankvol::term::{
    classify_quasi_blow_up, curve_from_sweep, fit_power_law, sweep_skew, MaturityResult,
    PowerLawFit, QuasiBlowUpReport, SkewCurve, SweepConfig, BLOW_UP_ALPHA_MIN, BLOW_UP_R2_MIN,
};
use serde::Serialize;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(String),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<rankvol::Error> for RunError {
    fn from(e: rankvol::Error) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    /// Process exit code: 2 for config problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Empirical curve classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Fitted power law with alpha >= 0.3 and r2 >= 0.9, no flattening.
    BlowUp,
    /// |skew| at the shortest maturity sits below the curve's maximum.
    Flattening,
    /// Neither a credible power law nor visible flattening.
    Indeterminate,
}

impl Classification {
    pub fn blows_up(&self) -> bool {
        matches!(self, Classification::BlowUp)
    }
}

/// Default fit range for a curve whose skew changes sign inside the grid.
///
/// A sign change marks the boundary between the short-maturity skew regime
/// (connected to T -> 0, the one a power law describes) and an opposing
/// longer-maturity contribution; near the crossing the measured magnitude
/// is depressed by the cancellation. The default fit therefore uses the
/// sign-consistent branch reaching the shortest maturity, truncated at a
/// third of the branch's last significant maturity; if fewer than four
/// significant points survive, the full branch is used instead.
pub fn auto_fit_range(curve: &SkewCurve) -> Option<(f64, f64)> {
    let sig: Vec<_> = curve
        .points
        .iter()
        .filter(|p| p.skew.abs() > 3.0 * p.stderr)
        .collect();
    let first = sig.first()?;
    let sign = first.skew.signum();
    let mut t_end = first.t;
    let mut crossed = false;
    for p in &sig {
        if p.skew.signum() == sign {
            t_end = p.t;
        } else {
            crossed = true;
            break;
        }
    }
    if !crossed {
        return None;
    }
    let truncated = t_end / 3.0;
    let n_in = sig.iter().filter(|p| p.t <= truncated).count();
    Some((0.0, if n_in >= 4 { truncated } else { t_end }))
}

pub fn classify_curve(curve: &SkewCurve, fit: Option<&PowerLawFit>) -> Classification {
    if curve.flattens() {
        return Classification::Flattening;
    }
    match fit {
        Some(f) if f.alpha >= BLOW_UP_ALPHA_MIN && f.r2 >= BLOW_UP_R2_MIN => Classification::BlowUp,
        _ => Classification::Indeterminate,
    }
}

/// Everything a run produces, before any files are written.
pub struct RunOutcome {
    pub config: ExperimentConfig,
    /// Finite-difference curve (for families: the tied member's).
    pub fd_curve: SkewCurve,
    /// Digital-estimator curve (single-configuration runs only).
    pub digital_curve: Option<SkewCurve>,
    pub fit: Option<PowerLawFit>,
    pub fit_error: Option<String>,
    pub classification: Classification,
    pub prediction: RatePrediction,
    pub quasi: Option<QuasiBlowUpReport>,
    pub sweep: Option<Vec<MaturityResult>>,
}

/// Coefficient flags from model structure: the baseline Gaussian is
/// centered for every implemented model (m1 = 0); the sqrt(T) tie
/// coefficient is computed outright; the rough first-order coefficient is
/// live only when a fractional asset carries leverage (rho != 0).
pub fn coefficient_flags(cfg: &ExperimentConfig) -> Result<CoeffFlags, RunError> {
    let model = cfg.model_spec()?;
    let spec = cfg.index_spec()?;
    let v0: Vec<f64> = model.assets.iter().map(|a| a.initial_variance()).collect();
    let m5_zero = match spec.tie_position() {
        Some(tie) => m5_total(&spec, &v0, tie)?.abs() < 1e-10,
        None => true,
    };
    let m2_zero = !model.assets.iter().any(|a| match a {
        AssetDynamics::Gbm { .. } => false,
        AssetDynamics::FractionalSteinStein { rho, .. } => *rho != 0.0,
        AssetDynamics::FractionalBergomi { rho, .. } => *rho != 0.0,
    });
    Ok(CoeffFlags {
        m1_zero: true,
        m2_zero,
        m5_zero,
    })
}

pub fn rate_prediction(cfg: &ExperimentConfig) -> Result<RatePrediction, RunError> {
    let flags = coefficient_flags(cfg)?;
    let hurst = cfg.hurst_vector();
    Ok(predicted_rate(&hurst, &cfg.index.s0, flags)?)
}

pub fn sweep_config(cfg: &ExperimentConfig) -> SweepConfig {
    SweepConfig::new(cfg.sim.paths, cfg.dt_years(), cfg.seed)
}

/// Run an experiment fully in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let model = cfg.model_spec()?;
    let spec = cfg.index_spec()?;
    let t_grid = cfg.maturity_grid()?;
    let sweep_cfg = sweep_config(cfg);
    let explicit_range = cfg
        .fit
        .as_ref()
        .map(|f| (f.t_lo.unwrap_or(f64::MIN), f.t_hi.unwrap_or(f64::MAX)));

    let prediction = rate_prediction(cfg)?;

    if let Some(family) = cfg.family_s0() {
        let report = classify_quasi_blow_up(
            &model,
            &family,
            &cfg.index.weights,
            cfg.index.n_top,
            &t_grid,
            &sweep_cfg,
        )?;
        let tied = report.tied_member();
        let fd_curve = tied.curve.clone();
        let fit_range = explicit_range.or_else(|| auto_fit_range(&fd_curve));
        let (fit, fit_error) = split_fit(fit_power_law(&fd_curve, fit_range));
        let classification = classify_curve(&fd_curve, fit.as_ref());
        return Ok(RunOutcome {
            config: cfg.clone(),
            fd_curve,
            digital_curve: None,
            fit,
            fit_error,
            classification,
            prediction,
            quasi: Some(report),
            sweep: None,
        });
    }

    let sweep = sweep_skew(&model, &spec, &t_grid, &sweep_cfg)?;
    let fd_curve = curve_from_sweep(
        &sweep,
        &model,
        &spec,
        &sweep_cfg,
        SkewMethod::FiniteDifference,
    );
    let digital_curve = curve_from_sweep(
        &sweep,
        &model,
        &spec,
        &sweep_cfg,
        SkewMethod::DigitalFormula,
    );
    let fit_range = explicit_range.or_else(|| auto_fit_range(&fd_curve));
    let (fit, fit_error) = split_fit(fit_power_law(&fd_curve, fit_range));
    let classification = classify_curve(&fd_curve, fit.as_ref());
    Ok(RunOutcome {
        config: cfg.clone(),
        fd_curve,
        digital_curve: Some(digital_curve),
        fit,
        fit_error,
        classification,
        prediction,
        quasi: None,
        sweep: Some(sweep),
    })
}

/// Empirical blow-up-or-not verdict for rate-prediction matching.
///
/// The thresholded classification decides when it can; an indeterminate
/// full-grid curve (mixed-regime presets) still carries a kind when the
/// shortest maturity holds a significant skew and nothing above it is
/// significantly larger: the curve rises into T -> 0.
pub fn empirical_blow_up_kind(outcome: &RunOutcome) -> Option<bool> {
    match outcome.classification {
        Classification::BlowUp => Some(true),
        Classification::Flattening => Some(false),
        Classification::Indeterminate => {
            let curve = &outcome.fd_curve;
            let first = curve.points.first()?;
            if !curve.flattens() && first.skew.abs() > 3.0 * first.stderr {
                Some(true)
            } else {
                None
            }
        }
    }
}

fn split_fit(r: rankvol::Result<PowerLawFit>) -> (Option<PowerLawFit>, Option<String>) {
    match r {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    }
}
