//! Built-in experiment presets mirroring the figure configurations: two
//! geometric Brownian motions, two fractional Stein-Stein stocks across
//! persistent/rough Hurst pairs, and two fractional Bergomi models.

use crate::config::*;

pub const DEFAULT_SEED: u64 = 42;

fn maturities() -> MaturitySection {
    // 16 log-spaced maturities in [1/365, 1/4].
    MaturitySection {
        list: None,
        t_min: None,
        t_max: None,
        points: None,
    }
}

fn gbm(name: &str, s0: [f64; 2], family: Option<FamilySection>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: DEFAULT_SEED,
        model: ModelSection::Gbm {
            sigma: vec![0.2, 0.6],
        },
        index: IndexSection {
            s0: s0.to_vec(),
            weights: vec![1.0, 0.0],
            n_top: 1,
        },
        sim: SimSection {
            paths: 50_000,
            dt_days: 0.05,
        },
        maturities: maturities(),
        family,
        fit: None,
        output: None,
    }
}

fn fss(
    name: &str,
    hurst: [f64; 2],
    s0: [f64; 2],
    weights: Vec<f64>,
    n_top: usize,
    paths: usize,
    family: Option<FamilySection>,
) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: DEFAULT_SEED,
        model: ModelSection::Fss {
            sigma0: vec![0.2, 0.6],
            hurst: hurst.to_vec(),
            rho: vec![-0.5, -0.5],
            scheme: rankvol::drivers::Scheme::Cholesky,
            normalization: rankvol::drivers::Normalization::UnitVariance,
        },
        index: IndexSection {
            s0: s0.to_vec(),
            weights,
            n_top,
        },
        sim: SimSection {
            paths,
            dt_days: 0.1,
        },
        maturities: maturities(),
        family,
        fit: None,
        output: None,
    }
}

fn fbergomi(name: &str, family: Option<FamilySection>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: DEFAULT_SEED,
        model: ModelSection::Fbergomi {
            var0: vec![0.04, 0.36],
            eta: vec![3.61, 3.61],
            hurst: vec![0.7, 0.6],
            rho: vec![0.0, 0.0],
            scheme: rankvol::drivers::Scheme::Hybrid,
            normalization: rankvol::drivers::Normalization::UnitVariance,
        },
        index: IndexSection {
            s0: vec![100.0, 100.0],
            weights: vec![1.0, 0.0],
            n_top: 1,
        },
        sim: SimSection {
            paths: 30_000,
            dt_days: 0.1,
        },
        maturities: maturities(),
        family,
        fit: None,
        output: None,
    }
}

fn family_over_second_asset() -> FamilySection {
    FamilySection {
        asset: 2,
        values: vec![94.0, 96.0, 98.0, 100.0],
    }
}

/// All presets, sorted by name.
pub fn all_presets() -> Vec<ExperimentConfig> {
    let mut v = vec![
        gbm("fig2a", [100.0, 96.0], None),
        gbm("fig2b", [100.0, 100.0], None),
        gbm("fig2c", [100.0, 100.0], Some(family_over_second_asset())),
        fss(
            "fig3a",
            [0.6, 0.7],
            [100.0, 100.0],
            vec![1.0, 0.0],
            1,
            30_000,
            None,
        ),
        fss(
            "fig3b",
            [0.6, 0.7],
            [100.0, 97.0],
            vec![1.0, 0.0],
            1,
            30_000,
            None,
        ),
        fss(
            "fig3c",
            [0.6, 0.7],
            [100.0, 100.0],
            vec![1.0, 0.0],
            1,
            15_000,
            Some(family_over_second_asset()),
        ),
        fss(
            "fig4a",
            [0.3, 0.4],
            [100.0, 100.0],
            vec![1.0, 0.0],
            1,
            30_000,
            None,
        ),
        fss(
            "fig4b",
            [0.2, 0.7],
            [100.0, 100.0],
            vec![1.0, 0.0],
            1,
            30_000,
            None,
        ),
        fss(
            "fig4c",
            [0.2, 0.3],
            [100.0, 90.0],
            vec![1.0, 0.0],
            1,
            30_000,
            None,
        ),
        fss(
            "fig4d",
            [0.7, 0.2],
            [100.0, 90.0],
            vec![0.7, 0.3],
            2,
            30_000,
            None,
        ),
        fbergomi("fig5a", None),
        fbergomi(
            "fig5b",
            Some(FamilySection {
                asset: 2,
                values: vec![94.0, 96.0, 98.0, 100.0],
            }),
        ),
    ];
    v.sort_by(|a, b| a.name.cmp(&b.name));
    v
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    all_presets().into_iter().find(|p| p.name == name)
}

/// Stable, sorted one-line-per-preset table.
pub fn preset_table() -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<7} {:<9} {:<11} {:<13} {:<11} {:<6} {:>6} {:>8}  {}\n",
        "name", "model", "hurst", "s0", "weights", "n_top", "paths", "dt_days", "family"
    ));
    for p in all_presets() {
        let (kind, hurst) = match &p.model {
            ModelSection::Gbm { .. } => ("gbm".to_string(), "-".to_string()),
            ModelSection::Fss { hurst, .. } => ("fss".to_string(), format!("{hurst:?}")),
            ModelSection::Fbergomi { hurst, .. } => ("fbergomi".to_string(), format!("{hurst:?}")),
        };
        let family = match &p.family {
            Some(f) => format!("s0[{}] in {:?}", f.asset, f.values),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:<7} {:<9} {:<11} {:<13} {:<11} {:<6} {:>6} {:>8}  {}\n",
            p.name,
            kind,
            hurst,
            format!("{:?}", p.index.s0),
            format!("{:?}", p.index.weights),
            p.index.n_top,
            p.sim.paths,
            p.sim.dt_days,
            family
        ));
    }
    out
}
