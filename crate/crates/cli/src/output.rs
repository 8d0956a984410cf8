//! File outputs: versioned CSVs, the structured fit summary, the plot
//! script, and debugging dumps. Identical config and seed produce
//! byte-identical files.

use crate::config::ExperimentConfig;
use crate::runner::{Classification, RunOutcome};
use rankvol::term::{PowerLawFit, QuasiBlowUpReport, SkewCurve};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const SKEW_CSV_SCHEMA: &str = "# rankvol skew_curve v1";
pub const DRIVERS_CSV_SCHEMA: &str = "# rankvol drivers v1";
pub const PATHS_CSV_SCHEMA: &str = "# rankvol paths v1";

pub fn write_skew_csv(path: &Path, curves: &[&SkewCurve], experiment: &str) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{SKEW_CSV_SCHEMA}")?;
    writeln!(f, "# experiment: {experiment}")?;
    if let Some(c) = curves.first() {
        writeln!(f, "# fingerprint: {}", c.fingerprint)?;
    }
    writeln!(f, "t,skew,stderr,method")?;
    for curve in curves {
        for p in &curve.points {
            writeln!(f, "{},{},{},{}", p.t, p.skew, p.stderr, p.method)?;
        }
        for (t, reason) in &curve.skipped {
            writeln!(f, "# skipped t={t}: {reason}")?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FitSummary<'a> {
    version: &'static str,
    experiment: &'a str,
    classification: &'a Classification,
    predicted_rate: PredictedRateOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_error: Option<&'a str>,
    maturities: usize,
    skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    quasi_blow_up: Option<QuasiSummary>,
}

#[derive(Serialize)]
struct PredictedRateOut {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    rationale: String,
}

#[derive(Serialize)]
struct QuasiSummary {
    t_star: f64,
    tied_blows_up: bool,
    untied_flatten: bool,
    continuity_holds: bool,
    passes_all_clauses: bool,
    members: Vec<QuasiMemberOut>,
}

#[derive(Serialize)]
struct QuasiMemberOut {
    s0: Vec<f64>,
    tied: bool,
    flattening: bool,
    gap_resolvable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skew_at_t_star: Option<f64>,
}

fn quasi_summary(q: &QuasiBlowUpReport) -> QuasiSummary {
    QuasiSummary {
        t_star: q.t_star,
        tied_blows_up: q.tied_blows_up,
        untied_flatten: q.untied_flatten,
        continuity_holds: q.continuity_holds,
        passes_all_clauses: q.passes_all_clauses(),
        members: q
            .members
            .iter()
            .map(|m| QuasiMemberOut {
                s0: m.s0.clone(),
                tied: m.tied,
                flattening: m.flattening,
                gap_resolvable: m.gap_resolvable,
                alpha: m.fit.map(|f| f.alpha),
                r2: m.fit.map(|f| f.r2),
                skew_at_t_star: m.at_t_star.map(|p| p.skew),
            })
            .collect(),
    }
}

pub fn fit_json(outcome: &RunOutcome) -> String {
    let s = FitSummary {
        version: env!("CARGO_PKG_VERSION"),
        experiment: &outcome.config.name,
        classification: &outcome.classification,
        predicted_rate: PredictedRateOut {
            kind: serde_json::to_value(outcome.prediction.kind)
                .ok()
                .and_then(|v| v.get("kind").and_then(|k| k.as_str().map(String::from)))
                .unwrap_or_else(|| format!("{:?}", outcome.prediction.kind)),
            exponent: outcome.prediction.kind.exponent(),
            rationale: outcome.prediction.rationale.to_string(),
        },
        c: outcome.fit.map(|f| f.c),
        alpha: outcome.fit.map(|f| f.alpha),
        r2: outcome.fit.map(|f| f.r2),
        alpha_stderr: outcome.fit.map(|f| f.alpha_stderr),
        n_used: outcome.fit.map(|f| f.n_used),
        t_range: outcome.fit.map(|f| f.t_range),
        fit_error: outcome.fit_error.as_deref(),
        maturities: outcome.fd_curve.points.len() + outcome.fd_curve.skipped.len(),
        skipped: outcome.fd_curve.skipped.len(),
        quasi_blow_up: outcome.quasi.as_ref().map(quasi_summary),
    };
    serde_json::to_string_pretty(&s).expect("summary serializes")
}

/// Self-contained matplotlib script rendering |skew| vs T on log axes with
/// the fitted power law, next to the CSV it reads.
pub fn plot_script(outcome: &RunOutcome, member_files: &[String]) -> String {
    let fit_line = match outcome.fit {
        Some(PowerLawFit { c, alpha, .. }) => {
            format!("FIT = ({c:?}, {alpha:?})  # (c, alpha): |skew| ~ c * T**-alpha")
        }
        None => "FIT = None".to_string(),
    };
    let members = if member_files.is_empty() {
        "MEMBER_FILES = []".to_string()
    } else {
        format!(
            "MEMBER_FILES = [{}]",
            member_files
                .iter()
                .map(|m| format!("{m:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        )
    };
    format!(
        r##"#!/usr/bin/env python3
"""Plot the ATM-skew term structure produced next to this script."""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
{fit_line}
{members}


def read_curve(path, method="finite_difference"):
    ts, skews, errs = [], [], []
    with open(path) as f:
        for row in csv.DictReader(r for r in f if not r.startswith("#")):
            if row["method"] != method:
                continue
            ts.append(float(row["t"]))
            skews.append(abs(float(row["skew"])))
            errs.append(float(row["stderr"]))
    return ts, skews, errs


fig, ax = plt.subplots(figsize=(6, 4.5))
ts, skews, errs = read_curve(os.path.join(HERE, "skew_curve.csv"))
ax.errorbar(ts, skews, yerr=errs, fmt="o", ms=4, capsize=2, label="{name}")
for member in MEMBER_FILES:
    mts, mskews, merrs = read_curve(os.path.join(HERE, member))
    ax.errorbar(mts, mskews, yerr=merrs, fmt=".", ms=3, alpha=0.7,
                label=member.replace("skew_curve_", "").replace(".csv", ""))
if FIT is not None and ts:
    c, alpha = FIT
    grid = [min(ts) * (max(ts) / min(ts)) ** (i / 200.0) for i in range(201)]
    ax.plot(grid, [c * t ** -alpha for t in grid], "-",
            label=f"fit: {{c:.3g}} T^-{{alpha:.3f}}")
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("maturity T (years)")
ax.set_ylabel("|ATM skew|")
ax.legend(fontsize=8)
ax.set_title("{name}")
fig.tight_layout()
out = os.path.join(HERE, "skew.png")
fig.savefig(out, dpi=150)
print(f"wrote {{out}}")
"##,
        fit_line = fit_line,
        members = members,
        name = outcome.config.name,
    )
}

/// Write the full artifact set for a run. Returns the list of files.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let mut member_files = Vec::new();
    if let Some(q) = &outcome.quasi {
        let asset = outcome.config.family.as_ref().map(|f| f.asset).unwrap_or(0);
        for m in &q.members {
            let tag = format!("s{asset}_{}", m.s0[asset.saturating_sub(1)]);
            let fname = format!("skew_curve_{tag}.csv");
            write_skew_csv(&dir.join(&fname), &[&m.curve], &outcome.config.name)?;
            member_files.push(fname.clone());
            files.push(fname);
        }
    }

    let mut curves: Vec<&SkewCurve> = vec![&outcome.fd_curve];
    if let Some(d) = &outcome.digital_curve {
        curves.push(d);
    }
    write_skew_csv(&dir.join("skew_curve.csv"), &curves, &outcome.config.name)?;
    files.push("skew_curve.csv".into());

    std::fs::write(dir.join("fit.json"), fit_json(outcome))?;
    files.push("fit.json".into());

    std::fs::write(
        dir.join("plot_skew.py"),
        plot_script(outcome, &member_files),
    )?;
    files.push("plot_skew.py".into());

    std::fs::write(dir.join("resolved_config.toml"), outcome.config.to_toml())?;
    files.push("resolved_config.toml".into());

    Ok(files)
}

/// Debug dump of the joint driver (first asset) on the longest-maturity
/// grid: columns path_id, t, B, B_H. Capped at 64 paths.
pub fn write_drivers_csv(
    cfg: &ExperimentConfig,
    path: &Path,
) -> Result<(), crate::runner::RunError> {
    use rankvol::drivers::{sample_joint_driver, FbmKernel};
    use rankvol::rng::RngStream;
    let model = cfg.model_spec()?;
    let t_grid = cfg.maturity_grid()?;
    let t_max = *t_grid.last().unwrap();
    let sweep = crate::runner::sweep_config(cfg);
    let sim = sweep.sim_config(t_grid.len() - 1, t_max)?;
    let kernel = model.kernel_for(0)?.unwrap_or(FbmKernel::unit(0.5)?);
    let n_paths = cfg.sim.paths.min(64);
    let paths = sample_joint_driver(&sim.grid, &kernel, n_paths, RngStream::new(sim.seed, 0))?;
    let mut f = std::fs::File::create(path).map_err(crate::runner::RunError::Io)?;
    let mut out = String::new();
    out.push_str(DRIVERS_CSV_SCHEMA);
    out.push('\n');
    out.push_str("path_id,t,B,B_H\n");
    for p in 0..n_paths {
        let mut b = 0.0;
        let vt = paths.volterra_values(p);
        out.push_str(&format!("{p},0,0,0\n"));
        for (i, db) in paths.bm_increments(p).iter().enumerate() {
            b += db;
            out.push_str(&format!(
                "{p},{},{b},{}\n",
                sim.grid.nodes()[i + 1],
                vt[i + 1]
            ));
        }
    }
    f.write_all(out.as_bytes())
        .map_err(crate::runner::RunError::Io)?;
    Ok(())
}

/// Terminal-price dump (path_id, asset, S_T) at the longest maturity.
pub fn write_paths_csv(
    cfg: &ExperimentConfig,
    path: &Path,
    full: bool,
) -> Result<(), crate::runner::RunError> {
    let model = cfg.model_spec()?;
    let spec = cfg.index_spec()?;
    let t_grid = cfg.maturity_grid()?;
    let t_max = *t_grid.last().unwrap();
    let sweep = crate::runner::sweep_config(cfg);
    let mut sim = sweep.sim_config(t_grid.len() - 1, t_max)?;
    if full {
        sim.store_full_paths = true;
        sim.n_paths = sim.n_paths.min(64);
    }
    let batch = rankvol::models::euler_simulate(&model, &spec.s0, &sim)?;
    let mut out = String::new();
    out.push_str(PATHS_CSV_SCHEMA);
    out.push('\n');
    if full {
        out.push_str("path_id,asset,t,s\n");
        let nodes = sim.grid.nodes();
        let fullp = batch.full.as_ref().expect("full paths stored");
        let n_assets = model.n_assets();
        for p in 0..batch.n_paths() {
            for (i, t) in nodes.iter().enumerate() {
                for j in 0..n_assets {
                    out.push_str(&format!(
                        "{p},{j},{t},{}\n",
                        fullp[(p * nodes.len() + i) * n_assets + j]
                    ));
                }
            }
        }
    } else {
        out.push_str("path_id,asset,s_t\n");
        for p in 0..batch.n_paths() {
            for (j, s) in batch.terminal_prices(p).iter().enumerate() {
                out.push_str(&format!("{p},{j},{s}\n"));
            }
        }
    }
    std::fs::write(path, out).map_err(crate::runner::RunError::Io)?;
    Ok(())
}
