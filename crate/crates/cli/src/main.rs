use clap::{Args, Parser, Subcommand};
use rankvol_cli::config::ExperimentConfig;
use rankvol_cli::output;
use rankvol_cli::presets;
use rankvol_cli::runner::{execute, sweep_config, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Monte Carlo ATM-skew term structures for options on ranked equity
/// indexes.
#[derive(Parser)]
#[command(name = "rankvol", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Selection {
    /// Preset experiment name (see `list-presets`).
    #[arg(long, conflicts_with = "config")]
    experiment: Option<String>,
    /// Path to a TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the Monte Carlo path count.
    #[arg(long)]
    paths: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Euler step, in days.
    #[arg(long)]
    dt: Option<f64>,
    /// Cap the worker thread count (results are unaffected).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment: sweep maturities, fit, classify, write files.
    Run {
        #[command(flatten)]
        select: Selection,
        /// Output directory (default: $RANKVOL_OUT/<name> or out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump the first asset's joint driver paths to drivers.csv.
        #[arg(long)]
        dump_drivers: bool,
        /// Dump terminal prices at the longest maturity to paths.csv.
        #[arg(long)]
        dump_paths: bool,
        /// Dump full price paths (capped at 64) to full_paths.csv.
        #[arg(long)]
        dump_full_paths: bool,
    },
    /// Print the preset table.
    ListPresets,
    /// ATM skew at a single maturity, both estimators.
    Skew {
        #[command(flatten)]
        select: Selection,
        /// Maturity in years.
        #[arg(long)]
        maturity: f64,
        /// Log-strike bump override for the finite difference.
        #[arg(long)]
        dk: Option<f64>,
    },
    /// Monte Carlo index call price and implied volatility.
    Price {
        #[command(flatten)]
        select: Selection,
        #[arg(long)]
        maturity: f64,
        /// Log-strike k; the strike is F * exp(k).
        #[arg(long, default_value_t = 0.0)]
        log_strike: f64,
        /// Forward override; defaults to the batch futures estimate.
        #[arg(long)]
        forward: Option<f64>,
    },
    /// Monte Carlo index futures price.
    Futures {
        #[command(flatten)]
        select: Selection,
        #[arg(long)]
        maturity: f64,
    },
    /// Refit a power law to an existing skew_curve.csv.
    Fit {
        /// CSV produced by `run` (finite-difference rows are used).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t_lo: Option<f64>,
        #[arg(long)]
        t_hi: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn resolve(select: &Selection) -> Result<ExperimentConfig, RunError> {
    if let Some(threads) = select.threads {
        // Results do not depend on the worker count; ignore failure if a
        // pool already exists (e.g. repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let mut cfg = match (&select.experiment, &select.config) {
        (Some(name), None) => presets::preset(name).ok_or_else(|| {
            RunError::Config(rankvol_cli::config::ConfigError {
                field: "--experiment".into(),
                message: format!(
                    "unknown preset `{name}`; run `rankvol list-presets` for the table"
                ),
            })
        })?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::Config(rankvol_cli::config::ConfigError {
                    field: "--config".into(),
                    message: format!("{}: {e}", path.display()),
                })
            })?;
            ExperimentConfig::parse_toml(&text).map_err(RunError::Config)?
        }
        _ => {
            return Err(RunError::Config(rankvol_cli::config::ConfigError {
                field: "--experiment/--config".into(),
                message: "exactly one of --experiment or --config is required".into(),
            }))
        }
    };
    if let Some(p) = select.paths {
        cfg.sim.paths = p;
    }
    if let Some(s) = select.seed {
        cfg.seed = s;
    }
    if let Some(dt) = select.dt {
        cfg.sim.dt_days = dt;
    }
    cfg.validate().map_err(RunError::Config)?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, cli_out: Option<PathBuf>) -> PathBuf {
    if let Some(p) = cli_out {
        return p;
    }
    if let Some(o) = &cfg.output {
        return PathBuf::from(&o.dir);
    }
    let root = std::env::var("RANKVOL_OUT").unwrap_or_else(|_| "out".into());
    PathBuf::from(root).join(&cfg.name)
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::ListPresets => {
            print!("{}", presets::preset_table());
            Ok(())
        }
        Command::Run {
            select,
            out,
            dump_drivers,
            dump_paths,
            dump_full_paths,
        } => {
            let cfg = resolve(&select)?;
            let dir = out_dir(&cfg, out);
            let outcome = execute(&cfg)?;
            let files = output::write_outputs(&outcome, &dir)?;
            if dump_drivers {
                output::write_drivers_csv(&cfg, &dir.join("drivers.csv"))?;
            }
            if dump_paths {
                output::write_paths_csv(&cfg, &dir.join("paths.csv"), false)?;
            }
            if dump_full_paths {
                output::write_paths_csv(&cfg, &dir.join("full_paths.csv"), true)?;
            }
            for f in files {
                println!("wrote {}", dir.join(f).display());
            }
            match (&outcome.fit, &outcome.fit_error) {
                (Some(f), _) => println!(
                    "fit: |skew| ~ {:.4} * T^-{:.4} (r2 {:.4}, {} points), classification: {:?}",
                    f.c, f.alpha, f.r2, f.n_used, outcome.classification
                ),
                (None, Some(e)) => println!(
                    "fit unavailable ({e}); classification: {:?}",
                    outcome.classification
                ),
                _ => {}
            }
            Ok(())
        }
        Command::Skew {
            select,
            maturity,
            dk,
        } => {
            let cfg = resolve(&select)?;
            let model = cfg.model_spec()?;
            let spec = cfg.index_spec()?;
            let sweep = sweep_config(&cfg);
            let sim = sweep.sim_config(0, maturity)?;
            let batch = rankvol::models::euler_simulate(&model, &spec.s0, &sim)?;
            let samples = rankvol::index::index_samples(&batch, &spec)?;
            let pair = rankvol::pricing::skew_pair_from_samples(&samples, maturity, dk)?;
            println!(
                "futures {:.6} +- {:.6}  atm_vol {:.6}",
                pair.forward.value, pair.forward.stderr, pair.fd.atm_vol
            );
            println!(
                "skew[finite_difference] {:+.6} +- {:.6}  (dk {:.6})",
                pair.fd.skew,
                pair.fd.stderr,
                pair.fd.dk.unwrap_or(f64::NAN)
            );
            println!(
                "skew[digital_formula]   {:+.6} +- {:.6}",
                pair.digital.skew, pair.digital.stderr
            );
            Ok(())
        }
        Command::Price {
            select,
            maturity,
            log_strike,
            forward,
        } => {
            let cfg = resolve(&select)?;
            let model = cfg.model_spec()?;
            let spec = cfg.index_spec()?;
            let sweep = sweep_config(&cfg);
            let sim = sweep.sim_config(0, maturity)?;
            let batch = rankvol::models::euler_simulate(&model, &spec.s0, &sim)?;
            let samples = rankvol::index::index_samples(&batch, &spec)?;
            let f = forward.unwrap_or_else(|| {
                rankvol::index::McEstimate::from_samples(samples.iter().copied()).value
            });
            let price = rankvol::pricing::call_price_from_samples(&samples, f, log_strike);
            println!(
                "price {:.6} +- {:.6}  (forward {:.6}, strike {:.6})",
                price.value,
                price.stderr,
                f,
                f * log_strike.exp()
            );
            match rankvol::pricing::implied_vol(price.value, maturity, f, log_strike) {
                Ok(iv) => println!("implied_vol {iv:.6}"),
                Err(e) => println!("implied_vol unavailable: {e}"),
            }
            Ok(())
        }
        Command::Futures { select, maturity } => {
            let cfg = resolve(&select)?;
            let model = cfg.model_spec()?;
            let spec = cfg.index_spec()?;
            let sweep = sweep_config(&cfg);
            let sim = sweep.sim_config(0, maturity)?;
            let est = rankvol::index::futures_price(&model, &spec, maturity, &sim)?;
            println!(
                "futures {:.6} +- {:.6}  (initial index {:.6}, paths {})",
                est.value,
                est.stderr,
                spec.initial_index(),
                est.n_paths
            );
            Ok(())
        }
        Command::Fit { input, t_lo, t_hi } => {
            let text = std::fs::read_to_string(&input).map_err(RunError::Io)?;
            let curve = parse_skew_csv(&text)?;
            let range = match (t_lo, t_hi) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or(f64::MIN), hi.unwrap_or(f64::MAX))),
            };
            let fit = rankvol::term::fit_power_law(&curve, range)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&fit).expect("fit serializes")
            );
            Ok(())
        }
    }
}

/// Parse the finite-difference rows of a skew_curve.csv back into a curve.
fn parse_skew_csv(text: &str) -> Result<rankvol::term::SkewCurve, RunError> {
    let mut points = Vec::new();
    let mut saw_header = false;
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != "t,skew,stderr,method" {
                return Err(RunError::Config(rankvol_cli::config::ConfigError {
                    field: "input".into(),
                    message: format!("unexpected CSV header `{line}`"),
                }));
            }
            saw_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(RunError::Config(rankvol_cli::config::ConfigError {
                field: "input".into(),
                message: format!("malformed row `{line}`"),
            }));
        }
        if cols[3] != "finite_difference" {
            continue;
        }
        let parse = |s: &str| -> Result<f64, RunError> {
            s.parse().map_err(|_| {
                RunError::Config(rankvol_cli::config::ConfigError {
                    field: "input".into(),
                    message: format!("bad number `{s}`"),
                })
            })
        };
        points.push(rankvol::pricing::SkewEstimate {
            t: parse(cols[0])?,
            skew: parse(cols[1])?,
            stderr: parse(cols[2])?,
            method: rankvol::pricing::SkewMethod::FiniteDifference,
            dk: None,
            atm_vol: f64::NAN,
        });
    }
    points.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(rankvol::term::SkewCurve {
        points,
        skipped: Vec::new(),
        fingerprint: "offline refit".into(),
    })
}
