//! Model specifications and Euler simulation of log-prices.
//!
//! Three per-asset dynamics are implemented, each driven by its own
//! independent factor pair (B^j, W^j):
//!
//! - geometric Brownian motion, `dZ = -sigma^2/2 dt + sigma dB`;
//! - fractional Stein-Stein, where the *volatility*
//!   `sigma_t = sigma0 (1 + B^H_t) / sqrt(1 + t^{2H})` is a signed affine
//!   transform of the Volterra process and
//!   `dZ = -sigma_t^2/2 dt + sigma_t (rho dB + sqrt(1-rho^2) dW)`;
//! - fractional Bergomi, where `sigma_t` is a *forward variance*,
//!   `sigma_t = var0 exp(eta B^H_t - eta^2 Var(B^H_t)/2)`, and
//!   `dZ = -sigma_t/2 dt + sqrt(sigma_t) (rho dB + sqrt(1-rho^2) dW)`.
//!
//! The Euler scheme freezes the volatility at the left endpoint of each
//! step. Log-dynamics are independent of the initial price, so terminal
//! prices scale exactly with s0 under a fixed seed.

use crate::drivers::{FbmKernel, JointSampler, Normalization, Scheme};
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::rng::{self, RngStream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssetDynamics {
    Gbm {
        sigma: f64,
    },
    FractionalSteinStein {
        sigma0: f64,
        h: f64,
        rho: f64,
    },
    FractionalBergomi {
        var0: f64,
        eta: f64,
        h: f64,
        rho: f64,
    },
}

impl AssetDynamics {
    fn validate(&self) -> Result<()> {
        let check_rho = |rho: f64| {
            if !(-1.0..=1.0).contains(&rho) {
                return Err(invalid(format!("rho must lie in [-1,1], got {rho}")));
            }
            Ok(())
        };
        let check_h = |h: f64| {
            if !(h > 0.0 && h < 1.0) {
                return Err(invalid(format!(
                    "Hurst exponent must lie in (0,1), got {h}"
                )));
            }
            Ok(())
        };
        match *self {
            AssetDynamics::Gbm { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(invalid(format!("sigma must be nonnegative, got {sigma}")));
                }
            }
            AssetDynamics::FractionalSteinStein { sigma0, h, rho } => {
                if !(sigma0 > 0.0 && sigma0.is_finite()) {
                    return Err(invalid(format!("sigma0 must be positive, got {sigma0}")));
                }
                check_h(h)?;
                check_rho(rho)?;
            }
            AssetDynamics::FractionalBergomi { var0, eta, h, rho } => {
                if !(var0 > 0.0 && var0.is_finite()) {
                    return Err(invalid(format!("var0 must be positive, got {var0}")));
                }
                if !(eta >= 0.0 && eta.is_finite()) {
                    return Err(invalid(format!("eta must be nonnegative, got {eta}")));
                }
                check_h(h)?;
                check_rho(rho)?;
            }
        }
        Ok(())
    }

    /// Hurst exponent used by rate predictions; Brownian dynamics count as
    /// H = 1/2.
    pub fn hurst(&self) -> f64 {
        match *self {
            AssetDynamics::Gbm { .. } => 0.5,
            AssetDynamics::FractionalSteinStein { h, .. } => h,
            AssetDynamics::FractionalBergomi { h, .. } => h,
        }
    }

    /// Initial forward variance v_0(0) = E[sigma_0^2] (variance units).
    pub fn initial_variance(&self) -> f64 {
        match *self {
            AssetDynamics::Gbm { sigma } => sigma * sigma,
            AssetDynamics::FractionalSteinStein { sigma0, .. } => sigma0 * sigma0,
            AssetDynamics::FractionalBergomi { var0, .. } => var0,
        }
    }

    fn needs_fractional_driver(&self) -> bool {
        !matches!(self, AssetDynamics::Gbm { .. })
    }

    fn needs_orthogonal_factor(&self) -> bool {
        !matches!(self, AssetDynamics::Gbm { .. })
    }
}

/// Full description of an n-asset model. Assets are driven by mutually
/// independent factor pairs; cross-asset correlation is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub assets: Vec<AssetDynamics>,
    pub normalization: Normalization,
    pub scheme: Scheme,
}

impl ModelSpec {
    pub fn new(
        assets: Vec<AssetDynamics>,
        normalization: Normalization,
        scheme: Scheme,
    ) -> Result<Self> {
        if assets.is_empty() {
            return Err(invalid("model needs at least one asset"));
        }
        for a in &assets {
            a.validate()?;
        }
        Ok(Self {
            assets,
            normalization,
            scheme,
        })
    }

    pub fn gbm(sigmas: &[f64]) -> Result<Self> {
        Self::new(
            sigmas
                .iter()
                .map(|&sigma| AssetDynamics::Gbm { sigma })
                .collect(),
            Normalization::UnitVariance,
            Scheme::Cholesky,
        )
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn kernel_for(&self, asset: usize) -> Result<Option<FbmKernel>> {
        let a = &self.assets[asset];
        if !a.needs_fractional_driver() {
            return Ok(None);
        }
        Ok(Some(FbmKernel::new(
            a.hurst(),
            self.normalization,
            self.scheme,
        )?))
    }
}

/// Simulation shape: path count, grid, master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub grid: TimeGrid,
    pub seed: u64,
    pub store_full_paths: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, grid: TimeGrid, seed: u64) -> Result<Self> {
        if n_paths == 0 {
            return Err(invalid("n_paths must be at least 1"));
        }
        Ok(Self {
            n_paths,
            grid,
            seed,
            store_full_paths: false,
        })
    }

    /// Uniform grid out to `horizon` in steps of roughly `dt`.
    pub fn uniform(n_paths: usize, horizon: f64, dt: f64, seed: u64) -> Result<Self> {
        Self::new(n_paths, TimeGrid::uniform(horizon, dt)?, seed)
    }
}

/// Terminal log-returns, independent of initial prices. The cheap bridge
/// between one heavy simulation and many initial-price configurations.
#[derive(Debug, Clone)]
pub struct ReturnsBatch {
    pub model: ModelSpec,
    pub cfg: SimConfig,
    /// Row-major paths x assets terminal log-returns.
    pub returns: Vec<f64>,
    /// Only with `store_full_paths`: paths x nodes x assets log-returns.
    pub full: Option<Vec<f64>>,
}

impl ReturnsBatch {
    pub fn terminal_return(&self, path: usize, asset: usize) -> f64 {
        self.returns[path * self.model.n_assets() + asset]
    }

    /// Apply initial prices: S_T = s0 * exp(R_T).
    pub fn to_prices(&self, s0: &[f64]) -> Result<PathBatch> {
        let n = self.model.n_assets();
        if s0.len() != n {
            return Err(invalid(format!(
                "s0 has {} entries, model has {n} assets",
                s0.len()
            )));
        }
        if s0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("initial prices must be positive and finite"));
        }
        let mut terminal = vec![0.0; self.returns.len()];
        for p in 0..self.cfg.n_paths {
            for j in 0..n {
                terminal[p * n + j] = s0[j] * self.returns[p * n + j].exp();
            }
        }
        let full = self.full.as_ref().map(|r| {
            let nodes = self.cfg.grid.nodes().len();
            let mut out = vec![0.0; r.len()];
            for p in 0..self.cfg.n_paths {
                for i in 0..nodes {
                    for j in 0..n {
                        let idx = (p * nodes + i) * n + j;
                        out[idx] = s0[j] * r[idx].exp();
                    }
                }
            }
            out
        });
        Ok(PathBatch {
            model: self.model.clone(),
            cfg: self.cfg.clone(),
            s0: s0.to_vec(),
            terminal,
            full,
        })
    }
}

/// Simulated terminal (and optionally full-path) prices, with enough
/// metadata to regenerate the batch bit-identically.
#[derive(Debug, Clone)]
pub struct PathBatch {
    pub model: ModelSpec,
    pub cfg: SimConfig,
    pub s0: Vec<f64>,
    /// Row-major paths x assets.
    pub terminal: Vec<f64>,
    /// Only with `store_full_paths`: paths x nodes x assets prices.
    pub full: Option<Vec<f64>>,
}

impl PathBatch {
    pub fn n_paths(&self) -> usize {
        self.cfg.n_paths
    }

    pub fn terminal_prices(&self, path: usize) -> &[f64] {
        let n = self.model.n_assets();
        &self.terminal[path * n..(path + 1) * n]
    }
}

const ROLE_DRIVER: u64 = 0x6472_7672; // factor pair (B, B^H)
const ROLE_ORTHO: u64 = 0x6f72_7468; // orthogonal factor W

fn stream_for(seed: u64, role: u64, asset: usize, chunk: usize) -> RngStream {
    RngStream::new(
        rng::mix(rng::mix(seed, role), asset as u64 + 1),
        chunk as u64,
    )
}

/// Volatility (Stein-Stein, GBM) or forward variance (Bergomi) along the
/// grid for one asset, evaluated at every node per path; row-major
/// paths x nodes. The Stein-Stein value is signed; it enters the SDE as is.
pub fn vol_path(
    model: &ModelSpec,
    asset: usize,
    driver: &crate::drivers::DriverPaths,
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    if driver.grid != *grid {
        return Err(Error::GridMismatch {
            message: "driver was sampled on a different grid".into(),
        });
    }
    let nodes = grid.nodes();
    let m = nodes.len();
    let mut out = vec![0.0; driver.n_paths * m];
    for p in 0..driver.n_paths {
        let vt = driver.volterra_values(p);
        let row = &mut out[p * m..(p + 1) * m];
        fill_vol_row(&model.assets[asset], model, asset, nodes, vt, row)?;
    }
    Ok(out)
}

fn fill_vol_row(
    dynamics: &AssetDynamics,
    model: &ModelSpec,
    asset: usize,
    nodes: &[f64],
    volterra: &[f64],
    out: &mut [f64],
) -> Result<()> {
    match *dynamics {
        AssetDynamics::Gbm { sigma } => out.fill(sigma),
        AssetDynamics::FractionalSteinStein { sigma0, h, .. } => {
            for (i, (&t, o)) in nodes.iter().zip(out.iter_mut()).enumerate() {
                *o = sigma0 * (1.0 + volterra[i]) / (1.0 + t.powf(2.0 * h)).sqrt();
            }
        }
        AssetDynamics::FractionalBergomi { var0, eta, .. } => {
            let kernel = model
                .kernel_for(asset)?
                .expect("bergomi asset has a kernel");
            for (i, (&t, o)) in nodes.iter().zip(out.iter_mut()).enumerate() {
                let compensator = 0.5 * eta * eta * kernel.variance(t);
                *o = (var0 * (eta * volterra[i] - compensator).exp()).max(0.0);
            }
        }
    }
    Ok(())
}

/// Euler simulation of terminal log-returns; see [`euler_simulate`] for the
/// price-level wrapper.
pub fn simulate_returns(model: &ModelSpec, cfg: &SimConfig) -> Result<ReturnsBatch> {
    let n_assets = model.n_assets();
    let grid = &cfg.grid;
    let steps = grid.steps();
    let nodes = grid.nodes().to_vec();
    let deltas = grid.deltas();
    let sqrt_deltas: Vec<f64> = deltas.iter().map(|d| d.sqrt()).collect();

    let samplers: Vec<Option<JointSampler>> = (0..n_assets)
        .map(|j| match model.kernel_for(j)? {
            Some(k) => Ok(Some(JointSampler::new(grid, &k)?)),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    let n_paths = cfg.n_paths;
    let node_count = steps + 1;
    let mut returns = vec![0.0; n_paths * n_assets];
    let mut full = if cfg.store_full_paths {
        Some(vec![0.0; n_paths * node_count * n_assets])
    } else {
        None
    };

    struct Job<'a> {
        chunk: usize,
        count: usize,
        first_path: usize,
        returns: &'a mut [f64],
        full: Option<&'a mut [f64]>,
    }

    let jobs: Vec<Job> = {
        let mut jobs = Vec::new();
        let mut ret_rest = returns.as_mut_slice();
        let mut full_rest = full.as_deref_mut();
        for c in 0..rng::chunk_count(n_paths) {
            let range = rng::chunk_range(c, n_paths);
            let count = range.len();
            let (ret_chunk, ret_tail) = ret_rest.split_at_mut(count * n_assets);
            ret_rest = ret_tail;
            let full_chunk = match full_rest.take() {
                Some(rest) => {
                    let (chunk, tail) = rest.split_at_mut(count * node_count * n_assets);
                    full_rest = Some(tail);
                    Some(chunk)
                }
                None => None,
            };
            jobs.push(Job {
                chunk: c,
                count,
                first_path: range.start,
                returns: ret_chunk,
                full: full_chunk,
            });
        }
        jobs
    };

    let outcomes: Vec<Option<Error>> = crate::parallel::maybe_par_map(jobs, |mut job| {
        let mut bm = vec![0.0; job.count * steps];
        let mut volterra = vec![0.0; job.count * node_count];
        let mut ortho = vec![0.0; job.count * steps];
        let mut vol_row = vec![0.0; node_count];
        for (j, dynamics) in model.assets.iter().enumerate() {
            match &samplers[j] {
                Some(sampler) => {
                    let s = stream_for(cfg.seed, ROLE_DRIVER, j, job.chunk);
                    sampler.sample_chunk(s, job.count, &mut bm, &mut volterra);
                }
                None => {
                    let s = stream_for(cfg.seed, ROLE_DRIVER, j, job.chunk);
                    let mut rng = s.rng();
                    rng::fill_normals(&mut rng, &mut bm[..job.count * steps]);
                    for p in 0..job.count {
                        for i in 0..steps {
                            bm[p * steps + i] *= sqrt_deltas[i];
                        }
                    }
                }
            }
            if dynamics.needs_orthogonal_factor() {
                let s = stream_for(cfg.seed, ROLE_ORTHO, j, job.chunk);
                let mut rng = s.rng();
                rng::fill_normals(&mut rng, &mut ortho[..job.count * steps]);
                for p in 0..job.count {
                    for i in 0..steps {
                        ortho[p * steps + i] *= sqrt_deltas[i];
                    }
                }
            }
            for p in 0..job.count {
                let db = &bm[p * steps..(p + 1) * steps];
                let dw = &ortho[p * steps..(p + 1) * steps];
                let vt = &volterra[p * node_count..(p + 1) * node_count];
                if fill_vol_row(dynamics, model, j, &nodes, vt, &mut vol_row).is_err() {
                    unreachable!("vol evaluation cannot fail after validation");
                }
                let mut z = 0.0;
                for i in 0..steps {
                    let increment = match *dynamics {
                        AssetDynamics::Gbm { sigma } => {
                            -0.5 * sigma * sigma * deltas[i] + sigma * db[i]
                        }
                        AssetDynamics::FractionalSteinStein { rho, .. } => {
                            let sig = vol_row[i];
                            let mixed = rho * db[i] + (1.0 - rho * rho).sqrt() * dw[i];
                            -0.5 * sig * sig * deltas[i] + sig * mixed
                        }
                        AssetDynamics::FractionalBergomi { rho, .. } => {
                            let var = vol_row[i];
                            let mixed = rho * db[i] + (1.0 - rho * rho).sqrt() * dw[i];
                            -0.5 * var * deltas[i] + var.sqrt() * mixed
                        }
                    };
                    z += increment;
                    if !z.is_finite() {
                        return Some(Error::NonFinitePath {
                            asset: j,
                            step: i,
                            path: job.first_path + p,
                        });
                    }
                    if let Some(fp) = job.full.as_deref_mut() {
                        fp[(p * node_count + i + 1) * n_assets + j] = z;
                    }
                }
                job.returns[p * n_assets + j] = z;
            }
        }
        None
    });
    if let Some(err) = outcomes.into_iter().flatten().next() {
        return Err(err);
    }

    Ok(ReturnsBatch {
        model: model.clone(),
        cfg: cfg.clone(),
        returns,
        full,
    })
}

/// Euler simulation of terminal prices `S_T = s0 exp(Z_T)` with the
/// volatility frozen at the left endpoint of each step.
pub fn euler_simulate(model: &ModelSpec, s0: &[f64], cfg: &SimConfig) -> Result<PathBatch> {
    simulate_returns(model, cfg)?.to_prices(s0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::sample_joint_driver;

    fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let v: Vec<f64> = xs.collect();
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        (mean, (var / n as f64).sqrt(), n)
    }

    #[test]
    fn gbm_vol_path_is_constant() {
        let model = ModelSpec::gbm(&[0.2]).unwrap();
        let grid = TimeGrid::uniform(0.5, 0.1).unwrap();
        let k = FbmKernel::unit(0.5).unwrap();
        let driver = sample_joint_driver(&grid, &k, 8, RngStream::new(1, 0)).unwrap();
        let v = vol_path(&model, 0, &driver, &grid).unwrap();
        assert!(v.iter().all(|x| *x == 0.2));
    }

    #[test]
    fn stein_stein_starts_at_sigma0() {
        let model = ModelSpec::new(
            vec![AssetDynamics::FractionalSteinStein {
                sigma0: 0.37,
                h: 0.7,
                rho: -0.5,
            }],
            Normalization::UnitVariance,
            Scheme::Cholesky,
        )
        .unwrap();
        let grid = TimeGrid::uniform(0.25, 0.05).unwrap();
        let driver = sample_joint_driver(
            &grid,
            &FbmKernel::unit(0.7).unwrap(),
            16,
            RngStream::new(2, 0),
        )
        .unwrap();
        let v = vol_path(&model, 0, &driver, &grid).unwrap();
        let m = grid.nodes().len();
        for p in 0..16 {
            assert_eq!(v[p * m], 0.37);
        }
    }

    #[test]
    fn bergomi_forward_variance_mean_is_flat() {
        // E[exp(eta X - eta^2 Var(X)/2)] = 1 with Var(X) = t^{2H}.
        let var0 = 0.09;
        let model = ModelSpec::new(
            vec![AssetDynamics::FractionalBergomi {
                var0,
                eta: 3.61,
                h: 0.7,
                rho: 0.0,
            }],
            Normalization::UnitVariance,
            Scheme::Cholesky,
        )
        .unwrap();
        let grid = TimeGrid::uniform(0.25, 0.25 / 8.0).unwrap();
        let n_paths = 100_000;
        let driver = sample_joint_driver(
            &grid,
            &FbmKernel::unit(0.7).unwrap(),
            n_paths,
            RngStream::new(3, 0),
        )
        .unwrap();
        let v = vol_path(&model, 0, &driver, &grid).unwrap();
        let m = grid.nodes().len();
        let (mean, se, _) = mean_and_se((0..n_paths).map(|p| v[p * m + m - 1]));
        assert!(
            (mean - var0).abs() < 5.0 * se,
            "mean {mean} vs {var0} (se {se})"
        );
    }

    #[test]
    fn zero_volatility_keeps_prices_at_start() {
        let model = ModelSpec::gbm(&[0.0]).unwrap();
        let cfg = SimConfig::uniform(128, 0.5, 0.1, 7).unwrap();
        let batch = euler_simulate(&model, &[42.0], &cfg).unwrap();
        assert!(batch.terminal.iter().all(|s| (*s - 42.0).abs() < 1e-12));
    }

    #[test]
    fn gbm_terminal_law_matches_lognormal() {
        let model = ModelSpec::gbm(&[0.2]).unwrap();
        let cfg = SimConfig::uniform(100_000, 1.0, 1.0 / 64.0, 11).unwrap();
        let batch = euler_simulate(&model, &[100.0], &cfg).unwrap();
        // Martingale property.
        let (mean, se, _) = mean_and_se(batch.terminal.iter().copied());
        assert!((mean - 100.0).abs() < 3.0 * se, "mean {mean} (se {se})");
        // Var(ln S_T) = sigma^2 T exactly at any step size.
        let logs: Vec<f64> = batch.terminal.iter().map(|s| s.ln()).collect();
        let lm = logs.iter().sum::<f64>() / logs.len() as f64;
        let var = logs.iter().map(|x| (x - lm) * (x - lm)).sum::<f64>() / (logs.len() as f64 - 1.0);
        // stderr of the sample variance of a Gaussian: var * sqrt(2/(n-1)).
        let se_var = var * (2.0 / (logs.len() as f64 - 1.0)).sqrt();
        assert!((var - 0.04).abs() < 5.0 * se_var, "var {var} (se {se_var})");
    }

    #[test]
    fn scaling_initial_prices_scales_terminal_prices_exactly() {
        let model = ModelSpec::new(
            vec![
                AssetDynamics::Gbm { sigma: 0.2 },
                AssetDynamics::FractionalSteinStein {
                    sigma0: 0.6,
                    h: 0.7,
                    rho: -0.5,
                },
            ],
            Normalization::UnitVariance,
            Scheme::Cholesky,
        )
        .unwrap();
        let cfg = SimConfig::uniform(500, 0.1, 0.1 / 16.0, 13).unwrap();
        let a = euler_simulate(&model, &[100.0, 50.0], &cfg).unwrap();
        let b = euler_simulate(&model, &[300.0, 150.0], &cfg).unwrap();
        for (x, y) in a.terminal.iter().zip(&b.terminal) {
            assert!((y / x - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_refinement_is_a_smoke_change_for_gbm() {
        let model = ModelSpec::gbm(&[0.3]).unwrap();
        let coarse = SimConfig::uniform(50_000, 0.25, 0.25 / 32.0, 17).unwrap();
        let fine = SimConfig::uniform(50_000, 0.25, 0.25 / 64.0, 17).unwrap();
        let a = euler_simulate(&model, &[1.0], &coarse).unwrap();
        let b = euler_simulate(&model, &[1.0], &fine).unwrap();
        let (ma, sa, _) = mean_and_se(a.terminal.iter().copied());
        let (mb, _, _) = mean_and_se(b.terminal.iter().copied());
        assert!((ma - mb).abs() < sa, "coarse {ma} vs fine {mb} (se {sa})");
    }

    #[test]
    fn martingale_check_across_variants() {
        // Price processes stay (local) martingales; sample means must sit
        // within 4 standard errors of s0, flagged up to 6.
        let variants = vec![
            AssetDynamics::Gbm { sigma: 0.2 },
            AssetDynamics::FractionalSteinStein {
                sigma0: 0.2,
                h: 0.6,
                rho: 0.0,
            },
            AssetDynamics::FractionalSteinStein {
                sigma0: 0.2,
                h: 0.6,
                rho: -0.5,
            },
            AssetDynamics::FractionalBergomi {
                var0: 0.04,
                eta: 1.0,
                h: 0.7,
                rho: 0.0,
            },
        ];
        for dyn_ in variants {
            let model =
                ModelSpec::new(vec![dyn_], Normalization::UnitVariance, Scheme::Cholesky).unwrap();
            let cfg = SimConfig::uniform(100_000, 1.0 / 12.0, 0.1 / 365.0, 19).unwrap();
            let batch = euler_simulate(&model, &[100.0], &cfg).unwrap();
            let (mean, se, _) = mean_and_se(batch.terminal.iter().copied());
            let dev = (mean - 100.0).abs() / se;
            if dev > 4.0 {
                eprintln!("martingale check at 4-sigma flagged for {dyn_:?}: {dev:.2} sigma");
            }
            assert!(dev < 6.0, "{dyn_:?}: mean {mean} off by {dev:.2} sigma");
        }
    }

    #[test]
    fn simulation_is_reproducible_from_metadata() {
        let model = ModelSpec::new(
            vec![AssetDynamics::FractionalSteinStein {
                sigma0: 0.4,
                h: 0.3,
                rho: -0.5,
            }],
            Normalization::UnitVariance,
            Scheme::Cholesky,
        )
        .unwrap();
        let cfg = SimConfig::uniform(2048, 0.05, 0.05 / 16.0, 23).unwrap();
        let batch = euler_simulate(&model, &[77.0], &cfg).unwrap();
        let again = euler_simulate(&batch.model, &batch.s0, &batch.cfg).unwrap();
        assert_eq!(batch.terminal, again.terminal);
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = ModelSpec::gbm(&[0.2, 0.6]).unwrap();
        let cfg = SimConfig::uniform(16, 0.1, 0.05, 1).unwrap();
        assert!(euler_simulate(&model, &[100.0], &cfg).is_err());
        assert!(euler_simulate(&model, &[100.0, -1.0], &cfg).is_err());
        assert!(ModelSpec::new(
            vec![AssetDynamics::FractionalSteinStein {
                sigma0: 0.2,
                h: 1.2,
                rho: 0.0
            }],
            Normalization::UnitVariance,
            Scheme::Cholesky
        )
        .is_err());
    }

    #[test]
    fn full_paths_start_at_s0_and_end_at_terminal() {
        let model = ModelSpec::gbm(&[0.2]).unwrap();
        let mut cfg = SimConfig::uniform(32, 0.1, 0.02, 5).unwrap();
        cfg.store_full_paths = true;
        let batch = euler_simulate(&model, &[100.0], &cfg).unwrap();
        let full = batch.full.as_ref().unwrap();
        let nodes = batch.cfg.grid.nodes().len();
        for p in 0..32 {
            assert_eq!(full[p * nodes], 100.0);
            let last = full[p * nodes + nodes - 1];
            assert!((last - batch.terminal[p]).abs() < 1e-12);
        }
    }
}
