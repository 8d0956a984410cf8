//! Joint sampling of a Brownian motion and its Riemann-Liouville fractional
//! (Volterra) companion `B^H_t = scale * int_0^t (t-s)^{H-1/2} dB_s`.
//!
//! Two kernel normalizations are supported. `UnitVariance` uses
//! `scale = sqrt(2H)` so that `Var(B^H_t) = t^{2H}` exactly, which is the
//! contract the downstream expansions rely on (`B^H_t ~ t^H N(0,1)`).
//! `AsWritten` uses `scale = 1/Gamma(H+1/2)`; the two agree only at H = 1/2.
//!
//! Two sampling schemes are supported. `Cholesky` draws from the exact joint
//! Gaussian law of (increments of B, values of B^H): increments are i.i.d.,
//! and B^H given the increments is Gaussian with a precomputed conditional
//! mean matrix and conditional covariance factor. `Hybrid` is the
//! first-order hybrid scheme: the kernel integral over the most recent step
//! is sampled exactly, older steps contribute through optimally-placed
//! kernel evaluations.

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::math::integrate_gl_geometric;
use crate::rng::{self, RngStream};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Kernel sqrt(2H) (t-s)^{H-1/2}: Var(B^H_t) = t^{2H}.
    UnitVariance,
    /// Kernel (t-s)^{H-1/2} / Gamma(H+1/2).
    AsWritten,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Cholesky,
    Hybrid,
}

/// Fractional-driver configuration: Hurst exponent plus kernel choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmKernel {
    pub h: f64,
    pub normalization: Normalization,
    pub scheme: Scheme,
}

impl FbmKernel {
    pub fn new(h: f64, normalization: Normalization, scheme: Scheme) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(invalid(format!(
                "Hurst exponent must lie in (0,1), got {h}"
            )));
        }
        Ok(Self {
            h,
            normalization,
            scheme,
        })
    }

    /// Default configuration: unit-variance kernel, exact joint sampling.
    pub fn unit(h: f64) -> Result<Self> {
        Self::new(h, Normalization::UnitVariance, Scheme::Cholesky)
    }

    /// Kernel prefactor.
    pub fn scale(&self) -> f64 {
        match self.normalization {
            Normalization::UnitVariance => (2.0 * self.h).sqrt(),
            Normalization::AsWritten => 1.0 / gamma(self.h + 0.5),
        }
    }

    /// Var(B^H_t) = scale^2 t^{2H} / (2H).
    pub fn variance(&self, t: f64) -> f64 {
        let s = self.scale();
        s * s * t.powf(2.0 * self.h) / (2.0 * self.h)
    }
}

/// Cov(B^H_s, B^H_t) under the kernel's normalization.
///
/// The diagonal is in closed form; off-diagonal entries integrate the
/// product kernel by quadrature after the substitution `w = y^{1/(H+1/2)}`
/// that removes the integrable endpoint singularity for H < 1/2.
pub fn volterra_covariance(s: f64, t: f64, kernel: &FbmKernel) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(invalid("covariance times must be nonnegative"));
    }
    let sc = kernel.scale();
    Ok(sc * sc * volterra_cov_raw(s.min(t), s.max(t), kernel.h))
}

/// Cov(B_s, B^H_t): closed form
/// `scale * [t^{H+1/2} - (t - min(s,t))^{H+1/2}] / (H+1/2)`.
pub fn bm_volterra_covariance(s: f64, t: f64, kernel: &FbmKernel) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(invalid("covariance times must be nonnegative"));
    }
    let hp = kernel.h + 0.5;
    let m = s.min(t);
    Ok(kernel.scale() * (t.powf(hp) - (t - m).powf(hp)) / hp)
}

/// `int_0^s (t-u)^a (s-u)^a du` for `0 <= s <= t`, `a = H - 1/2`.
fn volterra_cov_raw(s: f64, t: f64, h: f64) -> f64 {
    debug_assert!(s <= t);
    if s == 0.0 {
        return 0.0;
    }
    let a = h - 0.5;
    if s == t {
        return s.powf(2.0 * h) / (2.0 * h);
    }
    if a == 0.0 {
        return s;
    }
    // w = s - u, then w = y^p with p = 1/(a+1): integrand becomes
    // p (delta + y^p)^a, smooth on [0, s^{1/p}].
    let p = 1.0 / (a + 1.0);
    let delta = t - s;
    let upper = s.powf(1.0 / p);
    let y_star = delta.powf(1.0 / p);
    let f = |y: f64| (delta + y.powf(p)).powf(a);
    p * integrate_gl_geometric(&f, 0.0, upper, y_star)
}

/// Joint samples of (Brownian increments, Volterra values) on a grid.
///
/// Layout is row-major by path: `bm` has `steps` increments per path,
/// `volterra` has `steps + 1` node values per path with `B^H_0 = 0`.
#[derive(Debug, Clone)]
pub struct DriverPaths {
    pub grid: TimeGrid,
    pub kernel: FbmKernel,
    pub n_paths: usize,
    bm: Vec<f64>,
    volterra: Vec<f64>,
}

impl DriverPaths {
    pub fn bm_increments(&self, path: usize) -> &[f64] {
        let n = self.grid.steps();
        &self.bm[path * n..(path + 1) * n]
    }

    pub fn volterra_values(&self, path: usize) -> &[f64] {
        let n = self.grid.steps() + 1;
        &self.volterra[path * n..(path + 1) * n]
    }
}

/// Precomputed sampling machinery for one (grid, kernel) pair. Construction
/// does the quadrature and factorization work once; sampling is then pure
/// and safe to call concurrently.
pub struct JointSampler {
    grid: TimeGrid,
    kernel: FbmKernel,
    sqrt_deltas: Vec<f64>,
    inner: SamplerKind,
}

enum SamplerKind {
    /// H = 1/2: the Volterra process is `scale * B` itself.
    Degenerate,
    Cholesky {
        /// Conditional mean of B^H given increments: packed lower triangle.
        cond_mean: PackedLower,
        /// Cholesky factor of the conditional covariance.
        cond_chol: PackedLower,
    },
    Hybrid {
        /// Kernel weights for steps k = 2..=n (index 0 unused).
        weights: Vec<f64>,
        l21: f64,
        l22: f64,
    },
}

/// Packed row-major lower-triangular matrix.
struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

impl PackedLower {
    fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; n * (n + 1) / 2];
        let rows: Vec<(usize, &mut [f64])> = {
            let mut rows = Vec::with_capacity(n);
            let mut rest = data.as_mut_slice();
            for i in 0..n {
                let (row, tail) = rest.split_at_mut(i + 1);
                rows.push((i, row));
                rest = tail;
            }
            rows
        };
        crate::parallel::maybe_par_for_each(rows, |(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        });
        Self { n, data }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    /// out[i] += sum_j L[i][j] x[j].
    fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for (l, xv) in row.iter().zip(&x[..=i]) {
                acc += l * xv;
            }
            out[i] += acc;
        }
    }
}

impl JointSampler {
    pub fn new(grid: &TimeGrid, kernel: &FbmKernel) -> Result<Self> {
        let deltas = grid.deltas();
        let sqrt_deltas: Vec<f64> = deltas.iter().map(|d| d.sqrt()).collect();
        let inner = if kernel.h == 0.5 {
            SamplerKind::Degenerate
        } else {
            match kernel.scheme {
                Scheme::Cholesky => build_conditional(grid, kernel, &deltas)?,
                Scheme::Hybrid => build_hybrid(grid, kernel, &deltas)?,
            }
        };
        Ok(Self {
            grid: grid.clone(),
            kernel: *kernel,
            sqrt_deltas,
            inner,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Normals consumed per path.
    pub fn normals_per_path(&self) -> usize {
        let n = self.grid.steps();
        match self.inner {
            SamplerKind::Degenerate => n,
            SamplerKind::Cholesky { .. } => 2 * n,
            SamplerKind::Hybrid { .. } => 2 * n,
        }
    }

    /// Sample `count` paths from one stream into caller-provided buffers.
    /// `bm` receives `count * steps` increments, `volterra` receives
    /// `count * (steps + 1)` node values.
    pub fn sample_chunk(
        &self,
        stream: RngStream,
        count: usize,
        bm: &mut [f64],
        volterra: &mut [f64],
    ) {
        let n = self.grid.steps();
        debug_assert_eq!(bm.len(), count * n);
        debug_assert_eq!(volterra.len(), count * (n + 1));
        let mut rng = stream.rng();
        let mut z = vec![0.0; self.normals_per_path()];
        let scale = self.kernel.scale();
        for p in 0..count {
            rng::fill_normals(&mut rng, &mut z);
            let db = &mut bm[p * n..(p + 1) * n];
            let vol = &mut volterra[p * (n + 1)..(p + 1) * (n + 1)];
            vol[0] = 0.0;
            match &self.inner {
                SamplerKind::Degenerate => {
                    let mut acc = 0.0;
                    for i in 0..n {
                        db[i] = self.sqrt_deltas[i] * z[i];
                        acc += db[i];
                        vol[i + 1] = scale * acc;
                    }
                }
                SamplerKind::Cholesky {
                    cond_mean,
                    cond_chol,
                } => {
                    for i in 0..n {
                        db[i] = self.sqrt_deltas[i] * z[i];
                    }
                    let xi = &z[n..];
                    vol[1..].fill(0.0);
                    cond_mean.matvec_add(db, &mut vol[1..]);
                    cond_chol.matvec_add(xi, &mut vol[1..]);
                    for v in vol[1..].iter_mut() {
                        *v *= scale;
                    }
                }
                SamplerKind::Hybrid { weights, l21, l22 } => {
                    for i in 0..n {
                        db[i] = self.sqrt_deltas[i] * z[2 * i];
                    }
                    for i in 1..=n {
                        let exact = l21 * z[2 * (i - 1)] + l22 * z[2 * i - 1];
                        let mut acc = exact;
                        for k in 2..=i {
                            acc += weights[k] * db[i - k];
                        }
                        vol[i] = scale * acc;
                    }
                }
            }
        }
    }
}

/// Exact conditional-Gaussian construction. With `V = (B^H_{t_1..t_n})` and
/// `D = (increments of B)`, V | D is Gaussian with mean `Cov(V,D) D^-1 D`
/// and covariance `Cov(V,V) - Cov(V,D) D^-1 Cov(V,D)^T`; D is diagonal.
fn build_conditional(grid: &TimeGrid, kernel: &FbmKernel, deltas: &[f64]) -> Result<SamplerKind> {
    let n = grid.steps();
    let nodes = &grid.nodes()[1..];
    let h = kernel.h;
    let hp = h + 0.5;

    // Cov(B^H_{t_i}, dB_j) for j <= i, without the kernel prefactor.
    let cvb = PackedLower::from_fn(n, |i, j| {
        let ti = nodes[i];
        let tj0 = grid.nodes()[j];
        let tj1 = grid.nodes()[j + 1];
        ((ti - tj0).powf(hp) - (ti - tj1).max(0.0).powf(hp)) / hp
    });
    let cond_mean = PackedLower {
        n,
        data: {
            let mut d = cvb.data.clone();
            let mut idx = 0;
            for i in 0..n {
                for j in 0..=i {
                    d[idx] /= deltas[j];
                    idx += 1;
                }
                let _ = i;
            }
            d
        },
    };

    // Conditional covariance (scale-free): C_vv[i][j] - sum_k cvb[i][k] cvb[j][k] / delta_k.
    let mut sigma = DMatrix::<f64>::zeros(n, n);
    {
        let rows: Vec<(usize, Vec<f64>)> = {
            let idx: Vec<usize> = (0..n).collect();
            crate::parallel::maybe_par_map(idx, |i| {
                let mut row = vec![0.0; i + 1];
                for j in 0..=i {
                    let c = volterra_cov_raw(nodes[j], nodes[i], h);
                    let mut dot = 0.0;
                    for k in 0..=j.min(i) {
                        dot += cvb.row(i)[k] * cvb.row(j)[k] / deltas[k];
                    }
                    row[j] = c - dot;
                }
                (i, row)
            })
        };
        for (i, row) in rows {
            for (j, v) in row.into_iter().enumerate() {
                sigma[(i, j)] = v;
                sigma[(j, i)] = v;
            }
        }
    }

    let chol = match nalgebra::Cholesky::new(sigma.clone()) {
        Some(c) => c,
        None => {
            // One ridge pass, then fail hard.
            let ridge = 1e-12 * sigma.trace() / n as f64;
            for i in 0..n {
                sigma[(i, i)] += ridge;
            }
            nalgebra::Cholesky::new(sigma).ok_or(Error::CovarianceNotPd { dim: n, hurst: h })?
        }
    };
    let l = chol.l();
    let cond_chol = PackedLower {
        n,
        data: {
            let mut d = vec![0.0; n * (n + 1) / 2];
            let mut idx = 0;
            for i in 0..n {
                for j in 0..=i {
                    d[idx] = l[(i, j)];
                    idx += 1;
                }
            }
            d
        },
    };
    Ok(SamplerKind::Cholesky {
        cond_mean,
        cond_chol,
    })
}

/// First-order hybrid scheme on a uniform grid. The most recent kernel
/// segment is sampled exactly from a 2x2 Gaussian with the step increment;
/// remaining segments use the kernel evaluated at the L2-optimal point,
/// `g_k = delta^a (k^{a+1} - (k-1)^{a+1}) / (a+1)`.
fn build_hybrid(grid: &TimeGrid, kernel: &FbmKernel, deltas: &[f64]) -> Result<SamplerKind> {
    if !grid.is_uniform() {
        return Err(invalid("hybrid scheme requires a uniform grid"));
    }
    let n = grid.steps();
    let delta = deltas[0];
    let a = kernel.h - 0.5;
    let mut weights = vec![0.0; n + 1];
    let da = delta.powf(a);
    for (k, w) in weights.iter_mut().enumerate().skip(2) {
        let kf = k as f64;
        *w = da * (kf.powf(a + 1.0) - (kf - 1.0).powf(a + 1.0)) / (a + 1.0);
    }
    let var_v = delta.powf(2.0 * kernel.h) / (2.0 * kernel.h);
    let cov = delta.powf(kernel.h + 0.5) / (kernel.h + 0.5);
    let l21 = cov / delta.sqrt();
    let l22 = (var_v - l21 * l21).max(0.0).sqrt();
    Ok(SamplerKind::Hybrid { weights, l21, l22 })
}

/// Sample `n_paths` joint paths. Chunk `c` of [`rng::PATH_CHUNK`] paths uses
/// stream id `stream.stream_id + c`, so output is independent of worker
/// scheduling.
pub fn sample_joint_driver(
    grid: &TimeGrid,
    kernel: &FbmKernel,
    n_paths: usize,
    stream: RngStream,
) -> Result<DriverPaths> {
    if n_paths == 0 {
        return Err(invalid("n_paths must be at least 1"));
    }
    let sampler = JointSampler::new(grid, kernel)?;
    let n = grid.steps();
    let mut bm = vec![0.0; n_paths * n];
    let mut volterra = vec![0.0; n_paths * (n + 1)];

    let jobs: Vec<(usize, &mut [f64], &mut [f64])> = {
        let mut jobs = Vec::new();
        let mut bm_rest = bm.as_mut_slice();
        let mut vt_rest = volterra.as_mut_slice();
        for c in 0..rng::chunk_count(n_paths) {
            let count = rng::chunk_range(c, n_paths).len();
            let (bm_chunk, bm_tail) = bm_rest.split_at_mut(count * n);
            let (vt_chunk, vt_tail) = vt_rest.split_at_mut(count * (n + 1));
            bm_rest = bm_tail;
            vt_rest = vt_tail;
            jobs.push((c, bm_chunk, vt_chunk));
        }
        jobs
    };
    crate::parallel::maybe_par_for_each(jobs, |(c, bm_chunk, vt_chunk)| {
        let count = bm_chunk.len() / n;
        let s = RngStream::new(stream.seed, stream.stream_id + c as u64);
        sampler.sample_chunk(s, count, bm_chunk, vt_chunk);
    });

    Ok(DriverPaths {
        grid: grid.clone(),
        kernel: *kernel,
        n_paths,
        bm,
        volterra,
    })
}
