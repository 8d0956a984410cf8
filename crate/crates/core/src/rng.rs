//! Reproducible Gaussian streams.
//!
//! All randomness flows through [`RngStream`]: a (seed, stream_id) pair that
//! deterministically names a ChaCha substream. Path batches are carved into
//! fixed chunks of [`PATH_CHUNK`] paths, one stream per chunk, so results are
//! bit-identical regardless of how chunks are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Paths per RNG stream. Baked into batch metadata: changing it changes
/// every simulation output.
pub const PATH_CHUNK: usize = 1024;

/// Name of one deterministic substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// i.i.d. standard normal samples, deterministic for a fixed stream.
pub fn standard_normals(stream: RngStream, count: usize) -> Vec<f64> {
    let mut rng = stream.rng();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(StandardNormal.sample(&mut rng));
    }
    out
}

/// Fill a slice with standard normals from an already-positioned generator.
pub(crate) fn fill_normals(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// splitmix64 finalizer; used to derive independent seeds for
/// (asset, role, maturity) sub-streams from one master seed.
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Number of chunks needed for `n_paths`.
pub fn chunk_count(n_paths: usize) -> usize {
    n_paths.div_ceil(PATH_CHUNK)
}

/// Half-open path range covered by chunk `c`.
pub fn chunk_range(c: usize, n_paths: usize) -> std::ops::Range<usize> {
    let lo = c * PATH_CHUNK;
    lo..((c + 1) * PATH_CHUNK).min(n_paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_request_gives_empty_array() {
        assert!(standard_normals(RngStream::new(1, 0), 0).is_empty());
    }

    #[test]
    fn identical_streams_are_bit_identical() {
        let a = standard_normals(RngStream::new(7, 3), 10);
        let b = standard_normals(RngStream::new(7, 3), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let a = standard_normals(RngStream::new(7, 3), 10);
        let b = standard_normals(RngStream::new(7, 4), 10);
        let c = standard_normals(RngStream::new(8, 3), 10);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn moments_match_standard_normal() {
        // CLT bound on the mean and a loose bound on the variance at 1e6
        // samples.
        let n = 1_000_000;
        let xs = standard_normals(RngStream::new(42, 0), n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn chunk_ranges_partition_paths() {
        let n = 2_500;
        let mut covered = 0;
        for c in 0..chunk_count(n) {
            covered += chunk_range(c, n).len();
        }
        assert_eq!(covered, n);
        assert_eq!(chunk_range(2, n), 2048..2500);
    }
}
