//! Monte Carlo estimate of the expected discrepancy, used as an independent
//! check on the quadrature routes.
//!
//! Each sample draws one point uniformly from `Omega` and one from its
//! complement by rejection from the unit square, then evaluates the exact
//! two-point discrepancy. Work is split into shards; shard `i` uses the
//! ChaCha8 stream `i` of the user seed, and shard statistics are merged in
//! shard order, so results depend only on `(seed, n_samples, shards)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::l2sq_two_points;
use crate::error::{Error, Result};
use crate::regions::{Point, Region};
use crate::solver::thread_override;

/// Proposals allowed per accepted point before giving up.
pub const MAX_PROPOSALS: usize = 1_000_000;
/// Smallest accepted sample count.
pub const MIN_SAMPLES: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub shards: usize,
}

fn uniform_point<R: Rng>(rng: &mut R) -> Point {
    let x = rng.random::<f64>();
    let y = rng.random::<f64>();
    Point::new(x, y)
}

fn rejection<R: Rng>(region: &Region, inside: bool, rng: &mut R) -> Result<Point> {
    for _ in 0..MAX_PROPOSALS {
        let pt = uniform_point(rng);
        if region.contains(pt) == inside {
            return Ok(pt);
        }
    }
    Err(Error::DegenerateRegion(MAX_PROPOSALS))
}

/// One point uniform on `Omega` and one uniform on its complement; two
/// independent uniforms for the unpartitioned baseline.
pub fn sample_pair<R: Rng>(region: &Region, rng: &mut R) -> Result<(Point, Point)> {
    if let Region::Unpartitioned = region {
        return Ok((uniform_point(rng), uniform_point(rng)));
    }
    let a = rejection(region, true, rng)?;
    let b = rejection(region, false, rng)?;
    Ok((a, b))
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64,
        }
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

fn run_shard(region: &Region, n: u64, seed: u64, shard: usize) -> Result<Welford> {
    let mut rng = shard_rng(seed, shard);
    let mut acc = Welford::default();
    for _ in 0..n {
        let (a, b) = sample_pair(region, &mut rng)?;
        acc.push(l2sq_two_points(a, b));
    }
    Ok(acc)
}

/// Single-shard estimate; the determinism baseline.
pub fn estimate_expected_l2sq(region: &Region, n_samples: u64, seed: u64) -> Result<MCEstimate> {
    estimate_sharded(region, n_samples, seed, 1)
}

/// Estimate split over `shards` independent streams. Shards run in
/// parallel when `JITTERPART_THREADS` asks for more than one worker; the
/// result does not depend on the worker count.
pub fn estimate_sharded(region: &Region, n_samples: u64, seed: u64, shards: usize) -> Result<MCEstimate> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    if shards == 0 || shards as u64 > n_samples {
        return Err(Error::InvalidParameter(format!("invalid shard count {shards}")));
    }
    let base = n_samples / shards as u64;
    let extra = n_samples % shards as u64;
    let sizes: Vec<u64> = (0..shards).map(|i| base + u64::from((i as u64) < extra)).collect();
    let job = |(i, &n): (usize, &u64)| run_shard(region, n, seed, i);
    let pool = thread_override().and_then(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build().ok());
    let parts: Vec<Result<Welford>> = match pool {
        Some(pool) => pool.install(|| sizes.par_iter().enumerate().map(job).collect()),
        None => sizes.iter().enumerate().map(job).collect(),
    };
    let mut total = Welford::default();
    for part in parts {
        total = total.merge(part?);
    }
    let variance = total.m2 / (total.n - 1) as f64;
    Ok(MCEstimate {
        mean: total.mean,
        std_error: (variance / total.n as f64).sqrt(),
        n_samples,
        seed,
        shards,
    })
}

/// Fraction of `n` uniform proposals that land in `Omega`.
pub fn acceptance_fraction(region: &Region, n: u64, seed: u64) -> f64 {
    let mut rng = shard_rng(seed, 0);
    let hits = (0..n).filter(|_| region.contains(uniform_point(&mut rng))).count();
    hits as f64 / n as f64
}
