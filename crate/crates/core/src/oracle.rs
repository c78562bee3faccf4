//! Seeded Monte Carlo estimates of union and overlap in any dimension.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64(seed)`. Work is
//! split into fixed chunks of [`CHUNK`] samples; chunk `k` uses stream `k` of
//! that generator, so estimates do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_radius, Error, Result};
use crate::geometry3d::Plane;
use crate::lattice::{unit_ball_volume, DistortedLattice, NearestPointSearch};

/// Samples per independently seeded chunk.
pub const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_count(hits: u64, samples: u64, seed: u64, scale: f64) -> Self {
        let n = samples as f64;
        let p = hits as f64 / n;
        let var = if samples > 1 { p * (1.0 - p) * n / (n - 1.0) } else { 0.0 };
        McEstimate {
            mean: scale * p,
            std_error: scale * (var / n).sqrt(),
            samples,
            seed,
        }
    }

    /// `|mean − value| ≤ k·std_error`, with a floor for exact estimates.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + 1e-12
    }

    /// Deviation from `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if (self.mean - value).abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - value) / self.std_error
        }
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn count_chunks<F>(samples: u64, f: F) -> u64
where
    F: Fn(u64, u64) -> u64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(samples - k * CHUNK);
            f(k, len)
        })
        .sum()
}

/// Fraction of space covered by balls of radius `r` around the lattice points.
///
/// Points are drawn uniformly from the fundamental parallelepiped; a point is
/// covered iff its nearest lattice point is within `r`.
pub fn mc_union(lat: &DistortedLattice, r: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    check_radius(r)?;
    if samples == 0 {
        return Err(Error::InvalidSamples);
    }
    if r >= lat.covering_radius() {
        return Ok(McEstimate {
            mean: 1.0,
            std_error: 0.0,
            samples,
            seed,
        });
    }
    let search = NearestPointSearch::new(lat);
    let n = lat.dim();
    let c = lat.shift();
    let hits = count_chunks(samples, |k, len| {
        let mut rng = chunk_rng(seed, k);
        let mut y = vec![0.0; n];
        let mut hits = 0;
        for _ in 0..len {
            let mut sum = 0.0;
            for v in y.iter_mut() {
                let u: f64 = rng.random();
                *v = u - u.round();
                sum += *v;
            }
            let shift = c * sum;
            for v in y.iter_mut() {
                *v += shift;
            }
            if search.residual_within(&y, r) {
                hits += 1;
            }
        }
        hits
    });
    Ok(McEstimate::from_count(hits, samples, seed, 1.0))
}

/// `density − union` with the union estimated by [`mc_union`].
pub fn mc_vol_overlap(lat: &DistortedLattice, r: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    let union = mc_union(lat, r, samples, seed)?;
    let density = unit_ball_volume(lat.dim())? * r.powi(lat.dim() as i32) / lat.delta();
    Ok(McEstimate {
        mean: density - union.mean,
        ..union
    })
}

/// Volume of the part of `B_r ⊂ ℝ³` beyond every plane (`normal · x ≥ distance`),
/// from points sampled uniformly in the ball.
pub fn mc_volume_region(r: f64, planes: &[Plane], samples: u64, seed: u64) -> Result<McEstimate> {
    check_radius(r)?;
    if samples == 0 {
        return Err(Error::InvalidSamples);
    }
    if planes.is_empty() {
        return Err(Error::EmptyPlaneSet);
    }
    let planes: Vec<Plane> = planes
        .iter()
        .map(|p| Plane::new(p.normal, p.distance))
        .collect::<Result<_>>()?;
    let ball = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
    if planes.iter().any(|p| p.distance >= r) {
        return Ok(McEstimate {
            mean: 0.0,
            std_error: 0.0,
            samples,
            seed,
        });
    }
    let hits = count_chunks(samples, |k, len| {
        let mut rng = chunk_rng(seed, k);
        let mut hits = 0;
        let mut accepted = 0;
        while accepted < len {
            let x: [f64; 3] = [0, 1, 2].map(|_| r * (2.0 * rng.random::<f64>() - 1.0));
            if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > r * r {
                continue;
            }
            accepted += 1;
            let beyond = planes.iter().all(|p| {
                p.normal[0] * x[0] + p.normal[1] * x[1] + p.normal[2] * x[2] >= p.distance
            });
            if beyond {
                hits += 1;
            }
        }
        hits
    });
    Ok(McEstimate::from_count(hits, samples, seed, ball))
}
