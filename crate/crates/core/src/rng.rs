//! Seeded random streams and the sampling routines used by the generator.
//!
//! Every random entity (a slice, a fiber, ...) draws from its own stream,
//! identified by the master seed and a stream id derived from the entity
//! kind and index. Results therefore do not depend on scheduling.
//!
//! The underlying generator is ChaCha8 from `rand_chacha` 0.9, seeded with
//! `seed_from_u64(master_seed)` and switched to `set_stream(stream_id)`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Entity kinds that own random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamKind {
    SliceIndices = 1,
    FiberCounts = 2,
    FiberIndices = 3,
    NonzeroCounts = 4,
    NonzeroIndices = 5,
    Values = 6,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64((kind << 56) | index)`; `index` must fit in 56 bits.
pub fn stream_id(kind: StreamKind, index: u64) -> u64 {
    debug_assert!(index < 1 << 56);
    splitmix64(((kind as u64) << 56) | (index & ((1 << 56) - 1)))
}

#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut r = ChaCha8Rng::seed_from_u64(master_seed);
        r.set_stream(stream_id);
        Self(r)
    }

    pub fn for_entity(master_seed: u64, kind: StreamKind, index: u64) -> Self {
        Self::new(master_seed, stream_id(kind, index))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// Uniform in `(0, 1)`.
    pub fn open_uniform(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        self.0.random_range(0..n)
    }
}

/// One normal draw `avg + std * Z`. Always consumes two uniforms.
pub fn box_muller(s: &mut RngStream, avg: f64, std: f64) -> Result<f64> {
    if !(std >= 0.0) || !avg.is_finite() || !std.is_finite() {
        return Err(Error::Domain(format!("normal with avg {avg}, std {std}")));
    }
    let u1 = s.open_uniform();
    let u2 = s.uniform();
    if std == 0.0 {
        return Ok(avg);
    }
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    Ok(avg + std * z)
}

/// Parameters of the normal whose exponential has mean `avg` and standard
/// deviation `std`.
pub fn lognormal_params(avg: f64, std: f64) -> Result<(f64, f64)> {
    if !(avg > 0.0) || !(std >= 0.0) || !avg.is_finite() || !std.is_finite() {
        return Err(Error::Domain(format!("log-normal with avg {avg}, std {std}")));
    }
    let a2 = avg * avg;
    let mu = (a2 / (a2 + std * std).sqrt()).ln();
    let sigma = (1.0 + std * std / a2).ln().sqrt();
    Ok((mu, sigma))
}

/// `n` distinct indices from `[1, limit]`, sorted ascending.
pub fn rand_inds(s: &mut RngStream, n: u64, limit: u64) -> Result<Vec<u64>> {
    if n > limit {
        return Err(Error::Capacity { n, limit });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut out: Vec<u64> = if n as f64 / limit as f64 <= 0.5 {
        // Floyd's algorithm
        let mut chosen = HashSet::with_capacity(n as usize);
        for j in limit - n + 1..=limit {
            let t = s.below(j) + 1;
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    } else {
        let mut all: Vec<u64> = (1..=limit).collect();
        for i in 0..n as usize {
            let j = i + s.below(limit - i as u64) as usize;
            all.swap(i, j);
        }
        all.truncate(n as usize);
        all
    };
    out.sort_unstable();
    Ok(out)
}

/// Inputs of [`distribute`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributeArgs {
    pub n: u64,
    pub avg: f64,
    pub std: f64,
    pub max: u64,
    pub limit: u64,
    /// Counts are rescaled when `avg / sample_avg` falls outside this open interval.
    pub window: (f64, f64),
}

impl DistributeArgs {
    pub fn new(n: u64, avg: f64, std: f64, max: u64, limit: u64) -> Self {
        Self {
            n,
            avg,
            std,
            max,
            limit,
            window: (0.95, 1.05),
        }
    }
}

/// Streams used for the counts and the index sets of one [`distribute`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistributeStreams {
    pub seed: u64,
    pub counts: StreamKind,
    pub indices: StreamKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// The requested average exceeds `limit`; clamping biases the mean low.
    InfeasibleAverage { avg_milli: u64, limit: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributeResult {
    pub cnt: Vec<u64>,
    /// `inds[offsets[i]..offsets[i + 1]]` are the indices of entry `i`.
    pub offsets: Vec<usize>,
    pub inds: Vec<u64>,
    /// Whether the rescaling step ran.
    pub rescaled: bool,
    /// Entries lowered to `min(max, limit)`.
    pub clamped_high: u64,
    /// Entries raised to 1.
    pub floored_low: u64,
    pub warnings: Vec<Warning>,
}

impl DistributeResult {
    pub fn inds_of(&self, i: usize) -> &[u64] {
        &self.inds[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn total(&self) -> u64 {
        self.cnt.iter().sum()
    }

    /// Fraction of entries altered by clamping at either end.
    pub fn clamped_fraction(&self) -> f64 {
        if self.cnt.is_empty() {
            0.0
        } else {
            (self.clamped_high + self.floored_low) as f64 / self.cnt.len() as f64
        }
    }
}

/// Draws `n` positive counts with the requested average and spread and, for
/// each, that many distinct indices in `[1, limit]`.
///
/// A normal is used when `avg > 3 * std`, a log-normal otherwise. Draws are
/// rounded half away from zero and floored at 1; if the achieved mean is off
/// by more than the window, the real draws are rescaled and rounded again.
/// Finally counts are clamped to `[1, min(max, limit)]`.
pub fn distribute(streams: DistributeStreams, args: DistributeArgs) -> Result<DistributeResult> {
    let DistributeArgs {
        n,
        avg,
        std,
        max,
        limit,
        window,
    } = args;
    if n < 1 || !(avg >= 1.0) || !(std >= 0.0) || max < 1 || limit < 1 || !avg.is_finite() || !std.is_finite() {
        return Err(Error::Domain(format!(
            "distribute needs n >= 1, avg >= 1, std >= 0, max >= 1, limit >= 1 (got n={n}, avg={avg}, std={std}, max={max}, limit={limit})"
        )));
    }
    let mut warnings = Vec::new();
    if avg > limit as f64 {
        warnings.push(Warning::InfeasibleAverage {
            avg_milli: (avg * 1000.0) as u64,
            limit,
        });
    }
    let normal = avg > 3.0 * std;
    let (mu, sigma) = if normal { (avg, std) } else { lognormal_params(avg, std)? };
    let draws: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = RngStream::for_entity(streams.seed, streams.counts, i);
            let z = box_muller(&mut s, mu, sigma)?;
            Ok(if normal { z } else { z.exp() })
        })
        .collect::<Result<_>>()?;

    let round = |r: f64| -> (u64, bool) {
        let c = r.round();
        if c < 1.0 {
            (1, true)
        } else {
            (c as u64, false)
        }
    };
    let mut cnt: Vec<(u64, bool)> = draws.par_iter().map(|&r| round(r)).collect();
    let sample_avg = cnt.iter().map(|c| c.0 as u128).sum::<u128>() as f64 / n as f64;
    let ratio = avg / sample_avg;
    let rescaled = !(ratio > window.0 && ratio < window.1);
    if rescaled {
        cnt = draws.par_iter().map(|&r| round(r * ratio)).collect();
    }
    let cap = max.min(limit);
    let mut clamped_high = 0;
    let mut floored_low = 0;
    let cnt: Vec<u64> = cnt
        .into_iter()
        .map(|(c, floored)| {
            floored_low += floored as u64;
            if c > cap {
                clamped_high += 1;
                cap
            } else {
                c
            }
        })
        .collect();

    let mut offsets = Vec::with_capacity(cnt.len() + 1);
    offsets.push(0usize);
    for &c in &cnt {
        offsets.push(offsets.last().unwrap() + c as usize);
    }
    let mut inds = vec![0u64; *offsets.last().unwrap()];
    let mut parts: Vec<(usize, &mut [u64])> = Vec::with_capacity(cnt.len());
    let mut rest = inds.as_mut_slice();
    for (i, &c) in cnt.iter().enumerate() {
        let (head, tail) = rest.split_at_mut(c as usize);
        parts.push((i, head));
        rest = tail;
    }
    parts.into_par_iter().try_for_each(|(i, out)| -> Result<()> {
        let mut s = RngStream::for_entity(streams.seed, streams.indices, i as u64);
        out.copy_from_slice(&rand_inds(&mut s, out.len() as u64, limit)?);
        Ok(())
    })?;

    Ok(DistributeResult {
        cnt,
        offsets,
        inds,
        rescaled,
        clamped_high,
        floored_low,
        warnings,
    })
}
