//! Hash-based construction. Every fiber mode and slice pair is tallied
//! independently in a map keyed by the fixed coordinates, so no mode-order
//! is involved.

use std::collections::HashMap;
use std::hash::{BuildHasher, Hash, Hasher};

use rayon::prelude::*;

use super::paired_fiber_mode;
use crate::error::{Error, Result};
use crate::features::{BlockCounts, FiberCounts, SliceCounts};
use crate::tensor::{checked_product, CooTensor};

const INITIAL_BUCKETS: usize = 100;

/// Hasher that folds each written word through a 64-bit finalizer.
#[derive(Debug, Default, Clone, Copy)]
pub struct MixHasher(u64);

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Hasher for MixHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            self.write_u64(u64::from_le_bytes(w));
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.0 = mix(self.0.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ x);
    }

    fn write_u128(&mut self, x: u128) {
        self.write_u64(x as u64);
        self.write_u64((x >> 64) as u64);
    }

    fn write_usize(&mut self, x: usize) {
        self.write_u64(x as u64);
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MixBuild;

impl BuildHasher for MixBuild {
    type Hasher = MixHasher;
    fn build_hasher(&self) -> MixHasher {
        MixHasher::default()
    }
}

type Tally<K> = HashMap<K, (u64, usize), MixBuild>;

/// Per-worker maps merged at the end. Each entry keeps its count and the
/// smallest row that produced it. Output is sorted by key.
fn tally<K, F>(rows: &[usize], key: F) -> Vec<(K, u64, usize)>
where
    K: Hash + Eq + Ord + Send,
    F: Fn(usize) -> K + Sync,
{
    let merged = rows
        .par_iter()
        .fold(
            || Tally::with_capacity_and_hasher(INITIAL_BUCKETS, MixBuild),
            |mut m, &k| {
                let e = m.entry(key(k)).or_insert((0, k));
                e.0 += 1;
                e.1 = e.1.min(k);
                m
            },
        )
        .reduce(
            || Tally::with_capacity_and_hasher(INITIAL_BUCKETS, MixBuild),
            |a, b| {
                let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
                for (k, (c, r)) in small {
                    let e = big.entry(k).or_insert((0, r));
                    e.0 += c;
                    e.1 = e.1.min(r);
                }
                big
            },
        );
    let mut out: Vec<(K, u64, usize)> = merged.into_iter().map(|(k, (c, r))| (k, c, r)).collect();
    out.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Tallies `rows` by their coordinates on `modes`; returns (count, smallest
/// row) per distinct key in ascending key order. Keys are packed into 64 or
/// 128 bits when the key space allows.
fn keyed_tally(t: &CooTensor, modes: &[usize], rows: &[usize]) -> Vec<(u64, usize)> {
    let cols: Vec<&[u64]> = modes.iter().map(|&m| t.column(m)).collect();
    let dims: Vec<u64> = modes.iter().map(|&m| t.dims()[m]).collect();
    let space = checked_product(dims.iter().copied());
    match space {
        Some(s) if s <= u64::MAX as u128 => strip(tally(rows, |k| {
            cols.iter()
                .zip(&dims)
                .fold(0u64, |acc, (c, &d)| acc * d + c[k])
        })),
        Some(_) => strip(tally(rows, |k| {
            cols.iter()
                .zip(&dims)
                .fold(0u128, |acc, (c, &d)| acc * d as u128 + c[k] as u128)
        })),
        None => strip(tally(rows, |k| cols.iter().map(|c| c[k]).collect::<Vec<u64>>())),
    }
}

fn strip<K>(v: Vec<(K, u64, usize)>) -> Vec<(u64, usize)> {
    v.into_iter().map(|(_, c, r)| (c, r)).collect()
}

fn without(covered: &[usize], skip: &[usize]) -> Vec<usize> {
    covered.iter().copied().filter(|m| !skip.contains(m)).collect()
}

/// Fiber map of one mode: fixed coordinates (0-based, in mode order with
/// `mode` removed) and the number of nonzeros in that fiber.
pub fn hash_fiber_map(t: &CooTensor, mode: usize) -> Result<Vec<(Vec<u64>, u64)>> {
    if mode >= t.order() {
        return Err(Error::Arity {
            expected: t.order(),
            got: mode + 1,
        });
    }
    let all: Vec<usize> = (0..t.order()).collect();
    let key = without(&all, &[mode]);
    let rows: Vec<usize> = (0..t.nnz()).collect();
    Ok(keyed_tally(t, &key, &rows)
        .into_iter()
        .map(|(c, r)| (key.iter().map(|&m| t.column(m)[r]).collect(), c))
        .collect())
}

/// Builds all slice and fiber count arrays for the `covered` modes (given in
/// ascending order). Uncovered modes are ignored, so nonzeros that share
/// their covered coordinates count with multiplicity.
pub fn build_counts_hash(t: &CooTensor, covered: &[usize]) -> Result<BlockCounts> {
    if covered.len() < 3 || covered.windows(2).any(|w| w[0] >= w[1]) || covered.iter().any(|&m| m >= t.order()) {
        return Err(Error::Domain(format!("invalid covered modes {covered:?}")));
    }
    let rows: Vec<usize> = (0..t.nnz()).collect();
    let fibers: Vec<(usize, Vec<(u64, usize)>)> = covered
        .par_iter()
        .map(|&f| (f, keyed_tally(t, &without(covered, &[f]), &rows)))
        .collect();

    let mut pairs = Vec::new();
    for i in 0..covered.len() {
        for j in i + 1..covered.len() {
            pairs.push((i, j));
        }
    }
    let slices: Vec<SliceCounts> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (covered[i], covered[j]);
            let key = without(covered, &[a, b]);
            let fb = covered[paired_fiber_mode(covered.len(), i, j)];
            let slc = keyed_tally(t, &key, &rows);
            let reps: Vec<usize> = fibers
                .iter()
                .find(|(m, _)| *m == fb)
                .map(|(_, v)| v.iter().map(|&(_, r)| r).collect())
                .unwrap_or_default();
            let fib_per_slc = keyed_tally(t, &key, &reps);
            SliceCounts {
                pair: (a, b),
                fiber_mode: fb,
                n_nz_slc: slc.into_iter().map(|(c, _)| c).collect(),
                n_fib_slc: fib_per_slc.into_iter().map(|(c, _)| c).collect(),
            }
        })
        .collect();

    Ok(BlockCounts {
        slices,
        fibers: fibers
            .into_iter()
            .map(|(mode, v)| FiberCounts {
                mode,
                n_nz_fib: v.into_iter().map(|(c, _)| c).collect(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> CooTensor {
        CooTensor::from_entries(
            vec![2, 2, 2],
            vec![
                (vec![0, 0, 0], 1.0),
                (vec![0, 1, 1], 0.5),
                (vec![1, 0, 0], 2.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn fiber_map_mode_three() {
        let m = hash_fiber_map(&example(), 2).unwrap();
        assert_eq!(m, vec![(vec![0, 0], 1), (vec![0, 1], 1), (vec![1, 0], 1)]);
    }

    #[test]
    fn one_slice_key() {
        let t = CooTensor::from_entries(
            vec![3, 4, 5],
            vec![(vec![1, 0, 0], 1.0), (vec![1, 2, 3], 1.0), (vec![1, 3, 4], 1.0)],
        )
        .unwrap();
        let b = build_counts_hash(&t, &[0, 1, 2]).unwrap();
        let s = b.slices.iter().find(|s| s.pair == (1, 2)).unwrap();
        assert_eq!(s.n_nz_slc, vec![3]);
    }

    #[test]
    fn wide_keys() {
        // fiber keys need 150 bits, slice keys 100
        let d = 1u64 << 50;
        let t = CooTensor::from_entries(
            vec![d, d, d, d],
            vec![(vec![0, 1, 2, 3], 1.0), (vec![d - 1, 1, 2, 3], 1.0), (vec![0, 1, 2, 4], 1.0)],
        )
        .unwrap();
        let b = build_counts_hash(&t, &[0, 1, 2, 3]).unwrap();
        let f3 = b.fibers.iter().find(|f| f.mode == 3).unwrap();
        assert_eq!(f3.n_nz_fib, vec![2, 1]);
        let f0 = b.fibers.iter().find(|f| f.mode == 0).unwrap();
        assert_eq!(f0.n_nz_fib, vec![2, 1]);
    }

    #[test]
    fn hasher_spreads_small_keys() {
        let h = |x: u64| {
            let mut s = MixHasher::default();
            s.write_u64(x);
            s.finish()
        };
        assert_ne!(h(1), h(2));
        assert_ne!(h(1) >> 56, h(2) >> 56);
    }
}
