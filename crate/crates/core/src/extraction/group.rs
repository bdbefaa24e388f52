//! Grouping-based construction: a dense per-slice tally, a bucket pass that
//! groups nonzeros by slice, and a per-slice dense tally over the fiber index.
//! No sort of the whole tensor is needed.

use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;

use super::CountArrays;
use crate::error::{Error, Result};
use crate::tensor::{checked_product, CooTensor, ModeOrder};

/// Default cap on auxiliary memory, in words.
pub const DEFAULT_GROUP_CAP_WORDS: u128 = 1 << 31;

/// Upper bound on concurrently live per-slice tally buffers.
const MAX_TALLY_WORKERS: usize = 8;

/// Auxiliary memory actually used by one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupStats {
    /// Dense slice space: product of the first `M-2` permuted sizes.
    pub slice_space: u128,
    /// Size of the permuted mode that indexes fibers within a slice.
    pub fiber_space: u128,
    /// Peak auxiliary words: slice tally, slice offsets, bucket order and
    /// per-worker fiber tallies.
    pub peak_aux_words: u128,
    pub workers: usize,
}

pub fn build_counts_group(t: &CooTensor, mo: &ModeOrder) -> Result<CountArrays> {
    build_counts_group_capped(t, mo, DEFAULT_GROUP_CAP_WORDS)
}

pub fn build_counts_group_capped(t: &CooTensor, mo: &ModeOrder, cap_words: u128) -> Result<CountArrays> {
    build_counts_group_instrumented(t, mo, cap_words).map(|(c, _)| c)
}

pub fn build_counts_group_instrumented(
    t: &CooTensor,
    mo: &ModeOrder,
    cap_words: u128,
) -> Result<(CountArrays, GroupStats)> {
    mo.check_arity(t.order())?;
    let m = t.order();
    let p = mo.perm();
    let nnz = t.nnz();
    let slice_dims: Vec<u64> = p[..m - 2].iter().map(|&q| t.dims()[q]).collect();
    let slice_space = checked_product(slice_dims.iter().copied()).unwrap_or(u128::MAX);
    let fiber_space = t.dims()[p[m - 2]] as u128;
    let base = slice_space.saturating_add(fiber_space).saturating_add(nnz as u128);
    let workers = rayon::current_num_threads()
        .min(MAX_TALLY_WORKERS)
        .min(((2 * base) / fiber_space).max(1).min(usize::MAX as u128) as usize)
        .max(1);
    let needed = slice_space
        .saturating_add(slice_space.min(nnz as u128) + 1)
        .saturating_add(nnz as u128)
        .saturating_add(workers as u128 * fiber_space);
    if needed > cap_words || nnz as u64 > u32::MAX as u64 {
        return Err(Error::GroupingMemory {
            needed,
            cap: cap_words,
        });
    }

    let slice_cols: Vec<&[u64]> = p[..m - 2].iter().map(|&q| t.column(q)).collect();
    let fib_col = t.column(p[m - 2]);
    let slice_of = |k: usize| -> usize {
        slice_cols
            .iter()
            .zip(&slice_dims)
            .fold(0usize, |acc, (c, &d)| acc * d as usize + c[k] as usize)
    };

    // Phase 1: nonzeros per slice.
    let cnt1: Vec<AtomicU32> = (0..slice_space as usize).map(|_| AtomicU32::new(0)).collect();
    (0..nnz).into_par_iter().for_each(|k| {
        cnt1[slice_of(k)].fetch_add(1, Ordering::Relaxed);
    });

    // Phase 2: compress nonzero slices; cnt1 becomes the running bucket
    // position of each slice.
    let mut out = CountArrays::empty(mo.clone());
    let mut starts: Vec<u32> = Vec::new();
    let mut pos = 0u32;
    for c in &cnt1 {
        let n = c.load(Ordering::Relaxed);
        if n > 0 {
            out.n_nz_slc.push(n as u64);
            starts.push(pos);
            c.store(pos, Ordering::Relaxed);
            pos += n;
        }
    }
    starts.push(pos);
    let nslc = out.n_nz_slc.len();

    // Phase 3: bucket nonzeros by slice.
    let order: Vec<AtomicU32> = (0..nnz).map(|_| AtomicU32::new(0)).collect();
    (0..nnz).into_par_iter().for_each(|k| {
        let at = cnt1[slice_of(k)].fetch_add(1, Ordering::Relaxed);
        order[at as usize].store(k as u32, Ordering::Relaxed);
    });
    drop(cnt1);
    let mut order: Vec<u32> = order.into_iter().map(AtomicU32::into_inner).collect();

    // Phase 4: per-slice fiber tally, slices split into nnz-balanced chunks.
    let mut bounds = vec![0usize];
    for w in 1..workers {
        let target = (nnz as u64 * w as u64 / workers as u64) as u32;
        let s = starts.partition_point(|&x| x < target).min(nslc);
        if s > *bounds.last().unwrap() {
            bounds.push(s);
        }
    }
    if *bounds.last().unwrap() < nslc || bounds.len() == 1 {
        bounds.push(nslc);
    }
    let mut chunks = Vec::with_capacity(bounds.len() - 1);
    let mut rest: &mut [u32] = &mut order;
    for w in bounds.windows(2) {
        let len = (starts[w[1]] - starts[w[0]]) as usize;
        let (head, tail) = rest.split_at_mut(len);
        chunks.push((w[0], w[1], head));
        rest = tail;
    }
    let per_chunk: Vec<(Vec<u64>, Vec<u64>)> = chunks
        .into_par_iter()
        .map(|(lo, hi, seg)| {
            let mut cnt2 = vec![0u32; fiber_space as usize];
            let mut fib_slc = Vec::with_capacity(hi - lo);
            let mut nz_fib = Vec::new();
            let base = starts[lo];
            for s in lo..hi {
                let part = &mut seg[(starts[s] - base) as usize..(starts[s + 1] - base) as usize];
                let before = nz_fib.len();
                if part.len() * 8 >= cnt2.len() {
                    for &k in part.iter() {
                        cnt2[fib_col[k as usize] as usize] += 1;
                    }
                    for c in cnt2.iter_mut() {
                        if *c > 0 {
                            nz_fib.push(*c as u64);
                            *c = 0;
                        }
                    }
                } else {
                    // sparse slice: group in place instead of scanning the tally
                    part.sort_unstable_by_key(|&k| fib_col[k as usize]);
                    let mut run = 0u64;
                    for i in 0..part.len() {
                        run += 1;
                        let last = i + 1 == part.len();
                        if last || fib_col[part[i] as usize] != fib_col[part[i + 1] as usize] {
                            nz_fib.push(run);
                            run = 0;
                        }
                    }
                }
                fib_slc.push((nz_fib.len() - before) as u64);
            }
            (fib_slc, nz_fib)
        })
        .collect();
    for (fs, nf) in per_chunk {
        out.n_fib_slc.extend(fs);
        out.n_nz_fib.extend(nf);
    }

    let used_workers = bounds.len() - 1;
    let stats = GroupStats {
        slice_space,
        fiber_space,
        peak_aux_words: slice_space + starts.len() as u128 + nnz as u128 + used_workers as u128 * fiber_space,
        workers: used_workers,
    };
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::reference_extract;

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
    fn example_by_hand() {
        let c = build_counts_group(&example(), &ModeOrder::identity(3)).unwrap();
        assert_eq!(c.n_nz_slc, vec![2, 1]);
        assert_eq!(c.n_fib_slc, vec![2, 1]);
        assert_eq!(c.n_nz_fib, vec![1, 1, 1]);
        for mo in ModeOrder::cyclic_set() {
            assert_eq!(build_counts_group(&example(), &mo).unwrap(), reference_extract(&example(), &mo).unwrap());
        }
    }

    #[test]
    fn singleton() {
        let t = CooTensor::from_entries(vec![4, 5, 6], vec![(vec![3, 2, 1], 1.0)]).unwrap();
        let c = build_counts_group(&t, &ModeOrder::identity(3)).unwrap();
        assert_eq!((c.n_nz_slc, c.n_fib_slc, c.n_nz_fib), (vec![1], vec![1], vec![1]));
    }

    #[test]
    fn dense_cube() {
        let mut e = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    e.push((vec![i, j, k], 1.0));
                }
            }
        }
        let t = CooTensor::from_entries(vec![2, 2, 2], e).unwrap();
        let c = build_counts_group(&t, &ModeOrder::identity(3)).unwrap();
        assert_eq!(c.n_nz_slc, vec![4, 4]);
        assert_eq!(c.n_fib_slc, vec![2, 2]);
        assert_eq!(c.n_nz_fib, vec![2, 2, 2, 2]);
    }

    #[test]
    fn empty_tensor() {
        let t = CooTensor::new(vec![3, 3, 3], vec![vec![], vec![], vec![]], vec![]).unwrap();
        let c = build_counts_group(&t, &ModeOrder::identity(3)).unwrap();
        assert_eq!(c, CountArrays::empty(ModeOrder::identity(3)));
    }

    #[test]
    fn memory_cap() {
        let t = example();
        assert!(matches!(
            build_counts_group_capped(&t, &ModeOrder::identity(3), 4),
            Err(Error::GroupingMemory { .. })
        ));
        let (_, st) = build_counts_group_instrumented(&t, &ModeOrder::identity(3), 1 << 20).unwrap();
        assert!(st.peak_aux_words <= 4 * (2 + 2 + 3));
    }
}
