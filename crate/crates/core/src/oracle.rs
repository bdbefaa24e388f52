//! Dense brute-force extractor used as the test oracle.

use crate::error::{Error, Result};
use crate::extraction::CountArrays;
use crate::tensor::{checked_product, CooTensor, ModeOrder};

/// Largest number of dense fiber cells the oracle will allocate.
pub const DEFAULT_ORACLE_CAP: u128 = 100_000_000;

pub fn reference_extract(t: &CooTensor, mo: &ModeOrder) -> Result<CountArrays> {
    reference_extract_capped(t, mo, DEFAULT_ORACLE_CAP)
}

/// Tallies every nonzero into a dense array over all fibers of the last
/// permuted mode, then reads slices off consecutive runs of fibers.
pub fn reference_extract_capped(t: &CooTensor, mo: &ModeOrder, cap: u128) -> Result<CountArrays> {
    let tp = t.permute(mo)?;
    let m = tp.order();
    let dims = tp.dims();
    let cells = checked_product(dims[..m - 1].iter().copied()).unwrap_or(u128::MAX);
    if cells > cap {
        return Err(Error::OracleCap { cells, cap });
    }
    let fib_len = dims[m - 2] as usize;
    let mut tally = vec![0u64; cells as usize];
    for k in 0..tp.nnz() {
        let mut cell = 0usize;
        for (j, &d) in dims[..m - 1].iter().enumerate() {
            cell = cell * d as usize + tp.column(j)[k] as usize;
        }
        tally[cell] += 1;
    }

    let mut out = CountArrays::empty(mo.clone());
    for slice in tally.chunks(fib_len) {
        let nz: u64 = slice.iter().sum();
        if nz == 0 {
            continue;
        }
        out.n_nz_slc.push(nz);
        out.n_fib_slc.push(slice.iter().filter(|&&c| c > 0).count() as u64);
        out.n_nz_fib.extend(slice.iter().copied().filter(|&c| c > 0));
    }
    Ok(out)
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
    fn example_identity_order() {
        let c = reference_extract(&example(), &ModeOrder::identity(3)).unwrap();
        assert_eq!(c.n_nz_slc, vec![2, 1]);
        assert_eq!(c.n_fib_slc, vec![2, 1]);
        assert_eq!(c.n_nz_fib, vec![1, 1, 1]);
    }

    #[test]
    fn dense_cube() {
        let mut entries = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    entries.push((vec![i, j, k], 1.0));
                }
            }
        }
        let t = CooTensor::from_entries(vec![2, 2, 2], entries).unwrap();
        let c = reference_extract(&t, &ModeOrder::identity(3)).unwrap();
        assert_eq!(c.n_nz_slc, vec![4, 4]);
        assert_eq!(c.n_fib_slc, vec![2, 2]);
        assert_eq!(c.n_nz_fib, vec![2, 2, 2, 2]);
    }

    #[test]
    fn empty_tensor() {
        let t = CooTensor::new(vec![3, 3, 3], vec![vec![], vec![], vec![]], vec![]).unwrap();
        let c = reference_extract(&t, &ModeOrder::identity(3)).unwrap();
        assert!(c.n_nz_slc.is_empty() && c.n_fib_slc.is_empty() && c.n_nz_fib.is_empty());
    }

    #[test]
    fn cap_enforced() {
        let t = CooTensor::new(vec![100_000, 100_000, 2], vec![vec![0], vec![0], vec![0]], vec![1.0])
            .unwrap();
        assert!(matches!(
            reference_extract(&t, &ModeOrder::identity(3)),
            Err(Error::OracleCap { .. })
        ));
        // the last permuted mode is not part of the dense tally
        let mo = ModeOrder::from_one_based(&[2, 1, 3]).unwrap();
        assert!(reference_extract(&t, &mo).is_err());
        let mo = ModeOrder::from_one_based(&[1, 3, 2]).unwrap();
        assert!(reference_extract(&t, &mo).is_ok());
    }
}
