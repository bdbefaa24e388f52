use super::CountArrays;
use crate::error::Result;
use crate::tensor::{CooTensor, ModeOrder};

/// Sorting-based construction: order the nonzeros by the permuted key, then
/// count runs. A slice ends where one of the first `M-2` permuted indices
/// changes; a fiber ends where one of the first `M-1` changes.
pub fn build_counts_sort(t: &CooTensor, mo: &ModeOrder) -> Result<CountArrays> {
    mo.check_arity(t.order())?;
    let m = t.order();
    let mut out = CountArrays::empty(mo.clone());
    if t.nnz() == 0 {
        return Ok(out);
    }
    let rows = t.sorted_permutation(mo);
    let cols: Vec<&[u64]> = mo.perm().iter().map(|&p| t.column(p)).collect();
    // position of the first permuted mode where two rows differ
    let first_diff = |a: usize, b: usize| cols.iter().position(|c| c[a] != c[b]).unwrap_or(m);

    let (mut slc_nz, mut slc_fib, mut fib_nz) = (1u64, 1u64, 1u64);
    for w in rows.windows(2) {
        let d = first_diff(w[0], w[1]);
        if d < m - 1 {
            out.n_nz_fib.push(fib_nz);
            fib_nz = 0;
            if d < m - 2 {
                out.n_nz_slc.push(slc_nz);
                out.n_fib_slc.push(slc_fib);
                slc_nz = 0;
                slc_fib = 0;
            }
            slc_fib += 1;
        }
        fib_nz += 1;
        slc_nz += 1;
    }
    out.n_nz_fib.push(fib_nz);
    out.n_nz_slc.push(slc_nz);
    out.n_fib_slc.push(slc_fib);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::reference_extract;

    fn t(entries: &[[u64; 3]]) -> CooTensor {
        CooTensor::from_entries(
            vec![3, 3, 3],
            entries.iter().map(|e| (e.to_vec(), 1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn example_matches_oracle() {
        let x = t(&[[0, 0, 0], [0, 1, 1], [1, 0, 0]]);
        for mo in ModeOrder::cyclic_set() {
            assert_eq!(build_counts_sort(&x, &mo).unwrap(), reference_extract(&x, &mo).unwrap());
        }
        let c = build_counts_sort(&x, &ModeOrder::identity(3)).unwrap();
        assert_eq!((c.n_nz_slc, c.n_fib_slc, c.n_nz_fib), (vec![2, 1], vec![2, 1], vec![1, 1, 1]));
    }

    #[test]
    fn single_slice() {
        let x = t(&[[2, 0, 0], [2, 1, 2], [2, 2, 1], [2, 2, 2]]);
        let c = build_counts_sort(&x, &ModeOrder::identity(3)).unwrap();
        assert_eq!(c.n_nz_slc, vec![4]);
        assert_eq!(c.n_fib_slc, vec![3]);
        assert_eq!(c.n_nz_fib, vec![1, 1, 2]);
    }

    #[test]
    fn presorted_input_gives_same_counts() {
        let x = t(&[[1, 0, 2], [0, 2, 1], [0, 2, 2], [2, 2, 0]]);
        let mo = ModeOrder::from_one_based(&[2, 3, 1]).unwrap();
        let sorted = x.sort_by_mode_order(&mo).unwrap();
        assert_eq!(build_counts_sort(&x, &mo).unwrap(), build_counts_sort(&sorted, &mo).unwrap());
    }
}
