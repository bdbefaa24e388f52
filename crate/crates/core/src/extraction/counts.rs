use crate::error::{Error, Result};
use crate::features::{FiberCounts, SliceCounts};
use crate::tensor::ModeOrder;

/// Count arrays of one mode-order. Slices fix every permuted mode but the
/// last two; fibers fix every permuted mode but the last. Entries are listed
/// in lexicographic order of the permuted slice/fiber coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountArrays {
    pub mode_order: ModeOrder,
    /// Nonzeros per nonzero slice.
    pub n_nz_slc: Vec<u64>,
    /// Nonzero fibers per nonzero slice.
    pub n_fib_slc: Vec<u64>,
    /// Nonzeros per nonzero fiber.
    pub n_nz_fib: Vec<u64>,
}

impl CountArrays {
    pub fn empty(mode_order: ModeOrder) -> Self {
        Self {
            mode_order,
            n_nz_slc: Vec::new(),
            n_fib_slc: Vec::new(),
            n_nz_fib: Vec::new(),
        }
    }

    /// Checks the conservation laws against the tensor's nonzero count.
    pub fn check(&self, nnz: usize) -> Result<()> {
        let s1: u64 = self.n_nz_slc.iter().sum();
        let s2: u64 = self.n_nz_fib.iter().sum();
        let s3: u64 = self.n_fib_slc.iter().sum();
        let ok = s1 == nnz as u64
            && s2 == nnz as u64
            && s3 == self.n_nz_fib.len() as u64
            && self.n_nz_slc.len() == self.n_fib_slc.len()
            && self
                .n_nz_slc
                .iter()
                .chain(&self.n_fib_slc)
                .chain(&self.n_nz_fib)
                .all(|&c| c >= 1);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTensor(format!(
                "count arrays for {} violate conservation",
                self.mode_order
            )))
        }
    }

    /// Converts to blocks keyed by original mode numbers. `covered[i]` is
    /// the original mode of working mode `i`.
    pub fn into_blocks(self, covered: &[usize]) -> (SliceCounts, FiberCounts) {
        let p = self.mode_order.perm();
        let m = p.len();
        let a = covered[p[m - 2]];
        let b = covered[p[m - 1]];
        (
            SliceCounts {
                pair: (a.min(b), a.max(b)),
                fiber_mode: b,
                n_nz_slc: self.n_nz_slc,
                n_fib_slc: self.n_fib_slc,
            },
            FiberCounts {
                mode: b,
                n_nz_fib: self.n_nz_fib,
            },
        )
    }
}
