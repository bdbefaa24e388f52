//! Synthetic tensor generation from structural targets.
//!
//! Slices are the mode-(M-1, M) slices, indexed by the first `M-2`
//! coordinates; fibers vary along mode M and are indexed by the first `M-1`.
//! Fibers are scattered over slices, then nonzeros over fibers, each with a
//! [`distribute`] call.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::build_counts_sort;
use crate::features::{FeatureSet, Kind, KindStats, ModeId, Scope};
use crate::rng::{distribute, rand_inds, DistributeArgs, DistributeStreams, RngStream, StreamKind, Warning};
use crate::tensor::{checked_product, CooTensor, ModeOrder};

/// Slice densities above this are rounded up to 1.
pub const FULL_SLICE_DENSITY: f64 = 0.97;

/// Full input of the generator. Values are always uniform on (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub dims: Vec<u64>,
    pub d_slc: f64,
    pub d_fib: f64,
    pub d_nz: f64,
    /// cv of fibers per slice.
    pub cv_fib: f64,
    /// cv of nonzeros per fiber.
    pub cv_nz: f64,
    pub imbal_fib: f64,
    pub imbal_nz: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.order();
        if m < 3 {
            return Err(Error::UnsupportedOrder(m));
        }
        if self.dims.contains(&0) {
            return Err(Error::Domain("mode sizes must be positive".into()));
        }
        for (name, d) in [("d_slc", self.d_slc), ("d_fib", self.d_fib), ("d_nz", self.d_nz)] {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::Domain(format!("{name} must lie in (0, 1], got {d}")));
            }
        }
        for (name, c) in [("cv_fib", self.cv_fib), ("cv_nz", self.cv_nz)] {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::Domain(format!("{name} must be a nonnegative real, got {c}")));
            }
        }
        for (name, i) in [("imbal_fib", self.imbal_fib), ("imbal_nz", self.imbal_nz)] {
            if !(0.0..1.0).contains(&i) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1), got {i}")));
            }
        }
        Ok(())
    }

    fn slice_dims(&self) -> &[u64] {
        &self.dims[..self.order() - 2]
    }

    /// Number of slice positions; must fit in 64 bits.
    fn slice_space(&self) -> Result<u64> {
        checked_product(self.slice_dims().iter().copied())
            .and_then(|p| u64::try_from(p).ok())
            .ok_or_else(|| Error::InfeasibleSpec("slice index space exceeds 64 bits".into()))
    }
}

fn product_f64(dims: &[u64]) -> f64 {
    dims.iter().map(|&d| d as f64).product()
}

/// Parameters of the fibers-per-slice stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceParams {
    pub nslc: u64,
    pub nfib_target: f64,
    pub avg_fib: f64,
    pub std_fib: f64,
    pub max_fib: f64,
}

/// Parameters of the nonzeros-per-fiber stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberParams {
    pub nnz_target: f64,
    pub avg_nz: f64,
    pub std_nz: f64,
    pub max_nz: f64,
}

pub fn derive_slice_params(spec: &GeneratorSpec) -> Result<SliceParams> {
    spec.validate()?;
    let m = spec.order();
    let space = spec.slice_space()?;
    let nslc = if spec.d_slc > FULL_SLICE_DENSITY {
        space
    } else {
        (spec.d_slc * space as f64).round() as u64
    };
    if nslc == 0 {
        return Err(Error::EmptySpec(format!(
            "d_slc = {} over {space} slices rounds to no slices",
            spec.d_slc
        )));
    }
    let limit = spec.dims[m - 2] as f64;
    let nfib_target = spec.d_fib * product_f64(&spec.dims[..m - 1]);
    let avg_fib = nfib_target / nslc as f64;
    if avg_fib > limit {
        return Err(Error::InfeasibleSpec(format!(
            "{avg_fib} fibers per slice exceeds mode size {limit}"
        )));
    }
    if avg_fib < 1.0 {
        return Err(Error::InfeasibleSpec(format!(
            "{avg_fib} fibers per slice is below 1; raise d_fib or lower d_slc"
        )));
    }
    Ok(SliceParams {
        nslc,
        nfib_target,
        avg_fib,
        std_fib: spec.cv_fib * avg_fib,
        max_fib: (avg_fib / (1.0 - spec.imbal_fib)).min(limit),
    })
}

pub fn derive_fiber_params(spec: &GeneratorSpec, nfib_actual: u64) -> Result<FiberParams> {
    spec.validate()?;
    if nfib_actual == 0 {
        return Err(Error::EmptySpec("no fibers were generated".into()));
    }
    let limit = *spec.dims.last().unwrap() as f64;
    let nnz_target = spec.d_nz * product_f64(&spec.dims);
    let avg_nz = nnz_target / nfib_actual as f64;
    if avg_nz < 1.0 {
        return Err(Error::InfeasibleSpec(format!(
            "{avg_nz} nonzeros per fiber is below 1; raise d_nz or lower d_fib"
        )));
    }
    Ok(FiberParams {
        nnz_target,
        avg_nz,
        std_nz: spec.cv_nz * avg_nz,
        max_nz: (avg_nz / (1.0 - spec.imbal_nz)).min(limit),
    })
}

/// Integer cap handed to distribute.
fn int_max(max: f64) -> u64 {
    ((max - 1e-9).ceil() as u64).max(1)
}

/// Sorted 0-based linear slice positions.
fn slice_positions(s: &mut RngStream, d_slc: f64, space: u64, nslc: u64) -> Result<Vec<u64>> {
    if d_slc > FULL_SLICE_DENSITY {
        return Ok((0..space).collect());
    }
    if nslc > space {
        return Err(Error::Capacity { n: nslc, limit: space });
    }
    if d_slc > 0.5 {
        // start from every slice and knock out uniformly chosen ones
        let mut present = vec![true; space as usize];
        let mut left = space;
        while left > nslc {
            let u = s.below(space) as usize;
            if present[u] {
                present[u] = false;
                left -= 1;
            }
        }
        return Ok((0..space).filter(|&u| present[u as usize]).collect());
    }
    if d_slc >= 0.1 {
        let mut present: Vec<bool> = (0..space).map(|_| s.uniform() < d_slc).collect();
        let mut chosen: Vec<u64> = (0..space).filter(|&u| present[u as usize]).collect();
        let have = chosen.len() as u64;
        if have > nslc {
            let drop = rand_inds(s, have - nslc, have)?;
            for &d in &drop {
                present[chosen[d as usize - 1] as usize] = false;
            }
        } else {
            let mut count = have;
            while count < nslc {
                let u = s.below(space) as usize;
                if !present[u] {
                    present[u] = true;
                    count += 1;
                }
            }
        }
        chosen = (0..space).filter(|&u| present[u as usize]).collect();
        return Ok(chosen);
    }
    let mut set = HashSet::with_capacity(nslc as usize);
    while (set.len() as u64) < nslc {
        set.insert(s.below(space));
    }
    let mut out: Vec<u64> = set.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

fn unravel(mut u: u64, dims: &[u64], out: &mut [u64]) {
    for (o, &d) in out.iter_mut().zip(dims).rev() {
        *o = u % d;
        u /= d;
    }
}

/// Slice coordinates (1-based tuples over `slice_dims`), sorted and
/// duplicate-free, using the density case that matches `d_slc`.
pub fn slice_indices(s: &mut RngStream, d_slc: f64, slice_dims: &[u64], nslc: u64) -> Result<Vec<Vec<u64>>> {
    let space = checked_product(slice_dims.iter().copied())
        .and_then(|p| u64::try_from(p).ok())
        .ok_or_else(|| Error::InfeasibleSpec("slice index space exceeds 64 bits".into()))?;
    let pos = slice_positions(s, d_slc, space, nslc)?;
    Ok(pos
        .into_iter()
        .map(|u| {
            let mut c = vec![0; slice_dims.len()];
            unravel(u, slice_dims, &mut c);
            c.iter().map(|x| x + 1).collect()
        })
        .collect())
}

/// What a generation run achieved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateReport {
    pub nslc: u64,
    pub nfib: u64,
    pub nnz: u64,
    pub nfib_target: f64,
    pub nnz_target: f64,
    pub slice_params: SliceParams,
    pub fiber_params: FiberParams,
    /// Fraction of fibers-per-slice draws altered by clamping.
    pub fiber_stage_clamped: f64,
    /// Fraction of nonzeros-per-fiber draws altered by clamping.
    pub nonzero_stage_clamped: f64,
    /// Fraction of all count draws altered by clamping.
    pub clamped_fraction: f64,
    pub warnings: Vec<String>,
}

fn warning_text(stage: &str, w: &Warning) -> String {
    match w {
        Warning::InfeasibleAverage { avg_milli, limit } => format!(
            "{stage}: average {} exceeds limit {limit}; mean will be biased low",
            *avg_milli as f64 / 1000.0
        ),
    }
}

/// Builds a tensor from `spec`. Output nonzeros are in lexicographic order
/// and depend only on `spec`, not on the worker count.
pub fn generate(spec: &GeneratorSpec) -> Result<(CooTensor, GenerateReport)> {
    let sp = derive_slice_params(spec)?;
    let m = spec.order();
    let slice_dims = spec.slice_dims().to_vec();
    let space = spec.slice_space()?;
    let mut s = RngStream::for_entity(spec.seed, StreamKind::SliceIndices, 0);
    let slices = slice_positions(&mut s, spec.d_slc, space, sp.nslc)?;
    let nslc = slices.len() as u64;

    let fib = distribute(
        DistributeStreams {
            seed: spec.seed,
            counts: StreamKind::FiberCounts,
            indices: StreamKind::FiberIndices,
        },
        DistributeArgs::new(nslc, sp.avg_fib, sp.std_fib, int_max(sp.max_fib), spec.dims[m - 2]),
    )?;
    let nfib = fib.total();
    let fp = derive_fiber_params(spec, nfib)?;
    let nz = distribute(
        DistributeStreams {
            seed: spec.seed,
            counts: StreamKind::NonzeroCounts,
            indices: StreamKind::NonzeroIndices,
        },
        DistributeArgs::new(nfib, fp.avg_nz, fp.std_nz, int_max(fp.max_nz), spec.dims[m - 1]),
    )?;
    let nnz = nz.total() as usize;

    let mut cols: Vec<Vec<u64>> = vec![Vec::with_capacity(nnz); m];
    let mut slice_coord = vec![0u64; m - 2];
    for (si, &u) in slices.iter().enumerate() {
        unravel(u, &slice_dims, &mut slice_coord);
        for j in fib.offsets[si]..fib.offsets[si + 1] {
            let f = fib.inds[j] - 1;
            for &k in nz.inds_of(j) {
                for (c, &x) in cols.iter_mut().zip(&slice_coord) {
                    c.push(x);
                }
                cols[m - 2].push(f);
                cols[m - 1].push(k - 1);
            }
        }
    }

    let mut values = vec![0f64; nnz];
    let mut parts = Vec::with_capacity(nfib as usize);
    let mut rest = values.as_mut_slice();
    for j in 0..nfib as usize {
        let (head, tail) = rest.split_at_mut(nz.cnt[j] as usize);
        parts.push((j, head));
        rest = tail;
    }
    parts.into_par_iter().for_each(|(j, out)| {
        let mut s = RngStream::for_entity(spec.seed, StreamKind::Values, j as u64);
        for v in out.iter_mut() {
            *v = s.open_uniform();
        }
    });

    let t = CooTensor::from_parts_unchecked(spec.dims.clone(), cols, values)?;
    debug_assert!((1..t.nnz()).all(|k| t.cmp_rows(k - 1, k, &ModeOrder::identity(m)).is_lt()));

    let mut warnings: Vec<String> = fib.warnings.iter().map(|w| warning_text("fibers per slice", w)).collect();
    warnings.extend(nz.warnings.iter().map(|w| warning_text("nonzeros per fiber", w)));
    let touched = fib.clamped_high + fib.floored_low + nz.clamped_high + nz.floored_low;
    let report = GenerateReport {
        nslc,
        nfib,
        nnz: nnz as u64,
        nfib_target: sp.nfib_target,
        nnz_target: fp.nnz_target,
        slice_params: sp,
        fiber_params: fp,
        fiber_stage_clamped: fib.clamped_fraction(),
        nonzero_stage_clamped: nz.clamped_fraction(),
        clamped_fraction: touched as f64 / (nslc + nfib) as f64,
        warnings,
    };
    Ok((t, report))
}

/// Generator inputs read from an extracted feature set: the mode-(M-1, M)
/// slice block and the mode-M fiber block. `dims` overrides the sizes.
pub fn spec_from_features(fs: &FeatureSet, dims: Option<&[u64]>, seed: u64) -> Result<GeneratorSpec> {
    let m = fs.order();
    if m > 3 && fs.meta.scope != Scope::AllModes {
        return Err(Error::IncompleteFeature(format!(
            "all-modes blocks of an order-{m} tensor"
        )));
    }
    let slice = ModeId::Slice(m - 2, m - 1);
    let fiber = ModeId::Fiber(m - 1);
    let get = |kind: Kind, id: ModeId| -> Result<&KindStats> {
        fs.block(kind, id)
            .ok_or_else(|| Error::IncompleteFeature(format!("{} block {id}", kind.as_str())))
    };
    let nz_slc = get(Kind::NzPerSlice, slice)?;
    let fib_slc = get(Kind::FibPerSlice, slice)?;
    let nz_fib = get(Kind::NzPerFiber, fiber)?;
    let dims = match dims {
        Some(d) if d.len() != m => {
            return Err(Error::Arity {
                expected: m,
                got: d.len(),
            })
        }
        Some(d) => d.to_vec(),
        None => fs.global.dims.clone(),
    };
    Ok(GeneratorSpec {
        dims,
        d_slc: nz_slc.nz_density,
        d_fib: nz_fib.nz_density,
        d_nz: fs.global.d_nz,
        cv_fib: fib_slc.cv_nz,
        cv_nz: nz_fib.cv_nz,
        imbal_fib: fib_slc.imbal_nz,
        imbal_nz: nz_fib.imbal_nz,
        seed,
    })
}

/// Measures the generator-facing features of `t` directly with one sorted
/// pass under the identity mode-order. Cheaper than a full extraction at
/// high orders.
pub fn spec_from_tensor(t: &CooTensor, seed: u64) -> Result<GeneratorSpec> {
    let m = t.order();
    let c = build_counts_sort(t, &ModeOrder::identity(m))?;
    let dims = t.dims();
    let n_all = |modes: &[u64]| {
        checked_product(modes.iter().copied())
            .ok_or_else(|| Error::InvalidTensor("entry count overflows 128 bits".into()))
    };
    let slc_all = n_all(&dims[..m - 2])?;
    let fib_all = n_all(&dims[..m - 1])?;
    let nz_slc = KindStats::compute(&c.n_nz_slc, slc_all)?;
    let fib_slc = KindStats::compute(&c.n_fib_slc, slc_all)?;
    let nz_fib = KindStats::compute(&c.n_nz_fib, fib_all)?;
    Ok(GeneratorSpec {
        dims: dims.to_vec(),
        d_slc: nz_slc.nz_density,
        d_fib: nz_fib.nz_density,
        d_nz: t.nnz() as f64 / product_f64(dims),
        cv_fib: fib_slc.cv_nz,
        cv_nz: nz_fib.cv_nz,
        imbal_fib: fib_slc.imbal_nz,
        imbal_nz: nz_fib.imbal_nz,
        seed,
    })
}
