//! The feature vocabulary: global features, the fifteen per-(kind, mode)
//! statistics, and the final reduction from count arrays.

mod io;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::checked_product;

pub use io::{deserialize, serialize, Format};

/// Number of scalar statistics per (kind, mode) block.
pub const STATS_PER_BLOCK: usize = 15;
/// Number of scalar global features: three mode sizes plus eight counts and densities.
pub const GLOBAL_FEATURES: usize = 11;

/// Which modes a feature set covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scope {
    #[serde(rename = "all")]
    AllModes,
    #[default]
    #[serde(rename = "top3")]
    Only3Mode,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::AllModes => "all",
            Scope::Only3Mode => "top3",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all_modes" => Ok(Scope::AllModes),
            "top3" | "only_3_mode" => Ok(Scope::Only3Mode),
            _ => Err(Error::Parse(format!("unknown scope {s:?}"))),
        }
    }
}

/// Total number of scalar features for a tensor of `order` modes.
pub fn feature_count(order: usize, scope: Scope) -> Result<usize> {
    if order < 3 {
        return Err(Error::UnsupportedOrder(order));
    }
    let m = match scope {
        Scope::AllModes => order,
        Scope::Only3Mode => 3,
    };
    let blocks = 2 * (m * (m - 1) / 2) + m;
    Ok(STATS_PER_BLOCK * blocks + GLOBAL_FEATURES)
}

/// The three statistic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    NzPerSlice,
    NzPerFiber,
    FibPerSlice,
}

impl Kind {
    pub const ALL: [Kind; 3] = [Kind::NzPerSlice, Kind::NzPerFiber, Kind::FibPerSlice];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::NzPerSlice => "nz_per_slice",
            Kind::NzPerFiber => "nz_per_fiber",
            Kind::FibPerSlice => "fib_per_slice",
        }
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown kind {s:?}")))
    }
}

/// Identifies a block by its free modes (0-based). Fibers are keyed by the
/// varying mode; slices by the unordered pair of varying modes, `k < l`.
/// Written 1-based: `"3"` or `"2-3"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeId {
    Fiber(usize),
    Slice(usize, usize),
}

impl ModeId {
    pub fn slice(a: usize, b: usize) -> Self {
        ModeId::Slice(a.min(b), a.max(b))
    }

    fn sort_key(&self) -> (usize, usize) {
        match *self {
            ModeId::Fiber(m) => (m, usize::MAX),
            ModeId::Slice(k, l) => (k, l),
        }
    }
}

impl Ord for ModeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for ModeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModeId::Fiber(m) => write!(f, "{}", m + 1),
            ModeId::Slice(k, l) => write!(f, "{}-{}", k + 1, l + 1),
        }
    }
}

impl FromStr for ModeId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| -> Result<usize> {
            match t.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::Parse(format!("bad mode identifier {s:?}"))),
            }
        };
        match s.split_once('-') {
            None => Ok(ModeId::Fiber(parse(s)?)),
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a >= b {
                    return Err(Error::Parse(format!("slice modes must be ascending: {s:?}")));
                }
                Ok(ModeId::Slice(a, b))
            }
        }
    }
}

impl Serialize for ModeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The fifteen statistics of one count distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KindStats {
    pub n_all: u128,
    pub n_nz: u64,
    pub nz_density: f64,
    pub max: u64,
    pub min: u64,
    pub dev: u64,
    pub sum: u64,
    pub avg_all: f64,
    pub imbal_all: f64,
    pub stdev_all: f64,
    pub cv_all: f64,
    pub avg_nz: f64,
    pub imbal_nz: f64,
    pub stdev_nz: f64,
    pub cv_nz: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Population standard deviation of a distribution with `n` entries whose
/// sum is `sum` and sum of squares `sumsq`. Exact integer variance when it fits.
fn population_stdev(n: u128, sum: u128, sumsq: u128) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let num = n
        .checked_mul(sumsq)
        .and_then(|a| sum.checked_mul(sum).map(|b| a - b));
    match num {
        Some(num) => (num as f64).sqrt() / n as f64,
        None => {
            let mean = sum as f64 / n as f64;
            (sumsq as f64 / n as f64 - mean * mean).max(0.0).sqrt()
        }
    }
}

impl KindStats {
    /// Reduces the counts of the nonzero entries of one kind. `n_all`
    /// includes the empty entries, which count as zeros in the `_all`
    /// statistics. `min` is taken over nonzero entries only.
    pub fn compute(counts: &[u64], n_all: u128) -> Result<Self> {
        if n_all == 0 {
            return Err(Error::EmptyDomain);
        }
        if (counts.len() as u128) > n_all {
            return Err(Error::Domain(format!(
                "{} nonzero entries exceed n_all = {n_all}",
                counts.len()
            )));
        }
        if let Some(&c) = counts.iter().find(|&&c| c == 0) {
            return Err(Error::NonPositiveCount(c));
        }
        let n_nz = counts.len() as u64;
        if n_nz == 0 {
            return Ok(Self {
                n_all,
                ..Self::default()
            });
        }
        let (sum, sumsq, max, min) = counts.iter().fold(
            (0u128, 0u128, 0u64, u64::MAX),
            |(s, q, mx, mn), &c| {
                let c128 = c as u128;
                (s + c128, q + c128 * c128, mx.max(c), mn.min(c))
            },
        );
        let avg_all = sum as f64 / n_all as f64;
        let avg_nz = sum as f64 / n_nz as f64;
        let stdev_all = population_stdev(n_all, sum, sumsq);
        let stdev_nz = population_stdev(n_nz as u128, sum, sumsq);
        let maxf = max as f64;
        Ok(Self {
            n_all,
            n_nz,
            nz_density: n_nz as f64 / n_all as f64,
            max,
            min,
            dev: max - min,
            sum: sum as u64,
            avg_all,
            imbal_all: ratio(maxf - avg_all, maxf),
            stdev_all,
            cv_all: ratio(stdev_all, avg_all),
            avg_nz,
            imbal_nz: ratio(maxf - avg_nz, maxf),
            stdev_nz,
            cv_nz: ratio(stdev_nz, avg_nz),
        })
    }

    /// Names of the ratios that were emitted as 0 because their denominator was 0.
    pub fn zero_denominators(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.max == 0 {
            out.extend(["imbal_all", "imbal_nz"]);
        }
        if self.avg_all == 0.0 {
            out.push("cv_all");
        }
        if self.n_nz == 0 {
            out.extend(["avg_nz", "cv_nz"]);
        }
        out
    }

    /// Scalar statistics in canonical order, with their names.
    pub fn scalars(&self) -> [(&'static str, Scalar); STATS_PER_BLOCK] {
        use Scalar::{Int, Real};
        [
            ("n_all", Int(self.n_all)),
            ("n_nz", Int(self.n_nz as u128)),
            ("nz_density", Real(self.nz_density)),
            ("max", Int(self.max as u128)),
            ("min", Int(self.min as u128)),
            ("dev", Int(self.dev as u128)),
            ("sum", Int(self.sum as u128)),
            ("avg_all", Real(self.avg_all)),
            ("imbal_all", Real(self.imbal_all)),
            ("stdev_all", Real(self.stdev_all)),
            ("cv_all", Real(self.cv_all)),
            ("avg_nz", Real(self.avg_nz)),
            ("imbal_nz", Real(self.imbal_nz)),
            ("stdev_nz", Real(self.stdev_nz)),
            ("cv_nz", Real(self.cv_nz)),
        ]
    }
}

/// Shorthand for [`KindStats::compute`].
pub fn compute_kind_stats(counts: &[u64], n_all: u128) -> Result<KindStats> {
    KindStats::compute(counts, n_all)
}

/// One scalar feature value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Int(u128),
    Real(f64),
}

/// Kind-independent features of the whole tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalFeatures {
    /// Full shape of the tensor.
    pub dims: Vec<u64>,
    /// 0-based modes whose sizes are reported as `size` features.
    pub size_modes: Vec<usize>,
    pub nnz: u64,
    pub d_nz: f64,
    pub nfib_all: u128,
    pub nslc_all: u128,
    pub nfib_nz: u64,
    pub nslc_nz: u64,
    pub d_fib: f64,
    pub d_slc: f64,
}

impl GlobalFeatures {
    pub fn scalars(&self) -> Vec<(String, ModeLabel, Scalar)> {
        use Scalar::{Int, Real};
        let mut out: Vec<(String, ModeLabel, Scalar)> = self
            .size_modes
            .iter()
            .map(|&m| ("size".to_string(), ModeLabel::Mode(m), Int(self.dims[m] as u128)))
            .collect();
        for (name, v) in [
            ("nnz", Int(self.nnz as u128)),
            ("d_nz", Real(self.d_nz)),
            ("nfib_all", Int(self.nfib_all)),
            ("nslc_all", Int(self.nslc_all)),
            ("nfib_nz", Int(self.nfib_nz as u128)),
            ("nslc_nz", Int(self.nslc_nz as u128)),
            ("d_fib", Real(self.d_fib)),
            ("d_slc", Real(self.d_slc)),
        ] {
            out.push((name.to_string(), ModeLabel::None, v));
        }
        out
    }
}

/// Mode column of a global feature row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    None,
    Mode(usize),
}

/// Nonzero counts per nonzero slice and nonzero fibers per nonzero slice for
/// one slice pair. `fiber_mode` is the member of `pair` along which the
/// counted fibers vary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceCounts {
    pub pair: (usize, usize),
    pub fiber_mode: usize,
    pub n_nz_slc: Vec<u64>,
    pub n_fib_slc: Vec<u64>,
}

/// Nonzero counts per nonzero fiber of one fiber mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberCounts {
    pub mode: usize,
    pub n_nz_fib: Vec<u64>,
}

/// Output of the array-construction phase in method-independent form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockCounts {
    pub slices: Vec<SliceCounts>,
    pub fibers: Vec<FiberCounts>,
}

/// Number of all fibers of `mode` and slices of `pair` within `covered`.
fn entries_excluding(dims: &[u64], covered: &[usize], skip: &[usize]) -> Result<u128> {
    checked_product(
        covered
            .iter()
            .filter(|m| !skip.contains(m))
            .map(|&m| dims[m]),
    )
    .ok_or_else(|| Error::InvalidTensor("entry count overflows 128 bits".into()))
}

fn density(num: u64, den: Option<u128>, dims: &[u64]) -> f64 {
    match den {
        Some(0) => 0.0,
        Some(d) => num as f64 / d as f64,
        None => num as f64 / dims.iter().map(|&d| d as f64).product::<f64>(),
    }
}

/// Global features from the dims and the nonzero fiber/slice counts of the
/// covered modes.
pub fn compute_global(
    dims: &[u64],
    covered: &[usize],
    size_modes: &[usize],
    nnz: u64,
    counts: &BlockCounts,
) -> Result<GlobalFeatures> {
    let mut nfib_all = 0u128;
    for &m in covered {
        nfib_all += entries_excluding(dims, covered, &[m])?;
    }
    let mut nslc_all = 0u128;
    for (i, &k) in covered.iter().enumerate() {
        for &l in &covered[i + 1..] {
            nslc_all += entries_excluding(dims, covered, &[k, l])?;
        }
    }
    let nfib_nz: u64 = counts.fibers.iter().map(|f| f.n_nz_fib.len() as u64).sum();
    let nslc_nz: u64 = counts.slices.iter().map(|s| s.n_nz_slc.len() as u64).sum();
    Ok(GlobalFeatures {
        dims: dims.to_vec(),
        size_modes: size_modes.to_vec(),
        nnz,
        d_nz: density(nnz, checked_product(dims.iter().copied()), dims),
        nfib_all,
        nslc_all,
        nfib_nz,
        nslc_nz,
        d_fib: density(nfib_nz, Some(nfib_all), dims),
        d_slc: density(nslc_nz, Some(nslc_all), dims),
    })
}

/// One (kind, mode) block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub kind: Kind,
    pub modes: ModeId,
    pub stats: KindStats,
}

/// Extraction metadata. Not part of feature equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Meta {
    pub method: String,
    pub scope: Scope,
    pub lambda: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub workers: Option<usize>,
    /// Ratios emitted as 0 because of a zero denominator, as `kind/modes:stat`.
    pub quality_flags: Vec<String>,
    pub notes: Vec<String>,
}

/// Global features plus every (kind, mode) block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSet {
    pub global: GlobalFeatures,
    pub blocks: Vec<Block>,
    #[serde(default)]
    pub meta: Meta,
}

/// A mismatch found by [`FeatureSet::compare`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDiff {
    pub feature: String,
    pub left: String,
    pub right: String,
}

impl fmt::Display for FeatureDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} != {}", self.feature, self.left, self.right)
    }
}

impl FeatureSet {
    /// Final reduction: one [`KindStats`] per block, computed in parallel.
    pub fn from_counts(
        dims: &[u64],
        covered: &[usize],
        size_modes: &[usize],
        nnz: u64,
        counts: &BlockCounts,
    ) -> Result<Self> {
        let global = compute_global(dims, covered, size_modes, nnz, counts)?;

        let mut jobs: Vec<(Kind, ModeId, &[u64], Vec<usize>)> = Vec::new();
        for s in &counts.slices {
            let id = ModeId::slice(s.pair.0, s.pair.1);
            let skip = vec![s.pair.0, s.pair.1];
            jobs.push((Kind::NzPerSlice, id, &s.n_nz_slc, skip.clone()));
            jobs.push((Kind::FibPerSlice, id, &s.n_fib_slc, skip));
        }
        for f in &counts.fibers {
            jobs.push((Kind::NzPerFiber, ModeId::Fiber(f.mode), &f.n_nz_fib, vec![f.mode]));
        }
        let mut blocks = jobs
            .into_par_iter()
            .map(|(kind, modes, c, skip)| {
                let n_all = entries_excluding(dims, covered, &skip)?;
                Ok(Block {
                    kind,
                    modes,
                    stats: KindStats::compute(c, n_all)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        blocks.sort_by_key(|b| (b.kind, b.modes));

        let mut meta = Meta::default();
        for b in &blocks {
            for stat in b.stats.zero_denominators() {
                meta.quality_flags
                    .push(format!("{}/{}:{}", b.kind.as_str(), b.modes, stat));
            }
        }
        Ok(Self { global, blocks, meta })
    }

    pub fn block(&self, kind: Kind, modes: ModeId) -> Option<&KindStats> {
        self.blocks
            .iter()
            .find(|b| b.kind == kind && b.modes == modes)
            .map(|b| &b.stats)
    }

    pub fn order(&self) -> usize {
        self.global.dims.len()
    }

    /// Every scalar feature as `(name, kind, modes, value)` in serialization order.
    pub fn scalar_rows(&self) -> Vec<(String, String, String, Scalar)> {
        let mut rows: Vec<_> = self
            .global
            .scalars()
            .into_iter()
            .map(|(name, label, v)| {
                let modes = match label {
                    ModeLabel::None => String::new(),
                    ModeLabel::Mode(m) => (m + 1).to_string(),
                };
                (name, "global".to_string(), modes, v)
            })
            .collect();
        for b in &self.blocks {
            for (name, v) in b.stats.scalars() {
                rows.push((
                    name.to_string(),
                    b.kind.as_str().to_string(),
                    b.modes.to_string(),
                    v,
                ));
            }
        }
        rows
    }

    /// Integer features must match exactly and reals within `rel_tol`
    /// relative difference. Metadata is ignored.
    pub fn compare(&self, other: &FeatureSet, rel_tol: f64) -> Vec<FeatureDiff> {
        let mut diffs = Vec::new();
        if self.global.dims != other.global.dims {
            diffs.push(FeatureDiff {
                feature: "global/dims".into(),
                left: format!("{:?}", self.global.dims),
                right: format!("{:?}", other.global.dims),
            });
        }
        let left = self.scalar_rows();
        let right = other.scalar_rows();
        let key = |r: &(String, String, String, Scalar)| format!("{}/{}:{}", r.1, r.2, r.0);
        let rmap: std::collections::HashMap<String, Scalar> =
            right.iter().map(|r| (key(r), r.3)).collect();
        let lkeys: std::collections::HashSet<String> = left.iter().map(key).collect();
        for r in &left {
            let k = key(r);
            match rmap.get(&k) {
                None => diffs.push(FeatureDiff {
                    feature: k,
                    left: scalar_str(r.3),
                    right: "missing".into(),
                }),
                Some(&rv) if !scalars_match(r.3, rv, rel_tol) => diffs.push(FeatureDiff {
                    feature: k,
                    left: scalar_str(r.3),
                    right: scalar_str(rv),
                }),
                Some(_) => {}
            }
        }
        for r in &right {
            let k = key(r);
            if !lkeys.contains(&k) {
                diffs.push(FeatureDiff {
                    feature: k,
                    left: "missing".into(),
                    right: scalar_str(r.3),
                });
            }
        }
        diffs
    }
}

fn scalar_str(s: Scalar) -> String {
    match s {
        Scalar::Int(v) => v.to_string(),
        Scalar::Real(v) => format!("{v:?}"),
    }
}

fn scalars_match(a: Scalar, b: Scalar, rel_tol: f64) -> bool {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => x == y,
        (Scalar::Real(x), Scalar::Real(y)) => {
            x == y || (x - y).abs() <= rel_tol * x.abs().max(y.abs())
        }
        _ => false,
    }
}
