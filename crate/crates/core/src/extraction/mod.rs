//! Feature extraction: count-array construction by one of four methods,
//! followed by the final reduction in [`crate::features`].

mod counts;
mod group;
mod hash;
mod sort;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use counts::CountArrays;
pub use group::{
    build_counts_group, build_counts_group_capped, build_counts_group_instrumented, GroupStats,
    DEFAULT_GROUP_CAP_WORDS,
};
pub use hash::{build_counts_hash, hash_fiber_map, MixBuild, MixHasher};
pub use sort::build_counts_sort;

use crate::error::{Error, Result};
use crate::features::{BlockCounts, FeatureSet, Scope};
use crate::tensor::{CooTensor, ModeOrder};

/// Hybrid threshold on the product of the two leading permuted mode sizes.
pub const DEFAULT_LAMBDA: f64 = 1e11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Hash,
    Sort,
    Group,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Hash, Method::Sort, Method::Group, Method::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hash => "hash",
            Method::Sort => "sort",
            Method::Group => "group",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodChoice {
    pub method: Method,
    pub scope: Scope,
    pub lambda: f64,
    /// Auxiliary-memory cap for the grouping method, in words.
    pub group_cap_words: u128,
}

impl Default for MethodChoice {
    fn default() -> Self {
        Self {
            method: Method::Hybrid,
            scope: Scope::Only3Mode,
            lambda: DEFAULT_LAMBDA,
            group_cap_words: DEFAULT_GROUP_CAP_WORDS,
        }
    }
}

impl MethodChoice {
    pub fn new(method: Method, scope: Scope) -> Self {
        Self {
            method,
            scope,
            ..Self::default()
        }
    }

    pub fn validate(&self, order: usize) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if order < 3 {
            return Err(Error::UnsupportedOrder(order));
        }
        if self.scope == Scope::AllModes && order > 3 && self.method != Method::Hash {
            return Err(Error::UnsupportedCombination(format!(
                "all-modes scope on an order-{order} tensor requires the hash method, not {}",
                self.method
            )));
        }
        Ok(())
    }
}

/// The three modes of largest size, ties going to the lower mode, returned
/// in ascending mode order.
pub fn select_top3_modes(dims: &[u64]) -> Result<[usize; 3]> {
    if dims.len() < 3 {
        return Err(Error::UnsupportedOrder(dims.len()));
    }
    let mut idx: Vec<usize> = (0..dims.len()).collect();
    idx.sort_by(|&a, &b| dims[b].cmp(&dims[a]).then(a.cmp(&b)));
    let mut top = [idx[0], idx[1], idx[2]];
    top.sort_unstable();
    Ok(top)
}

/// For a slice pair given as positions `i < j` among `n` covered modes,
/// the position of the fiber mode whose fibers are counted per slice. This
/// reproduces the cyclic mode-order set on three modes.
pub fn paired_fiber_mode(n: usize, i: usize, j: usize) -> usize {
    if i == 0 && j == n - 1 {
        i
    } else {
        j
    }
}

/// Which construction the hybrid rule picks for a mode-order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    Group,
    Sort,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Path::Group => "group",
            Path::Sort => "sort",
        })
    }
}

/// Product of the sizes of the two leading permuted modes.
pub fn decision_metric(dims: &[u64], mo: &ModeOrder) -> f64 {
    let p = mo.perm();
    dims[p[0]] as f64 * dims[p[1]] as f64
}

/// Group when the metric is strictly below `lambda`, sort otherwise.
pub fn hybrid_path(metric: f64, lambda: f64) -> Path {
    if metric < lambda {
        Path::Group
    } else {
        Path::Sort
    }
}

pub fn build_counts_hybrid(t: &CooTensor, mo: &ModeOrder, lambda: f64) -> Result<CountArrays> {
    mo.check_arity(t.order())?;
    match hybrid_path(decision_metric(t.dims(), mo), lambda) {
        Path::Group => build_counts_group(t, mo),
        Path::Sort => build_counts_sort(t, mo),
    }
}

/// Count arrays for one mode-order with a mode-order-based method. Returns
/// the arrays plus a note when the grouping method fell back to sorting.
pub fn build_counts(
    t: &CooTensor,
    mo: &ModeOrder,
    choice: &MethodChoice,
) -> Result<(CountArrays, Option<String>)> {
    let path = match choice.method {
        Method::Sort => Path::Sort,
        Method::Group => Path::Group,
        Method::Hybrid => hybrid_path(decision_metric(t.dims(), mo), choice.lambda),
        Method::Hash => {
            return Err(Error::UnsupportedCombination(
                "hash method does not use mode-orders".into(),
            ))
        }
    };
    match path {
        Path::Sort => Ok((build_counts_sort(t, mo)?, None)),
        Path::Group => match build_counts_group_capped(t, mo, choice.group_cap_words) {
            Ok(c) => Ok((c, None)),
            Err(e @ Error::GroupingMemory { .. }) => Ok((
                build_counts_sort(t, mo)?,
                Some(format!("{mo}: {e}; fell back to sort")),
            )),
            Err(e) => Err(e),
        },
    }
}

/// Modes whose sizes are reported as global features: all three when the
/// order is 3, otherwise the covered top-3 modes.
fn size_modes(dims: &[u64], covered: &[usize]) -> Result<Vec<usize>> {
    if covered.len() == 3 {
        Ok(covered.to_vec())
    } else {
        Ok(select_top3_modes(dims)?.to_vec())
    }
}

/// Extracts the full feature set of `t`.
pub fn extract(t: &CooTensor, choice: &MethodChoice) -> Result<FeatureSet> {
    choice.validate(t.order())?;
    let covered: Vec<usize> = match choice.scope {
        Scope::AllModes => (0..t.order()).collect(),
        Scope::Only3Mode => select_top3_modes(t.dims())?.to_vec(),
    };

    let mut notes = Vec::new();
    let counts = if choice.method == Method::Hash {
        build_counts_hash(t, &covered)?
    } else {
        let projected;
        let work = if covered.len() == t.order() {
            t
        } else {
            projected = t.project(&covered)?;
            &projected
        };
        if choice.method == Method::Hybrid {
            for mo in ModeOrder::cyclic_set() {
                let metric = decision_metric(work.dims(), &mo);
                notes.push(format!(
                    "{}: metric {metric:e}, {}",
                    relabel(&mo, &covered),
                    hybrid_path(metric, choice.lambda)
                ));
            }
        }
        let per_order = ModeOrder::cyclic_set()
            .par_iter()
            .map(|mo| build_counts(work, mo, choice))
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = BlockCounts::default();
        for (c, note) in per_order {
            notes.extend(note);
            let (s, f) = c.into_blocks(&covered);
            blocks.slices.push(s);
            blocks.fibers.push(f);
        }
        blocks
    };

    let mut fs = FeatureSet::from_counts(
        t.dims(),
        &covered,
        &size_modes(t.dims(), &covered)?,
        t.nnz() as u64,
        &counts,
    )?;
    fs.meta.method = choice.method.to_string();
    fs.meta.scope = choice.scope;
    fs.meta.lambda = (choice.method == Method::Hybrid).then_some(choice.lambda);
    fs.meta.notes = notes;
    Ok(fs)
}

/// A mode-order on the projected tensor, written in original mode numbers.
fn relabel(mo: &ModeOrder, covered: &[usize]) -> String {
    let names: Vec<String> = mo.perm().iter().map(|&p| (covered[p] + 1).to_string()).collect();
    format!("<{}>", names.join(","))
}
