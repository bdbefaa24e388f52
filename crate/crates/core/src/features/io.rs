//! JSON and CSV encodings of a [`FeatureSet`].
//!
//! CSV carries metadata as `# key=value` comment lines ahead of the header
//! `feature,kind,modes,value`. Reals are written with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{Block, FeatureSet, GlobalFeatures, Kind, KindStats, Meta, ModeId, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Parse(format!("unknown feature format {s:?}"))),
        }
    }
}

pub fn serialize(fs: &FeatureSet, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(fs).map_err(|e| Error::Parse(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => Ok(to_csv(fs).into_bytes()),
    }
}

pub fn deserialize(bytes: &[u8], format: Format) -> Result<FeatureSet> {
    match format {
        Format::Json => serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string())),
        Format::Csv => {
            let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
            from_csv(text)
        }
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn to_csv(fs: &FeatureSet) -> String {
    let mut s = String::new();
    let m = &fs.meta;
    let _ = writeln!(s, "# method={}", m.method);
    let _ = writeln!(s, "# scope={}", m.scope);
    if let Some(l) = m.lambda {
        let _ = writeln!(s, "# lambda={}", real(l));
    }
    if let Some(w) = m.wall_time_s {
        let _ = writeln!(s, "# wall_time_s={}", real(w));
    }
    if let Some(w) = m.workers {
        let _ = writeln!(s, "# workers={w}");
    }
    let _ = writeln!(s, "# dims={}", join(&fs.global.dims));
    for q in &m.quality_flags {
        let _ = writeln!(s, "# quality_flag={q}");
    }
    for n in &m.notes {
        let _ = writeln!(s, "# note={}", n.replace('\n', " "));
    }
    s.push_str("feature,kind,modes,value\n");
    for (name, kind, modes, v) in fs.scalar_rows() {
        let v = match v {
            Scalar::Int(i) => i.to_string(),
            Scalar::Real(r) => real(r),
        };
        let _ = writeln!(s, "{name},{kind},{modes},{v}");
    }
    s
}

fn parse<T: FromStr>(what: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} value {s:?}")))
}

fn parse_list<T: FromStr>(what: &str, s: &str) -> Result<Vec<T>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| parse(what, x)).collect()
}

fn from_csv(text: &str) -> Result<FeatureSet> {
    let mut meta = Meta::default();
    let mut dims: Option<Vec<u64>> = None;
    let mut header_seen = false;
    let mut global: BTreeMap<String, String> = BTreeMap::new();
    let mut size_modes = Vec::new();
    let mut blocks: Vec<(Kind, ModeId, BTreeMap<String, String>)> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let (k, v) = c
                .trim_start()
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: bad comment", lineno + 1)))?;
            match k {
                "method" => meta.method = v.to_string(),
                "scope" => meta.scope = v.parse()?,
                "lambda" => meta.lambda = Some(parse("lambda", v)?),
                "wall_time_s" => meta.wall_time_s = Some(parse("wall_time_s", v)?),
                "workers" => meta.workers = Some(parse("workers", v)?),
                "dims" => dims = Some(parse_list("dims", v)?),
                "quality_flag" => meta.quality_flags.push(v.to_string()),
                "note" => meta.notes.push(v.to_string()),
                _ => {}
            }
            continue;
        }
        if !header_seen {
            if line.trim() != "feature,kind,modes,value" {
                return Err(Error::Parse(format!("line {}: expected CSV header", lineno + 1)));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let [name, kind, modes, value] = cols[..] else {
            return Err(Error::Parse(format!("line {}: expected 4 columns", lineno + 1)));
        };
        if kind == "global" {
            if name == "size" {
                size_modes.push(parse::<usize>("mode", modes)?.checked_sub(1).ok_or_else(
                    || Error::Parse(format!("line {}: mode numbers are 1-based", lineno + 1)),
                )?);
            } else {
                global.insert(name.to_string(), value.to_string());
            }
            continue;
        }
        let kind: Kind = kind.parse()?;
        let modes: ModeId = modes.parse()?;
        match blocks.last_mut() {
            Some((k, m, stats)) if *k == kind && *m == modes => {
                stats.insert(name.to_string(), value.to_string());
            }
            _ => blocks.push((kind, modes, BTreeMap::from([(name.to_string(), value.to_string())]))),
        }
    }
    if !header_seen {
        return Err(Error::Parse("missing CSV header".into()));
    }
    let dims = dims.ok_or_else(|| Error::Parse("missing dims comment".into()))?;
    if size_modes.iter().any(|&m| m >= dims.len()) {
        return Err(Error::Parse("size mode outside dims".into()));
    }

    let g = |k: &str| -> Result<&str> {
        global
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("missing global feature {k}")))
    };
    let global = GlobalFeatures {
        dims,
        size_modes,
        nnz: parse("nnz", g("nnz")?)?,
        d_nz: parse("d_nz", g("d_nz")?)?,
        nfib_all: parse("nfib_all", g("nfib_all")?)?,
        nslc_all: parse("nslc_all", g("nslc_all")?)?,
        nfib_nz: parse("nfib_nz", g("nfib_nz")?)?,
        nslc_nz: parse("nslc_nz", g("nslc_nz")?)?,
        d_fib: parse("d_fib", g("d_fib")?)?,
        d_slc: parse("d_slc", g("d_slc")?)?,
    };

    let blocks = blocks
        .into_iter()
        .map(|(kind, modes, s)| {
            let f = |k: &str| -> Result<&str> {
                s.get(k)
                    .map(String::as_str)
                    .ok_or_else(|| Error::Parse(format!("{}/{modes}: missing {k}", kind.as_str())))
            };
            let stats = KindStats {
                n_all: parse("n_all", f("n_all")?)?,
                n_nz: parse("n_nz", f("n_nz")?)?,
                nz_density: parse("nz_density", f("nz_density")?)?,
                max: parse("max", f("max")?)?,
                min: parse("min", f("min")?)?,
                dev: parse("dev", f("dev")?)?,
                sum: parse("sum", f("sum")?)?,
                avg_all: parse("avg_all", f("avg_all")?)?,
                imbal_all: parse("imbal_all", f("imbal_all")?)?,
                stdev_all: parse("stdev_all", f("stdev_all")?)?,
                cv_all: parse("cv_all", f("cv_all")?)?,
                avg_nz: parse("avg_nz", f("avg_nz")?)?,
                imbal_nz: parse("imbal_nz", f("imbal_nz")?)?,
                stdev_nz: parse("stdev_nz", f("stdev_nz")?)?,
                cv_nz: parse("cv_nz", f("cv_nz")?)?,
            };
            if s.len() != super::STATS_PER_BLOCK {
                return Err(Error::Parse(format!("{}/{modes}: unexpected statistic", kind.as_str())));
            }
            Ok(Block { kind, modes, stats })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSet { global, blocks, meta })
}

#[cfg(test)]
mod tests {
    use super::super::*;

    fn sample() -> FeatureSet {
        let counts = BlockCounts {
            slices: vec![SliceCounts {
                pair: (1, 2),
                fiber_mode: 2,
                n_nz_slc: vec![2, 1],
                n_fib_slc: vec![2, 1],
            }],
            fibers: vec![FiberCounts { mode: 2, n_nz_fib: vec![1, 1, 1] }],
        };
        let mut fs = FeatureSet::from_counts(&[2, 2, 2], &[0, 1, 2], &[0, 1, 2], 3, &counts).unwrap();
        fs.meta.method = "sort".into();
        fs.meta.lambda = Some(1e11);
        fs.meta.wall_time_s = Some(0.1 + 0.2);
        fs.meta.workers = Some(4);
        fs.meta.notes.push("a note".into());
        fs
    }

    #[test]
    fn json_round_trip_is_exact() {
        let fs = sample();
        let bytes = serialize(&fs, Format::Json).unwrap();
        assert_eq!(deserialize(&bytes, Format::Json).unwrap(), fs);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let fs = sample();
        let bytes = serialize(&fs, Format::Csv).unwrap();
        assert_eq!(deserialize(&bytes, Format::Csv).unwrap(), fs);
    }

    #[test]
    fn unknown_kind_is_parse_error() {
        let fs = sample();
        let text = String::from_utf8(serialize(&fs, Format::Json).unwrap())
            .unwrap()
            .replace("nz_per_fiber", "nz_per_tube");
        assert!(matches!(deserialize(text.as_bytes(), Format::Json), Err(Error::Parse(_))));
        let csv = String::from_utf8(serialize(&fs, Format::Csv).unwrap())
            .unwrap()
            .replace("nz_per_fiber", "nz_per_tube");
        assert!(matches!(deserialize(csv.as_bytes(), Format::Csv), Err(Error::Parse(_))));
    }

    #[test]
    fn malformed_inputs() {
        assert!(deserialize(b"{", Format::Json).is_err());
        assert!(deserialize(b"feature,kind\n", Format::Csv).is_err());
        assert!(deserialize(b"", Format::Csv).is_err());
    }

    #[test]
    fn csv_rows_one_per_scalar() {
        let fs = sample();
        let text = String::from_utf8(serialize(&fs, Format::Csv).unwrap()).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(rows, 11 + 3 * 15);
    }
}
