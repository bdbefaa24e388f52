//! FROSTT `.tns` text format: one nonzero per line, 1-based indices followed
//! by the value. Blank lines and lines starting with `#` are skipped.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::tensor::{CooTensor, DuplicatePolicy};

/// Reads a tensor. Without `declared_dims` the size of each mode is its
/// largest index.
pub fn load_frostt<R: BufRead>(
    reader: R,
    declared_dims: Option<&[u64]>,
    policy: DuplicatePolicy,
) -> Result<CooTensor> {
    let mut order: Option<usize> = None;
    let mut columns: Vec<Vec<u64>> = Vec::new();
    let mut values = Vec::new();
    let mut lines = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(Error::format(lineno, "expected indices followed by a value"));
        }
        let m = tokens.len() - 1;
        match order {
            None => {
                if let Some(d) = declared_dims {
                    if d.len() != m {
                        return Err(Error::format(
                            lineno,
                            format!("{m} index columns but {} declared dims", d.len()),
                        ));
                    }
                }
                order = Some(m);
                columns = vec![Vec::new(); m];
            }
            Some(o) if o != m => {
                return Err(Error::format(
                    lineno,
                    format!("expected {o} index columns, found {m}"),
                ));
            }
            Some(_) => {}
        }
        for (mode, tok) in tokens[..m].iter().enumerate() {
            let idx: i128 = tok
                .parse()
                .map_err(|_| Error::format(lineno, format!("bad index {tok:?}")))?;
            if idx <= 0 {
                return Err(Error::Index {
                    line: lineno,
                    value: idx,
                });
            }
            let idx = u64::try_from(idx)
                .map_err(|_| Error::format(lineno, format!("index {idx} exceeds 64 bits")))?;
            if let Some(d) = declared_dims {
                if idx > d[mode] {
                    return Err(Error::Bounds {
                        line: lineno,
                        mode: mode + 1,
                        index: idx,
                        dim: d[mode],
                    });
                }
            }
            columns[mode].push(idx - 1);
        }
        let v: f64 = tokens[m]
            .parse()
            .map_err(|_| Error::format(lineno, format!("bad value {:?}", tokens[m])))?;
        values.push(v);
        lines.push(lineno);
    }

    let Some(m) = order else {
        return Err(Error::format(0, "no nonzeros; tensor order cannot be determined"));
    };
    let dims = match declared_dims {
        Some(d) => d.to_vec(),
        None => columns
            .iter()
            .map(|c| c.iter().max().map_or(1, |&x| x + 1))
            .collect(),
    };
    if m < 3 {
        return Err(Error::UnsupportedOrder(m));
    }
    CooTensor::with_policy(dims, columns, values, policy).map_err(|e| match e {
        // report source line numbers rather than nonzero positions
        Error::Duplicate { line, first } => Error::Duplicate {
            line: lines[line - 1],
            first: lines[first - 1],
        },
        other => other,
    })
}

/// Writes one line per nonzero: 1-based indices, then the value in its
/// shortest round-trip decimal form.
pub fn write_frostt<W: Write>(t: &CooTensor, sink: &mut W) -> Result<()> {
    let mut line = String::new();
    for k in 0..t.nnz() {
        line.clear();
        for col in t.columns() {
            line.push_str(&(col[k] + 1).to_string());
            line.push(' ');
        }
        line.push_str(&format!("{:?}", t.values()[k]));
        line.push('\n');
        sink.write_all(line.as_bytes())?;
    }
    sink.flush()?;
    Ok(())
}
