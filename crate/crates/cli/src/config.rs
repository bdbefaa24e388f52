//! Run configuration files. Either a JSON object or `key=value` lines whose
//! keys mirror the long flags (`d-slc` and `d_slc` are the same key).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('-', "_")
}

fn flatten(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(xs) => Some(xs.iter().filter_map(flatten).collect::<Vec<_>>().join(",")),
        other => Some(other.to_string()),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|msg| CliError::Core(sptk_core::Error::Parse(format!("{}: {msg}", path.display()))))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        if text.trim_start().starts_with('{') {
            let obj: BTreeMap<String, Value> = serde_json::from_str(text).map_err(|e| e.to_string())?;
            for (k, v) in obj {
                if let Some(s) = flatten(&v) {
                    values.insert(key(&k), s);
                }
            }
        } else {
            for (n, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
                values.insert(key(k), v.trim().to_string());
            }
        }
        Ok(Config { values })
    }

    /// The flag if given, otherwise the configured value parsed as `T`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, k: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(k) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config: bad value {s:?} for {k}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_key_value_agree() {
        let a = Config::parse(r#"{"dims": [100, 200], "d-slc": 0.5, "seed": 7}"#).unwrap();
        let b = Config::parse("# generator\ndims=100,200\nd_slc = 0.5\n--seed=7\n").unwrap();
        for c in [a, b] {
            assert_eq!(c.pick::<String>(None, "dims").unwrap().unwrap(), "100,200");
            assert_eq!(c.pick::<f64>(None, "d_slc").unwrap(), Some(0.5));
            assert_eq!(c.pick::<u64>(None, "seed").unwrap(), Some(7));
            assert_eq!(c.pick(Some(9u64), "seed").unwrap(), Some(9));
        }
    }

    #[test]
    fn bad_values() {
        assert!(Config::parse("novalue").is_err());
        let c = Config::parse("seed=x").unwrap();
        assert!(c.pick::<u64>(None, "seed").is_err());
    }
}
