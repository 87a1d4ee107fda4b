//! Experiment parameters: a flat `key = value` file overlaid by command-line
//! flags. Every value an experiment reads, given or defaulted, is recorded so
//! the manifest can echo the resolved configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::CliError;

/// Keys are case-insensitive and `_` is read as `-`.
fn normalize(key: &str) -> String {
    key.trim().trim_start_matches('-').replace('_', "-").to_ascii_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    File,
    Flag,
}

#[derive(Debug, Default)]
pub struct Params {
    given: BTreeMap<String, (String, Source)>,
    resolved: BTreeMap<String, Value>,
    tolerances: BTreeMap<String, f64>,
}

impl Params {
    /// Parse a config file: one `key = value` per line, `#` starts a comment.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(CliError::Config(format!("{}:{}: empty key", path.display(), i + 1)));
            }
            // flags parsed earlier still win
            if !matches!(self.given.get(&key), Some((_, Source::Flag))) {
                self.given.insert(key, (v.trim().to_string(), Source::File));
            }
        }
        Ok(())
    }

    /// `--key value` and `--key=value` pairs.
    pub fn load_flags(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            if !arg.starts_with("--") {
                return Err(CliError::Config(format!("unexpected argument '{arg}', parameters are given as --key value")));
            }
            let (key, value) = match arg.split_once('=') {
                Some((k, v)) => (normalize(k), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| CliError::Config(format!("{arg} needs a value")))?;
                    (normalize(arg), v.clone())
                }
            };
            if key.is_empty() {
                return Err(CliError::Config(format!("malformed flag '{arg}'")));
            }
            self.given.insert(key, (value, Source::Flag));
        }
        Ok(())
    }

    /// Remove a key that is handled outside the experiment (seed, threads, ...).
    pub fn take(&mut self, key: &str) -> Option<String> {
        self.given.remove(key).map(|(v, _)| v)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.given.get(key).map(|(v, _)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
        v.trim().parse().map_err(|_| CliError::Config(format!("parameter {key}: cannot parse '{v}'")))
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = match self.raw(key) {
            Some(s) => Self::parse(key, s)?,
            None => default,
        };
        if !v.is_finite() {
            return Err(CliError::Config(format!("parameter {key} must be finite, got {v}")));
        }
        self.resolved.insert(key.into(), json!(v));
        Ok(v)
    }

    pub fn optional_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            Some(_) => self.f64(key, f64::NAN).map(Some),
            None => {
                self.resolved.insert(key.into(), Value::Null);
                Ok(None)
            }
        }
    }

    pub fn required_f64(&mut self, key: &str) -> Result<f64, CliError> {
        if self.raw(key).is_none() {
            return Err(CliError::Config(format!("missing required parameter {key}")));
        }
        self.f64(key, f64::NAN)
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        let v = match self.raw(key) {
            Some(s) => Self::parse(key, s)?,
            None => default,
        };
        self.resolved.insert(key.into(), json!(v));
        Ok(v)
    }

    pub fn i64(&mut self, key: &str, default: i64) -> Result<i64, CliError> {
        let v = match self.raw(key) {
            Some(s) => Self::parse(key, s)?,
            None => default,
        };
        self.resolved.insert(key.into(), json!(v));
        Ok(v)
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        self.u64(key, default as u64).map(|v| v as usize)
    }

    /// Comma-separated list.
    pub fn list<T>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>, CliError>
    where
        T: std::str::FromStr + Clone + serde::Serialize,
    {
        let v: Vec<T> = match self.raw(key) {
            Some(s) => s.split(',').map(|x| Self::parse(key, x)).collect::<Result<_, _>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("parameter {key} is an empty list")));
        }
        self.resolved.insert(key.into(), json!(v));
        Ok(v)
    }

    pub fn optional_list_f64(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.raw(key) {
            Some(_) => self.list::<f64>(key, &[]).map(Some),
            None => Ok(None),
        }
    }

    pub fn choice(&mut self, key: &str, options: &[&str], default: &str) -> Result<String, CliError> {
        let v = self.raw(key).unwrap_or(default).to_ascii_lowercase();
        if !options.contains(&v.as_str()) {
            return Err(CliError::Config(format!("parameter {key} must be one of {options:?}, got '{v}'")));
        }
        self.resolved.insert(key.into(), json!(v));
        Ok(v)
    }

    /// A value filled in by the experiment itself rather than read.
    pub fn derived(&mut self, key: &str, value: Value) {
        self.resolved.insert(key.into(), value);
    }

    /// Acceptance threshold; overridable as `--tol-<name>`.
    pub fn tolerance(&mut self, name: &str, default: f64) -> Result<f64, CliError> {
        let key = format!("tol-{name}");
        let v = match self.raw(&key) {
            Some(s) => Self::parse(&key, s)?,
            None => default,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::Config(format!("tolerance {key} must be a non-negative number, got {v}")));
        }
        self.given.remove(&key);
        self.tolerances.insert(name.into(), v);
        Ok(v)
    }

    /// Refuse keys the experiment never read.
    pub fn finish(&self, experiment: &str) -> Result<(), CliError> {
        let unknown: Vec<&str> = self.given.keys().filter(|k| !self.resolved.contains_key(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("{experiment} does not take parameter(s) {}", unknown.join(", "))))
        }
    }

    pub fn resolved(&self) -> &BTreeMap<String, Value> {
        &self.resolved
    }

    pub fn tolerances(&self) -> &BTreeMap<String, f64> {
        &self.tolerances
    }
}
