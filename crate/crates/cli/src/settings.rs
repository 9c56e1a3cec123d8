//! Effective configuration: CLI flags over config file over defaults.
//!
//! Every value is kept as the string it was given in, so a manifest that
//! echoes the map re-parses to exactly the same run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_map(values: BTreeMap<String, String>) -> Self {
        Settings { values }
    }

    /// Layers `cli` over `file` over `defaults`. File keys the subcommand does
    /// not know are errors; `None` defaults mark optional keys.
    pub fn resolve(
        defaults: &[(&str, Option<&str>)],
        file: &BTreeMap<String, String>,
        cli: Vec<(&str, Option<String>)>,
    ) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in defaults {
            if let Some(v) = v {
                values.insert(k.to_string(), v.to_string());
            }
        }
        for (k, v) in file {
            if !defaults.iter().any(|(d, _)| d == k) {
                return Err(CliError::config(format!("config file: unknown key `{k}`")));
            }
            values.insert(k.clone(), v.clone());
        }
        for (k, v) in cli {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Settings { values })
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn opt_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn str(&self, key: &str) -> CliResult<&str> {
        self.opt_str(key)
            .ok_or_else(|| CliError::config(format!("missing required setting `{key}`")))
    }

    pub fn parse<T>(&self, key: &str) -> CliResult<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let raw = self.str(key)?;
        raw.trim()
            .parse()
            .map_err(|e| CliError::config(format!("`{key}` = `{raw}`: {e}")))
    }

    pub fn parse_opt<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.opt_str(key) {
            None => Ok(None),
            Some(_) => self.parse(key).map(Some),
        }
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        match self.opt_str(key).map(str::trim) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(other) => Err(CliError::config(format!("`{key}` = `{other}`: expected true or false"))),
        }
    }

    pub fn grid(&self, key: &str) -> CliResult<Vec<f64>> {
        parse_grid(self.str(key)?).map_err(|e| CliError::config(format!("`{key}`: {e}")))
    }
}

/// Reads `key = value` lines. Top-level keys and keys under `[section]`
/// apply; other sections are skipped. `#` starts a comment.
pub fn read_config_file(path: &Path, section: &str) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading config {}: {e}", path.display())))?;
    parse_config(&text, section)
}

pub fn parse_config(text: &str, section: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut active = true;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            active = name.trim() == section;
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected `key = value`", i + 1)))?;
        if active {
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(out)
}

/// `start:stop:step` (inclusive), a comma list, or a single value.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let number = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("`{t}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{t}` is not finite"))
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("range `{s}` needs step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(format!("range `{s}` has too many points"));
            }
            // Rounding keeps 0.1 + 2·0.1 printing as 0.3.
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [single] => single.split(',').map(number).collect(),
        _ => Err(format!("`{s}`: expected start:stop:step or a comma list")),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}
