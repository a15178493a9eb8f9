//! Flat `key=value` run configuration: defaults, then the `--config` file,
//! then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};

/// Empty value means "unset" for optional keys.
pub type Defaults = &'static [(&'static str, &'static str)];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

pub fn parse_text(text: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "{}:{}: expected key=value, got {line:?}",
                origin.display(),
                n + 1
            ))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(
        defaults: Defaults,
        file: Option<&Path>,
        flags: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self> {
        let mut values: BTreeMap<String, String> = defaults
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            for (k, v) in parse_text(&text, path)? {
                if !values.contains_key(&k) {
                    return Err(CliError::usage(format!(
                        "{}: unknown key {k:?}",
                        path.display()
                    )));
                }
                values.insert(k, v);
            }
        }
        for (k, v) in flags {
            debug_assert!(values.contains_key(k), "flag {k} missing from defaults");
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map_or("", String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.opt(key)?
            .ok_or_else(|| CliError::usage(format!("missing required setting {key}")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse()
            .map(Some)
            .map_err(|e| CliError::usage(format!("invalid {key}={raw:?}: {e}")))
    }

    /// Comma-separated list; empty when unset.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| CliError::usage(format!("invalid {key} entry {s:?}: {e}")))
            })
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        Ok(self.opt::<bool>(key)?.unwrap_or(false))
    }

    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// Writes `resolved-config.txt` into `dir`, creating it.
    pub fn echo_into(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("resolved-config.txt");
        std::fs::write(&path, self.to_text()).map_err(|e| CliError::io(path, e))
    }
}

/// Flag value as config text.
pub fn text<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

/// Boolean switches only override when set.
pub fn switch(on: bool) -> Option<String> {
    on.then(|| "true".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: Defaults = &[("alpha", "0"), ("mode", "none"), ("warm_start", "")];

    #[test]
    fn precedence_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "# comment\nalpha = 1e-5\nmode=l1\n\n").unwrap();
        let c = RunConfig::resolve(D, Some(&file), vec![("mode", Some("bl1".into()))]).unwrap();
        assert_eq!(c.get::<f64>("alpha").unwrap(), 1e-5);
        assert_eq!(c.get::<String>("mode").unwrap(), "bl1");
        assert_eq!(c.opt::<String>("warm_start").unwrap(), None);
        assert_eq!(c.to_text(), "alpha=1e-5\nmode=bl1\nwarm_start=\n");

        std::fs::write(&file, "learning_rate=0.1\n").unwrap();
        let e = RunConfig::resolve(D, Some(&file), vec![]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("learning_rate"));
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let c = RunConfig::resolve(D, None, vec![("alpha", Some("lots".into()))]).unwrap();
        assert!(matches!(c.get::<f64>("alpha"), Err(CliError::Usage(_))));
    }

    #[test]
    fn lists() {
        let c = RunConfig::resolve(D, None, vec![("mode", Some("1, 3,3".into()))]).unwrap();
        assert_eq!(c.list::<u32>("mode").unwrap(), vec![1, 3, 3]);
        assert!(c.list::<u32>("warm_start").unwrap().is_empty());
    }
}
