//! Flat `key = value` run configuration. Relative paths in a config file
//! resolve against the file's directory; overrides resolve against the
//! working directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, (String, Option<PathBuf>)>,
}

impl RunConfig {
    /// Blank lines and lines starting with `#` are ignored. Repeating a key
    /// is an error.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let k = k.trim();
            if k.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if cfg.values.insert(k.to_owned(), (v.trim().to_owned(), base.map(Path::to_path_buf))).is_some() {
                bail!("line {}: key {k:?} repeated", i + 1);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, path.parent()).with_context(|| format!("config {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_owned(), (value.into(), None));
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| anyhow!("override {pair:?} is not key=value"))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| anyhow!("missing config key {key:?}"))
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| anyhow!("config key {key:?}: cannot parse {v:?}: {e}")),
        }
    }

    pub fn parse_required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.require(key)?;
        v.parse().map_err(|e| anyhow!("config key {key:?}: cannot parse {v:?}: {e}"))
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        self.parse_or(key, default)
    }

    /// Comma-separated values; empty items are dropped.
    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect())
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(|(v, base)| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        })
    }

    /// A path that must already exist.
    pub fn input(&self, key: &str) -> Result<PathBuf> {
        let p = self.path(key).ok_or_else(|| anyhow!("missing config key {key:?}"))?;
        if !p.exists() {
            bail!("input {key} = {} does not exist", p.display());
        }
        Ok(p)
    }

    pub fn optional_input(&self, key: &str) -> Result<Option<PathBuf>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.input(key).map(Some),
        }
    }

    /// Randomness never falls back to the clock, so the seed is mandatory.
    pub fn seed(&self) -> Result<u64> {
        self.parse_required("seed")
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.path("out").ok_or_else(|| anyhow!("missing config key \"out\""))?;
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(dir)
    }

    /// Rejects keys outside `allowed`, which catches misspelled options.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        let unknown: Vec<&str> =
            self.values.keys().map(String::as_str).filter(|k| !allowed.contains(k) && !COMMON.contains(k)).collect();
        if !unknown.is_empty() {
            bail!("unknown config keys: {}", unknown.join(", "));
        }
        Ok(())
    }
}

const COMMON: [&str; 2] = ["seed", "out"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let cfg =
            RunConfig::parse("# run\nseed = 7\n\ntrain = data/train.jsonl\nabs=/tmp/x\n", Some(Path::new("/cfg")))
                .unwrap();
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.path("train").unwrap(), Path::new("/cfg/data/train.jsonl"));
        assert_eq!(cfg.path("abs").unwrap(), Path::new("/tmp/x"));
        assert!(cfg.check_keys(&["train"]).is_err());
        assert!(cfg.check_keys(&["train", "abs"]).is_ok());
    }

    #[test]
    fn overrides_and_errors() {
        let mut cfg = RunConfig::parse("epochs = 3", None).unwrap();
        cfg.set_pair("epochs=5").unwrap();
        assert_eq!(cfg.parse_or("epochs", 1usize).unwrap(), 5);
        assert!(cfg.seed().is_err());
        assert!(cfg.parse_or::<usize>("missing", 2).unwrap() == 2);
        cfg.set("epochs", "many");
        assert!(cfg.parse_or::<usize>("epochs", 1).is_err());
        assert!(RunConfig::parse("a = 1\na = 2", None).is_err());
        assert!(RunConfig::parse("no equals sign", None).is_err());
        assert_eq!(RunConfig::parse("k = 1, 5,10", None).unwrap().list("k").unwrap(), ["1", "5", "10"]);
    }
}
