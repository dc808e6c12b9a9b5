//! `key = value` run configuration files. Flags given on the command line take
//! precedence over file values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const KEYS: [&str; 11] = ["a", "b", "c", "e", "threads", "eps", "seed", "invert", "alpha", "dt", "sigma"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with('[') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`", n + 1);
            };
            let k = k.trim().to_string();
            if !KEYS.contains(&k.as_str()) {
                bail!("config line {}: unknown key `{k}` (known: {})", n + 1, KEYS.join(", "));
            }
            values.insert(k, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// The flag value if given, else the file value, else `None`.
    pub fn get<T: std::str::FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| anyhow::anyhow!("config value for `{key}` is not valid: {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let c = ConfigFile::parse("# run\na = 0.25\nb=0.1 # inline\n\n").unwrap();
        assert_eq!(c.get::<f64>("a", None).unwrap(), Some(0.25));
        assert_eq!(c.get::<f64>("a", Some(0.2)).unwrap(), Some(0.2));
        assert_eq!(c.get::<f64>("c", None).unwrap(), None);
    }

    #[test]
    fn unknown_key_and_bad_value_are_errors() {
        assert!(ConfigFile::parse("zeta = 1").is_err());
        assert!(ConfigFile::parse("a 1").is_err());
        let c = ConfigFile::parse("a = x").unwrap();
        assert!(c.get::<f64>("a", None).is_err());
    }
}
