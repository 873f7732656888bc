//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Keys may appear once.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    source: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: source.to_string(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }
        Ok(KvFile {
            source: source.to_string(),
            entries,
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fail on any key not in `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !known.contains(&key.as_str()) {
                return Err(self.error(*line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn error(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.source.clone(),
            line,
            message,
        }
    }

    /// Error attributed to the line holding `key`.
    pub fn key_error(&self, key: &str, message: impl Into<String>) -> Error {
        let line = self.entries.get(key).map_or(0, |(l, _)| *l);
        self.error(line, format!("{key}: {}", message.into()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.key_error(key, format!("cannot parse `{v}`"))),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse()
                        .map_err(|_| self.key_error(key, format!("cannot parse `{item}`")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Comma-separated `label:value` pairs.
    pub fn pairs(&self, key: &str) -> Result<Option<Vec<(String, f64)>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|item| {
                    let (label, value) = item.split_once(':').ok_or_else(|| {
                        self.key_error(key, format!("expected `label:probability`, found `{}`", item.trim()))
                    })?;
                    let value = value.trim();
                    let p = value
                        .parse()
                        .map_err(|_| self.key_error(key, format!("cannot parse `{value}`")))?;
                    Ok((label.trim().to_string(), p))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_lists_and_pairs() {
        let kv = KvFile::parse(
            "# header\ncount = 12\nxs = 1, 2,3 # trailing\nmix = a:0.25, b:0.75\n",
            "t",
        )
        .unwrap();
        assert_eq!(kv.get::<u32>("count").unwrap(), Some(12));
        assert_eq!(kv.list::<u32>("xs").unwrap(), Some(vec![1, 2, 3]));
        assert_eq!(
            kv.pairs("mix").unwrap(),
            Some(vec![("a".into(), 0.25), ("b".into(), 0.75)])
        );
        assert_eq!(kv.get::<u32>("missing").unwrap(), None);
        assert!(kv.reject_unknown(&["count", "xs"]).is_err());
        assert!(kv.reject_unknown(&["count", "xs", "mix"]).is_ok());
    }

    #[test]
    fn errors_name_the_line() {
        let err = KvFile::parse("a = 1\na = 2\n", "t").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let kv = KvFile::parse("\nn = x\n", "t").unwrap();
        let err = kv.get::<u32>("n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("n:"), "{err}");
    }
}
