//! `key = value` text files with optional repeated `[section]` headers.

use crate::error::{FcsError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    /// `None` for the entries before the first header.
    pub name: Option<String>,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| {
            FcsError::Parse(format!(
                "missing key `{key}` in section [{}]",
                self.name.as_deref().unwrap_or("global")
            ))
        })
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_value(key, v),
        }
    }

    pub fn parse_req<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        parse_value(key, self.require(key)?)
    }
}

pub fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| FcsError::Parse(format!("bad value for `{key}`: {v:?}")))
}

pub fn parse(text: &str) -> Result<Vec<Section>> {
    let mut sections = vec![Section::default()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push(Section {
                name: Some(name.trim().to_string()),
                entries: Vec::new(),
            });
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            FcsError::Parse(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        sections
            .last_mut()
            .expect("at least the global section")
            .entries
            .push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_repeat() {
        let s = parse("seed = 3\n# c\n[mask]\nkind = pfrac\n[mask]\nkind = cartesian1d\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].get("seed"), Some("3"));
        assert_eq!(s[2].name.as_deref(), Some("mask"));
        assert_eq!(s[2].get("kind"), Some("cartesian1d"));
        assert!(parse("oops").is_err());
        assert_eq!(s[0].parse_or("missing", 5u32).unwrap(), 5);
        assert!(s[1].parse_req::<u32>("kind").is_err());
    }
}
