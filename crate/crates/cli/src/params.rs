//! `k=v,k=v` parameter lists.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Parameters with defaults applied. Reading a key marks it used so unknown
/// keys can be reported.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params {
    values: BTreeMap<String, String>,
    used: std::cell::RefCell<Vec<String>>,
}

impl Params {
    pub fn parse(text: &str) -> CliResult<Params> {
        let mut values = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let Some((k, v)) = item.split_once('=') else {
                return Err(CliError::Usage(format!("parameter `{item}` is not k=v")));
            };
            if values
                .insert(k.trim().to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(CliError::Usage(format!("parameter `{k}` given twice")));
            }
        }
        Ok(Params {
            values,
            used: Default::default(),
        })
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        self.used.borrow_mut().push(key.to_string());
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("parameter {key}: cannot parse `{v}`"))),
        }
    }

    pub fn text(&self, key: &str, default: &str) -> String {
        self.used.borrow_mut().push(key.to_string());
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    /// Fails on any key that no `get` or `text` call asked for.
    pub fn finish(&self) -> CliResult<()> {
        let used = self.used.borrow();
        match self.values.keys().find(|k| !used.contains(k)) {
            Some(k) => Err(CliError::Usage(format!("unknown parameter `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Canonical form, with keys in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Canonical(pub BTreeMap<String, String>);

impl Canonical {
    pub fn set(&mut self, key: &str, v: impl fmt::Display) -> &mut Self {
        self.0.insert(key.to_string(), v.to_string());
        self
    }
}

impl fmt::Display for Canonical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_flags_unknown_keys() {
        let p = Params::parse("l=8, f=full").unwrap();
        assert_eq!(p.get("l", 16usize).unwrap(), 8);
        assert!(p.finish().is_err());
        assert_eq!(p.text("f", "12"), "full");
        assert!(p.finish().is_ok());
        assert_eq!(p.get("w", 4u32).unwrap(), 4);
    }

    #[test]
    fn rejects_malformed_lists() {
        assert!(Params::parse("l").is_err());
        assert!(Params::parse("l=1,l=2").is_err());
        assert!(Params::parse("l=x").unwrap().get("l", 0u32).is_err());
    }

    #[test]
    fn canonical_form_is_sorted() {
        let mut c = Canonical::default();
        c.set("w", 4).set("l", 16);
        assert_eq!(c.to_string(), "l=16,w=4");
    }
}
