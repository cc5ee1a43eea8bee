//! Merges command-line flags with an optional `key = value` file. Flags win;
//! keys use the long flag names (`omega-min` or `omega_min`).

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use swingdyn::config::KeyValues;
use swingdyn::{Error, Result};

pub struct Settings {
    file: KeyValues,
    seen: RefCell<BTreeSet<String>>,
}

fn normalize(key: &str) -> String {
    key.replace('_', "-")
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let raw = match path {
            Some(p) => KeyValues::load(p)?,
            None => KeyValues::default(),
        };
        let mut file = KeyValues::default();
        for key in raw.keys() {
            file.insert(normalize(key), raw.get(key).unwrap_or_default());
        }
        Ok(Self {
            file,
            seen: RefCell::default(),
        })
    }

    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.seen.borrow_mut().insert(key.to_string());
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.parsed(key),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(flag, key)?.ok_or_else(|| {
            Error::Parse(format!(
                "missing required value --{key} (flag or config key)"
            ))
        })
    }

    /// A boolean switch: set by the flag, or by `key = true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(None, key)?.unwrap_or(false))
    }

    /// Comma-separated list, e.g. `2,4,6`.
    pub fn list<T: FromStr>(&self, flag: Option<String>, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(text) = self.get(flag, key)? else {
            return Ok(Vec::new());
        };
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| Error::Parse(format!("`{key}` entry `{s}`: {e}")))
            })
            .collect()
    }

    /// Fails on config keys that no option of the subcommand consumed.
    pub fn finish(&self) -> Result<()> {
        let seen = self.seen.borrow();
        let unknown: Vec<&str> = self.file.keys().filter(|k| !seen.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "unknown config key(s) for this subcommand: {}",
                unknown.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_text(text: &str) -> Settings {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("recipe.conf");
        std::fs::write(&path, text).unwrap();
        Settings::load(Some(&path)).unwrap()
    }

    #[test]
    fn flags_override_file() {
        let s = from_text("eps = 0.2\nomega_min = 0.3\n");
        assert_eq!(s.require(Some(0.1), "eps").unwrap(), 0.1);
        assert_eq!(s.require::<f64>(None, "omega-min").unwrap(), 0.3);
        assert_eq!(s.or::<f64>(None, "beta", 0.05).unwrap(), 0.05);
        s.finish().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        let s = from_text("eps = 0.2\nepsilon = 0.3\n");
        s.get::<f64>(None, "eps").unwrap();
        let err = s.finish().unwrap_err().to_string();
        assert!(err.contains("epsilon"), "{err}");
    }

    #[test]
    fn lists_and_switches() {
        let s = from_text("osc-q = 2, 4\nhomoclinic = true\n");
        assert_eq!(s.list::<u32>(None, "osc-q").unwrap(), vec![2, 4]);
        assert!(s.switch(false, "homoclinic").unwrap());
        assert!(s.list::<u32>(Some("x".into()), "rot-q").is_err());
    }
}
