//! Flat `key=value` config files and flag/config/default resolution.
//!
//! Keys mirror the long flag names (`max-len`, `k1`, `depth`, ...). Blank
//! lines and lines starting with `#` are ignored. Precedence is
//! command-line flag, then config file, then built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "format",
    "stopwords",
    "index",
    "universe",
    "out",
    "out-dir",
    "audit-dir",
    "groups",
    "compare",
    "max-len",
    "min-df",
    "weighting",
    "max-queries",
    "model",
    "k1",
    "b",
    "measure",
    "c",
    "beta",
    "depth",
    "workers",
    "normalize",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::input(format!("{}:{}: expected key=value", origin.display(), i + 1))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::input(format!(
                    "{}:{}: unknown config key \"{key}\"",
                    origin.display(),
                    i + 1
                )));
            }
            values.insert(key.to_owned(), value.trim().to_owned());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves settings for one command and records the effective values.
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    effective: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Resolver {
            file,
            effective: BTreeMap::new(),
        }
    }

    /// Raw string from flag or config file, if either sets it.
    fn raw(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.file.get(key).map(str::to_owned))
    }

    pub fn optional<T>(&mut self, flag: Option<String>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(flag, key) {
            None => Ok(None),
            Some(raw) => {
                let value = raw
                    .parse::<T>()
                    .map_err(|e| CliError::input(format!("invalid value \"{raw}\" for {key}: {e}")))?;
                self.effective.insert(key.to_owned(), raw);
                Ok(Some(value))
            }
        }
    }

    pub fn value<T>(&mut self, flag: Option<String>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.optional(flag, key)? {
            Some(v) => Ok(v),
            None => {
                self.effective.insert(key.to_owned(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, flag: Option<String>, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.optional(flag, key)?
            .ok_or_else(|| CliError::input(format!("missing required setting --{key}")))
    }

    /// Drops a key from the echoed configuration (e.g. settings that must
    /// not influence output bytes).
    pub fn forget(&mut self, key: &str) {
        self.effective.remove(key);
    }

    pub fn into_effective(self) -> BTreeMap<String, String> {
        self.effective
    }
}
