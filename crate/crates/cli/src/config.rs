//! Flat `key = value` config files. Keys mirror the long flag names with
//! `-` or `_` accepted interchangeably; `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key = value", n + 1)))?;
            let key = k.trim().replace('_', "-");
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Invalid(format!("config key `{key}` given twice")));
            }
        }
        Ok(Self { values })
    }

    /// Fails on any key outside `allowed`.
    pub fn restrict(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::Invalid(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::Invalid(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| parse_list(v).map_err(|e| CliError::Invalid(format!("config key `{key}`: {e}"))))
            .transpose()
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

/// Flag value if given, else the config value, else `None`.
pub fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_separators() {
        let c = ConfigFile::parse("# sweep\nm_values = 2, 3\nalpha-count=5 # trailing\n\n").unwrap();
        assert_eq!(c.get_list::<usize>("m-values").unwrap(), Some(vec![2, 3]));
        assert_eq!(c.get::<usize>("alpha-count").unwrap(), Some(5));
        assert_eq!(c.get::<usize>("n").unwrap(), None);
        assert!(c.restrict(&["m-values", "alpha-count"]).is_ok());
        assert!(c.restrict(&["m-values"]).is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("m 2").is_err());
        assert!(ConfigFile::parse("m = 2\nm = 3").is_err());
        assert!(ConfigFile::parse("m = two").unwrap().get::<usize>("m").is_err());
    }

    #[test]
    fn flags_win() {
        let c = ConfigFile::parse("m = 3").unwrap();
        assert_eq!(pick(Some(2usize), &c, "m").unwrap(), Some(2));
        assert_eq!(pick(None::<usize>, &c, "m").unwrap(), Some(3));
    }
}
