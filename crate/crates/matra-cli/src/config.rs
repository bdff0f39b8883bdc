//! Flat `key = value` config files merged under command-line flags.
//!
//! Keys are the long flag names without the leading dashes. Values from
//! the file only fill flags the user did not pass — flags always win.
//! Unknown keys are rejected so a typo cannot silently change a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use matra_core::{MatraError, Result};

/// Parsed config file: key → raw value string.
#[derive(Debug, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    /// Parse `path`. Each non-blank, non-`#` line must be `key = value`.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let mut entries = BTreeMap::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                MatraError::parse(path, line_no, "expected `key = value`")
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(MatraError::parse(path, line_no, "empty key"));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(MatraError::parse(
                    path,
                    line_no,
                    format!("key {key:?} given twice"),
                ));
            }
        }
        Ok(ConfigMap { entries })
    }

    /// Load `path` when given, otherwise an empty map.
    pub fn load_optional(path: Option<&PathBuf>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    /// Reject keys outside `allowed` — the keys this subcommand reads.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(MatraError::invalid(format!(
                    "unknown config key {key:?}; this subcommand accepts: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Flag value if passed, else the config value, else `None`.
    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.raw(key).map(PathBuf::from))
    }

    /// Like [`ConfigMap::path`] but the value must come from somewhere.
    pub fn required_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        self.path(flag, key)
            .ok_or_else(|| MatraError::invalid(format!("missing --{key} (flag or config key)")))
    }

    /// Flag string if passed, else the config value.
    pub fn string(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.raw(key).map(str::to_string))
    }

    /// Parse a numeric (or other `FromStr`) setting; flag wins.
    pub fn parse<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                MatraError::invalid(format!("config key {key} has unparseable value {raw:?}"))
            }),
        }
    }

    /// Path list: the repeatable flag when any were passed, else a
    /// comma-separated config value.
    pub fn paths(&self, flag: Vec<PathBuf>, key: &str) -> Vec<PathBuf> {
        if !flag.is_empty() {
            return flag;
        }
        match self.raw(key) {
            None => Vec::new(),
            Some(raw) => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(PathBuf::from)
                .collect(),
        }
    }

    /// Boolean setting: a passed flag forces true; otherwise the config
    /// value must be `true` or `false`.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(MatraError::invalid(format!(
                "config key {key} must be true or false, got {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_comments_blanks_and_spacing_variants() {
        let f = write_config("# header\n\nepochs = 20\nlr=0.01\n  seed =  7  \n");
        let cfg = ConfigMap::load(f.path()).unwrap();
        assert_eq!(cfg.parse::<usize>(None, "epochs").unwrap(), Some(20));
        assert_eq!(cfg.parse::<f64>(None, "lr").unwrap(), Some(0.01));
        assert_eq!(cfg.parse::<u64>(None, "seed").unwrap(), Some(7));
    }

    #[test]
    fn flag_wins_over_config_value() {
        let f = write_config("epochs = 20\n");
        let cfg = ConfigMap::load(f.path()).unwrap();
        assert_eq!(cfg.parse(Some(5usize), "epochs").unwrap(), Some(5));
    }

    #[test]
    fn equals_in_value_is_preserved() {
        let f = write_config("out = dir/name=odd.tsv\n");
        let cfg = ConfigMap::load(f.path()).unwrap();
        assert_eq!(
            cfg.path(None, "out"),
            Some(PathBuf::from("dir/name=odd.tsv"))
        );
    }

    #[test]
    fn rejects_missing_equals_duplicate_and_unknown_keys() {
        let f = write_config("just-a-word\n");
        assert!(ConfigMap::load(f.path()).is_err());

        let f = write_config("a = 1\na = 2\n");
        assert!(ConfigMap::load(f.path()).is_err());

        let f = write_config("epochs = 20\n");
        let cfg = ConfigMap::load(f.path()).unwrap();
        assert!(cfg.check_keys(&["corpus", "out"]).is_err());
        assert!(cfg.check_keys(&["epochs"]).is_ok());
    }

    #[test]
    fn path_list_splits_on_commas_and_flags_win() {
        let f = write_config("scores = a.tsv, b.tsv,c.tsv\n");
        let cfg = ConfigMap::load(f.path()).unwrap();
        assert_eq!(
            cfg.paths(Vec::new(), "scores"),
            vec![
                PathBuf::from("a.tsv"),
                PathBuf::from("b.tsv"),
                PathBuf::from("c.tsv")
            ]
        );
        assert_eq!(
            cfg.paths(vec![PathBuf::from("only.tsv")], "scores"),
            vec![PathBuf::from("only.tsv")]
        );
        assert!(cfg.paths(Vec::new(), "absent").is_empty());
    }

    #[test]
    fn switch_accepts_only_booleans_and_flag_forces_true() {
        let f = write_config("batch-norm = true\npooled = maybe\n");
        let cfg = ConfigMap::load(f.path()).unwrap();
        assert!(cfg.switch(false, "batch-norm").unwrap());
        assert!(cfg.switch(false, "missing-key").unwrap() == false);
        assert!(cfg.switch(true, "pooled").unwrap());
        assert!(cfg.switch(false, "pooled").is_err());
    }

    #[test]
    fn missing_required_path_names_the_flag() {
        let cfg = ConfigMap::default();
        let err = cfg.required_path(None, "corpus").unwrap_err();
        assert!(err.to_string().contains("--corpus"));
    }
}
