//! Service configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nexus_core::ingest::harvest::HarvestConfig;
use nexus_core::portal::VocabularyTexts;
use nexus_core::text::Stopwords;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("config `{path}` is malformed: {reason}")]
    Malformed { path: String, reason: String },
    #[error("config is invalid: {0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        "config-invalid"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HarvestRetry {
    pub attempts: u32,
    pub backoff_seconds: f64,
}

impl Default for HarvestRetry {
    fn default() -> Self {
        Self { attempts: 3, backoff_seconds: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen_address: String,
    pub data_directory: PathBuf,
    /// Relative to `data_directory`.
    pub snapshot_file: PathBuf,
    pub thesaurus_files: Vec<PathBuf>,
    pub persons_files: Vec<PathBuf>,
    pub places_files: Vec<PathBuf>,
    pub concordance_files: Vec<PathBuf>,
    /// One word per line; the file stem names the language (`de.txt`).
    pub stopword_files: Vec<PathBuf>,
    pub harvest_retry: HarvestRetry,
    pub page_size_default: usize,
    pub page_size_max: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen_address: "127.0.0.1:8080".into(),
            data_directory: PathBuf::from("."),
            snapshot_file: PathBuf::from("nexus.snap"),
            thesaurus_files: vec![],
            persons_files: vec![],
            places_files: vec![],
            concordance_files: vec![],
            stopword_files: vec![],
            harvest_retry: HarvestRetry::default(),
            page_size_default: 20,
            page_size_max: 200,
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable { path: path.display().to_string(), reason: e.to_string() })
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Malformed { path: "<inline>".into(), reason: e.to_string() })
    }

    /// Reads, resolves relative paths against the file's directory, and
    /// checks the result.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut config: Self =
            toml::from_str(&read(path)?).map_err(|e| ConfigError::Malformed { path: path.display().to_string(), reason: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        config.check()?;
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_directory);
        for list in [
            &mut self.thesaurus_files,
            &mut self.persons_files,
            &mut self.places_files,
            &mut self.concordance_files,
            &mut self.stopword_files,
        ] {
            list.iter_mut().for_each(fix);
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.page_size_default == 0 || self.page_size_default > self.page_size_max {
            return Err(ConfigError::Invalid(format!(
                "pageSizeDefault {} must be between 1 and pageSizeMax {}",
                self.page_size_default, self.page_size_max
            )));
        }
        if self.harvest_retry.backoff_seconds.is_nan() || self.harvest_retry.backoff_seconds < 0.0 {
            return Err(ConfigError::Invalid("harvestRetry.backoffSeconds must be non-negative".into()));
        }
        if self.listen_address.parse::<std::net::SocketAddr>().is_err() {
            return Err(ConfigError::Invalid(format!("listenAddress `{}` is not host:port", self.listen_address)));
        }
        if self.data_directory.exists() && !self.data_directory.is_dir() {
            return Err(ConfigError::Invalid(format!("dataDirectory `{}` is not a directory", self.data_directory.display())));
        }
        for path in self.vocabulary_files() {
            if !path.is_file() {
                return Err(ConfigError::Invalid(format!("file `{}` does not exist", path.display())));
            }
        }
        Ok(())
    }

    fn vocabulary_files(&self) -> impl Iterator<Item = &PathBuf> {
        self.thesaurus_files
            .iter()
            .chain(&self.persons_files)
            .chain(&self.places_files)
            .chain(&self.concordance_files)
            .chain(&self.stopword_files)
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.data_directory.join(&self.snapshot_file)
    }

    pub fn harvest(&self) -> HarvestConfig {
        HarvestConfig {
            retries: self.harvest_retry.attempts,
            backoff_ms: (self.harvest_retry.backoff_seconds * 1000.0) as u64,
            ..HarvestConfig::default()
        }
    }

    pub fn stopwords(&self) -> Result<Stopwords, ConfigError> {
        let mut words = Stopwords::default();
        for path in &self.stopword_files {
            let language = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            words.extend_from_str(&language, &read(path)?);
        }
        Ok(words)
    }

    pub fn vocabulary(&self) -> Result<VocabularyTexts, ConfigError> {
        let all = |paths: &[PathBuf]| paths.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>();
        Ok(VocabularyTexts {
            thesauri: all(&self.thesaurus_files)?,
            persons: all(&self.persons_files)?,
            places: all(&self.places_files)?,
            concordances: all(&self.concordance_files)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ServiceConfig::parse("").unwrap();
        assert_eq!((c.page_size_default, c.page_size_max), (20, 200));
        c.check().unwrap();
    }

    #[test]
    fn default_above_max_rejected() {
        let c = ServiceConfig::parse("pageSizeDefault = 300\n").unwrap();
        assert!(c.check().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ServiceConfig::parse("pageSize = 3\n").is_err());
    }
}
