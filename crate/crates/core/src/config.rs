//! Run configuration shared by the command-line subcommands.
//!
//! A configuration file is TOML with the keys of [`ConfigFile`]. Command-line
//! flags take precedence over file values; unset keys fall back to defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::builder::{BenchmarkVersion, Structure};
use crate::error::{Error, Result};
use crate::lexicon::ModifierCategory;

/// Default environment variable holding the judge endpoint's bearer token.
pub const DEFAULT_TOKEN_ENV: &str = "SQLBIAS_JUDGE_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JudgeMode {
    Llm,
    Lexicon,
    Fixture,
}

impl JudgeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            JudgeMode::Llm => "llm",
            JudgeMode::Lexicon => "lexicon",
            JudgeMode::Fixture => "fixture",
        }
    }
}

impl FromStr for JudgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "llm" => Ok(JudgeMode::Llm),
            "lexicon" => Ok(JudgeMode::Lexicon),
            "fixture" => Ok(JudgeMode::Fixture),
            _ => Err(Error::Config(format!("unknown judge mode `{s}`"))),
        }
    }
}

/// Unvalidated settings, as read from a file or collected from flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schemas: Option<PathBuf>,
    pub examples: Option<Vec<PathBuf>>,
    pub out: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    /// `label=path` or a bare path labelled by its file stem.
    pub predictions: Option<Vec<String>>,
    /// Predictions on the unperturbed examples, same label syntax.
    pub original_predictions: Option<Vec<String>>,
    pub judgments: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub fixture: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub judge_mode: Option<String>,
    pub versions: Option<Vec<String>>,
    pub modifiers: Option<Vec<String>>,
    pub structures: Option<Vec<String>>,
    pub jobs: Option<usize>,
    pub fail_over: Option<f64>,
    pub seed: Option<u64>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub token_env: Option<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overridden_by(self, over: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            schemas, examples, out, benchmark, predictions, original_predictions, judgments, cache, fixture,
            lexicon, judge_mode, versions, modifiers, structures, jobs, fail_over, seed, endpoint, model, token_env
        )
    }
}

/// A labelled prediction file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSource {
    pub label: String,
    pub path: PathBuf,
}

impl FromStr for PredictionSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (label, path) = match s.split_once('=') {
            Some((label, path)) => (label.trim().to_string(), PathBuf::from(path.trim())),
            None => {
                let path = PathBuf::from(s.trim());
                let label = path
                    .file_stem()
                    .map(|x| x.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (label, path)
            }
        };
        if label.is_empty() || path.as_os_str().is_empty() {
            return Err(Error::Config(format!("bad prediction source `{s}`")));
        }
        Ok(PredictionSource { label, path })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmEndpoint {
    pub url: String,
    pub model: Option<String>,
    pub token_env: String,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schemas: Option<PathBuf>,
    pub examples: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub predictions: Vec<PredictionSource>,
    pub original_predictions: Vec<PredictionSource>,
    pub judgments: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub fixture: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub judge_mode: JudgeMode,
    pub versions: Vec<BenchmarkVersion>,
    pub modifiers: Vec<ModifierCategory>,
    pub structures: Vec<Structure>,
    pub jobs: Option<usize>,
    pub fail_over: Option<f64>,
    /// Reserved; no current mode samples.
    pub seed: Option<u64>,
    pub endpoint: Option<LlmEndpoint>,
}

fn parse_list<T>(items: Option<Vec<String>>, default: &[T]) -> Result<Vec<T>>
where
    T: FromStr<Err = Error> + Clone + PartialEq,
{
    let Some(items) = items else {
        return Ok(default.to_vec());
    };
    let mut out: Vec<T> = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        let v = item.parse()?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty list".into()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let judge_mode = file.judge_mode.as_deref().map(str::parse).transpose()?.unwrap_or(JudgeMode::Fixture);
        let endpoint = file.endpoint.map(|url| LlmEndpoint {
            url,
            model: file.model.clone(),
            token_env: file.token_env.clone().unwrap_or_else(|| DEFAULT_TOKEN_ENV.to_string()),
        });
        if judge_mode == JudgeMode::Llm && endpoint.is_none() {
            return Err(Error::Config("judge mode llm requires an endpoint".into()));
        }
        if file.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if let Some(t) = file.fail_over {
            if !(0.0..=100.0).contains(&t) {
                return Err(Error::Config(format!("fail-over threshold {t} is outside 0..=100")));
            }
        }
        let sources = |items: Option<Vec<String>>| -> Result<Vec<PredictionSource>> {
            items.unwrap_or_default().iter().map(|s| s.parse()).collect()
        };
        let mut structures = parse_list(file.structures, &[Structure::Attributive])?;
        structures.sort();
        let mut versions = parse_list(file.versions, &BenchmarkVersion::ALL)?;
        versions.sort();
        let mut modifiers = parse_list(file.modifiers, &ModifierCategory::ALL)?;
        modifiers.sort();
        Ok(RunConfig {
            schemas: file.schemas,
            examples: file.examples.unwrap_or_default(),
            out: file.out,
            benchmark: file.benchmark,
            predictions: sources(file.predictions)?,
            original_predictions: sources(file.original_predictions)?,
            judgments: file.judgments,
            cache: file.cache,
            fixture: file.fixture,
            lexicon: file.lexicon,
            judge_mode,
            versions,
            modifiers,
            structures,
            jobs: file.jobs,
            fail_over: file.fail_over,
            seed: file.seed,
            endpoint,
        })
    }

    pub fn require<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| Error::Config(format!("missing required setting `{name}`")))
    }

    /// A path that must exist for reading.
    pub fn require_path<'a>(value: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
        let path = Self::require(value, name)?;
        if !path.exists() {
            return Err(Error::Config(format!("{name} path {} does not exist", path.display())));
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(ConfigFile::default()).unwrap();
        assert_eq!(c.judge_mode, JudgeMode::Fixture);
        assert_eq!(c.versions, BenchmarkVersion::ALL);
        assert_eq!(c.modifiers, ModifierCategory::ALL);
        assert_eq!(c.structures, [Structure::Attributive]);
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse(
            "schemas = \"a.json\"\nversions = [\"v1\", \"v2\"]\njudge_mode = \"lexicon\"\n# comment\njobs = 2\n",
        )
        .unwrap();
        let flags = ConfigFile {
            versions: Some(vec!["v3".into()]),
            ..ConfigFile::default()
        };
        let c = RunConfig::resolve(file.overridden_by(flags)).unwrap();
        assert_eq!(c.versions, [BenchmarkVersion::V3]);
        assert_eq!(c.schemas, Some(PathBuf::from("a.json")));
        assert_eq!(c.judge_mode, JudgeMode::Lexicon);
        assert_eq!(c.jobs, Some(2));
    }

    #[test]
    fn comma_lists_and_duplicates() {
        let c = RunConfig::resolve(ConfigFile {
            versions: Some(vec!["v2,v1".into(), "v1".into()]),
            modifiers: Some(vec!["comparative".into()]),
            ..ConfigFile::default()
        })
        .unwrap();
        assert_eq!(c.versions, [BenchmarkVersion::V1, BenchmarkVersion::V2]);
        assert_eq!(c.modifiers, [ModifierCategory::Comparative]);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ConfigFile::parse("unknown = 1"), Err(Error::Config(_))));
        let bad = |f: ConfigFile| matches!(RunConfig::resolve(f), Err(Error::Config(_)));
        assert!(bad(ConfigFile {
            judge_mode: Some("llm".into()),
            ..ConfigFile::default()
        }));
        assert!(bad(ConfigFile {
            versions: Some(vec!["v4".into()]),
            ..ConfigFile::default()
        }));
        assert!(bad(ConfigFile {
            jobs: Some(0),
            ..ConfigFile::default()
        }));
        assert!(bad(ConfigFile {
            fail_over: Some(120.0),
            ..ConfigFile::default()
        }));
    }

    #[test]
    fn prediction_labels() {
        let p: PredictionSource = "picard=out/p.txt".parse().unwrap();
        assert_eq!((p.label.as_str(), p.path.as_path()), ("picard", Path::new("out/p.txt")));
        let p: PredictionSource = "runs/ratsql.sql".parse().unwrap();
        assert_eq!(p.label, "ratsql");
        assert!("=x".parse::<PredictionSource>().is_err());
    }
}
