use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data_eval::Task;
use crate::embed_aug::{AugmentPolicy, DEFAULT_MIN_COS, DEFAULT_TOP_N};
use crate::error::{Error, Result};
use crate::models::{Architecture, EnsembleWeights, DEFAULT_MAX_LEN};
use crate::optim::{OptimizerKind, TrainConfig};
use crate::textprep::{CleanConfig, Language};

/// Every key the configuration accepts, as `section.key`.
pub const KEYS: &[&str] = &[
    "data.task",
    "data.language",
    "data.max_len",
    "data.val_fraction",
    "paths.train",
    "paths.val",
    "paths.input",
    "paths.embeddings",
    "paths.contextual",
    "paths.checkpoint",
    "paths.history",
    "paths.output",
    "paths.synonyms",
    "paths.predictions",
    "paths.gold",
    "paths.report",
    "model.architecture",
    "model.train_embeddings",
    "model.second_rnn_bidirectional",
    "model.w_bigru",
    "model.w_cnn",
    "train.epochs",
    "train.batch_size",
    "train.lr",
    "train.l2_lambda",
    "train.patience",
    "train.lr_reduction_factor",
    "train.min_lr",
    "train.optimizer",
    "train.seed",
    "clean.urls",
    "clean.mentions",
    "clean.punctuation",
    "clean.elongation",
    "clean.emoji",
    "clean.digits",
    "clean.foreign_script",
    "clean.normalize_arabic",
    "augment.top_n",
    "augment.min_cos",
    "augment.policy",
];

#[derive(Debug, Clone, PartialEq)]
struct Setting {
    value: String,
    origin: String,
}

/// Raw `section.key → value` settings with where each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, Setting>,
}

impl Settings {
    /// Parses `key = value` lines grouped under `[section]` headers. `#` and
    /// `;` start comment lines.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut s = Settings::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let origin = format!("{source_name}:{}", i + 1);
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("{origin}: unterminated section header")))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(Error::Config(format!("{origin}: invalid section name {name:?}")));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}: expected `key = value`")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("{origin}: empty key")));
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            if let Some(prev) = s.values.get(&key) {
                return Err(Error::Config(format!("{origin}: {key} already set at {}", prev.origin)));
            }
            s.values.insert(
                key,
                Setting {
                    value: v.trim().to_string(),
                    origin,
                },
            );
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Sets `key`, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: impl Into<String>, origin: impl Into<String>) {
        self.values.insert(
            key.to_string(),
            Setting {
                value: value.into(),
                origin: origin.into(),
            },
        );
    }

    /// Parses a `section.key=value` override.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {assignment:?}")))?;
        self.set(k.trim(), v.trim(), format!("--set {}", k.trim()));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.value.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Config(format!("{}: invalid value {:?} for {key}: {e}", s.origin, s.value))),
        }
    }

    fn check_known(&self) -> Result<()> {
        for (k, s) in &self.values {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("{}: unknown setting {k}", s.origin)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Single(Architecture),
    Ensemble,
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ensemble" {
            Ok(ModelChoice::Ensemble)
        } else {
            s.parse().map(ModelChoice::Single)
        }
    }
}

fn parse_policy(s: &str) -> Result<AugmentPolicy> {
    if s == "replace_all" {
        return Ok(AugmentPolicy::ReplaceAll);
    }
    s.strip_prefix("max:")
        .and_then(|k| k.parse::<usize>().ok())
        .filter(|&k| k > 0)
        .map(AugmentPolicy::PerTweetMax)
        .ok_or_else(|| Error::Config(format!("augment policy must be replace_all or max:K, got {s:?}")))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub contextual: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub language: Language,
    pub max_len: usize,
    pub val_fraction: f64,
    pub paths: Paths,
    pub model: ModelChoice,
    pub train_embeddings: bool,
    pub second_rnn_bidirectional: bool,
    pub weights: EnsembleWeights,
    pub train: TrainConfig,
    pub clean: CleanConfig,
    pub top_n: usize,
    pub min_cos: f64,
    pub policy: AugmentPolicy,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        s.check_known()?;
        let task = s.parsed::<Task>("data.task")?.unwrap_or(Task::A);
        let language = s.parsed::<Language>("data.language")?.unwrap_or(Language::English);
        let model = s.parsed::<ModelChoice>("model.architecture")?.unwrap_or(ModelChoice::Single(Architecture::KeisBigru));
        let mut train = match model {
            ModelChoice::Single(Architecture::BertBiHead) => TrainConfig::contextual(),
            _ => TrainConfig::default(),
        };
        macro_rules! over {
            ($field:expr, $key:literal) => {
                if let Some(v) = s.parsed($key)? {
                    $field = v;
                }
            };
        }
        over!(train.epochs, "train.epochs");
        over!(train.batch_size, "train.batch_size");
        over!(train.lr, "train.lr");
        over!(train.l2_lambda, "train.l2_lambda");
        over!(train.patience, "train.patience");
        over!(train.lr_reduction_factor, "train.lr_reduction_factor");
        over!(train.min_lr, "train.min_lr");
        over!(train.seed, "train.seed");
        if let Some(o) = s.get("train.optimizer") {
            train.optimizer = match o {
                "amsgrad" => OptimizerKind::Amsgrad,
                "adam" => OptimizerKind::Adam,
                _ => return Err(Error::Config(format!("optimizer must be amsgrad or adam, got {o:?}"))),
            };
        }
        train.validate()?;

        let mut clean = CleanConfig::for_language(language);
        over!(clean.urls, "clean.urls");
        over!(clean.mentions, "clean.mentions");
        over!(clean.punctuation, "clean.punctuation");
        over!(clean.elongation, "clean.elongation");
        over!(clean.emoji, "clean.emoji");
        over!(clean.digits, "clean.digits");
        over!(clean.foreign_script, "clean.foreign_script");
        over!(clean.normalize_arabic, "clean.normalize_arabic");
        clean.validate()?;

        let defaults = EnsembleWeights::default();
        let w_bigru = s.parsed::<f64>("model.w_bigru")?;
        let w_cnn = s.parsed::<f64>("model.w_cnn")?;
        let weights = match (w_bigru, w_cnn) {
            (None, None) => defaults,
            (a, b) => {
                let a = a.unwrap_or_else(|| 1.0 - b.unwrap());
                let b = b.unwrap_or(1.0 - a);
                EnsembleWeights::new(a, b).map_err(|e| Error::Config(e.to_string()))?
            }
        };

        let path = |k: &str| s.get(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        let paths = Paths {
            train: path("paths.train"),
            val: path("paths.val"),
            input: path("paths.input"),
            embeddings: path("paths.embeddings"),
            contextual: path("paths.contextual"),
            checkpoint: path("paths.checkpoint"),
            history: path("paths.history"),
            output: path("paths.output"),
            synonyms: path("paths.synonyms"),
            predictions: path("paths.predictions"),
            gold: path("paths.gold"),
            report: path("paths.report"),
        };

        let max_len = s.parsed::<usize>("data.max_len")?.unwrap_or(DEFAULT_MAX_LEN);
        if max_len == 0 {
            return Err(Error::Config("data.max_len must be at least 1".into()));
        }
        let val_fraction = s.parsed::<f64>("data.val_fraction")?.unwrap_or(0.2);
        if !(val_fraction > 0.0 && val_fraction < 1.0) {
            return Err(Error::Config(format!("data.val_fraction must lie in (0, 1), got {val_fraction}")));
        }
        let top_n = s.parsed::<usize>("augment.top_n")?.unwrap_or(DEFAULT_TOP_N);
        let min_cos = s.parsed::<f64>("augment.min_cos")?.unwrap_or(DEFAULT_MIN_COS);
        if top_n == 0 || !(0.0..=1.0).contains(&min_cos) {
            return Err(Error::Config("augment.top_n must be ≥ 1 and augment.min_cos in [0, 1]".into()));
        }
        let policy = match s.get("augment.policy") {
            Some(p) => parse_policy(p)?,
            None => AugmentPolicy::ReplaceAll,
        };
        Ok(RunConfig {
            task,
            language,
            max_len,
            val_fraction,
            paths,
            model,
            train_embeddings: s.parsed("model.train_embeddings")?.unwrap_or(false),
            second_rnn_bidirectional: s.parsed("model.second_rnn_bidirectional")?.unwrap_or(true),
            weights,
            seed: train.seed,
            train,
            clean,
            top_n,
            min_cos,
            policy,
        })
    }

    /// The path for `key`, which the command cannot run without.
    pub fn require<'a>(&self, value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("{key} is required for this command")))
    }

    /// Like [`RunConfig::require`], and the file must already exist.
    pub fn require_existing<'a>(&self, value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        let p = self.require(value, key)?;
        if !p.is_file() {
            return Err(Error::Config(format!("{key}: {} does not exist", p.display())));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_overrides() {
        let mut s = Settings::parse(
            "# run\n[data]\ntask = C\nlanguage = greek\n\n[train]\nepochs = 5\nlr = 0.001\n",
            "run.cfg",
        )
        .unwrap();
        s.set_assignment("train.epochs=7").unwrap();
        let c = RunConfig::from_settings(&s).unwrap();
        assert_eq!((c.task, c.language, c.train.epochs, c.train.lr), (Task::C, Language::Greek, 7, 0.001));
        assert_eq!(c.train.batch_size, 128);
        assert!(!c.clean.digits);
    }

    #[test]
    fn errors_carry_location() {
        let err = Settings::parse("[train]\nepochs\n", "a.cfg").unwrap_err();
        assert!(err.to_string().contains("a.cfg:2"), "{err}");
        let s = Settings::parse("[train]\nepochs = many\n", "a.cfg").unwrap();
        let err = RunConfig::from_settings(&s).unwrap_err();
        assert!(err.to_string().contains("a.cfg:2"), "{err}");
        let s = Settings::parse("[train]\nepoch = 3\n", "a.cfg").unwrap();
        assert!(RunConfig::from_settings(&s).unwrap_err().to_string().contains("unknown setting"));
        assert!(Settings::parse("a = 1\na = 2\n", "a.cfg").is_err());
    }

    #[test]
    fn stated_defaults() {
        let c = RunConfig::from_settings(&Settings::default()).unwrap();
        assert_eq!((c.train.epochs, c.train.batch_size, c.train.lr, c.train.l2_lambda), (20, 128, 0.01, 0.01));
        assert_eq!(c.weights, EnsembleWeights::default());
        assert_eq!(c.max_len, 60);
        let mut s = Settings::default();
        s.set("model.architecture", "bert_bi_head", "test");
        let c = RunConfig::from_settings(&s).unwrap();
        assert_eq!((c.train.batch_size, c.train.lr, c.train.optimizer), (16, 2e-5, OptimizerKind::Adam));
    }

    #[test]
    fn arabic_rules_only_for_arabic() {
        let s = Settings::parse("[clean]\ndigits = true\n", "c").unwrap();
        assert!(RunConfig::from_settings(&s).is_err());
        let s = Settings::parse("[data]\nlanguage = arabic\n", "c").unwrap();
        assert!(RunConfig::from_settings(&s).unwrap().clean.digits);
    }
}
