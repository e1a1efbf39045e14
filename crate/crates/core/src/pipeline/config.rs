//! Flat `key = value` configuration with dotted keys.
//!
//! ```text
//! # comment lines start with '#'
//! repos = lowRISC/ibex, openhwgroup/cva6
//! filter.hdl_extensions = .v,.sv,.svh,.vh
//! prompts.layout = {prompt}\n\n{design}
//! ```
//!
//! String values understand `\n`, `\t` and `\\`. Later assignments win, so
//! command-line overrides are applied with [`PipelineConfig::set`] after the
//! file has been read. [`PipelineConfig::entries`] renders the effective
//! configuration in the same syntax for manifests.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use crate::dataset::{CleanConfig, DEFAULT_RATIOS};
use crate::eval::PromptTemplate;
use crate::finetune::TrainConfig;
use crate::hdl::FilterConfig;
use crate::metrics::{CounterSpec, SplitMode, WordTokenizerConfig};
use crate::vcs::{RepoRef, DEFAULT_API_BASE};

/// The eight open-source processor and SoC projects mined by default.
pub const DEFAULT_REPOS: [&str; 8] = [
    "openhwgroup/cva6",
    "openhwgroup/cva5",
    "lowRISC/opentitan",
    "lowRISC/ibex",
    "openrisc/mor1kx",
    "PrincetonUniversity/openpiton",
    "pulp-platform/pulpissimo",
    "darklife/darkriscv",
];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("{key}: {msg}")]
    BadValue { key: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MineSettings {
    pub api_base: String,
    pub since: Option<DateTime<Utc>>,
    pub max_commits: Option<usize>,
    pub wait_on_rate_limit: bool,
    pub timeout_secs: f64,
}

impl Default for MineSettings {
    fn default() -> Self {
        Self { api_base: DEFAULT_API_BASE.into(), since: None, max_commits: None, wait_on_rate_limit: false, timeout_secs: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnhanceSettings {
    pub defines: BTreeMap<String, String>,
    pub include_dirs: Vec<PathBuf>,
    /// Path to `verilator`; the built-in preprocessor is used when unset.
    pub verilator: Option<PathBuf>,
    /// Command line of an external commit-message generator.
    pub message_hook: Option<String>,
    pub hook_timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSettings {
    pub train: TrainConfig,
    pub hidden: usize,
    pub prompt_len: usize,
    pub max_len: usize,
    pub model_seed: u64,
    /// Record file with train and validation samples.
    pub data: PathBuf,
}

/// Learning rate of the toy demo. The 7B rates (1.6e-4 to 6e-4) barely move
/// a 32-unit model in 200 steps; see the README for the sweep.
pub const DEMO_LEARNING_RATE: f64 = 0.05;

impl Default for DemoSettings {
    fn default() -> Self {
        Self {
            train: TrainConfig { learning_rate: DEMO_LEARNING_RATE, ..TrainConfig::default() },
            hidden: 32,
            prompt_len: 2,
            max_len: 64,
            model_seed: 0,
            data: PathBuf::from("fixtures/toy/copy_task.jsonl"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub repos: Vec<RepoRef>,
    /// HTTP cache; defaults to `<out_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub filter: FilterConfig,
    pub clean: CleanConfig,
    pub split_seed: u64,
    pub split_ratios: (f64, f64, f64),
    pub prompts: PromptTemplate,
    pub parallelism: usize,
    pub scoring: WordTokenizerConfig,
    pub mine: MineSettings,
    pub enhance: EnhanceSettings,
    pub demo: DemoSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            repos: DEFAULT_REPOS.iter().map(|r| r.parse().expect("valid default repo")).collect(),
            cache_dir: None,
            out_dir: PathBuf::from("out"),
            filter: FilterConfig::default(),
            clean: CleanConfig::default(),
            split_seed: 0,
            split_ratios: DEFAULT_RATIOS,
            prompts: PromptTemplate::default(),
            parallelism: 4,
            scoring: WordTokenizerConfig::default(),
            mine: MineSettings::default(),
            enhance: EnhanceSettings { hook_timeout_secs: 30.0, ..EnhanceSettings::default() },
            demo: DemoSettings::default(),
        }
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\t', "\\t")
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

fn join<I: IntoIterator<Item = S>, S: AsRef<str>>(items: I) -> String {
    items.into_iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Applies every assignment in `text` on top of the current values.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("expected key = value, found {line:?}"),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                ConfigError::BadValue { key, msg } => {
                    ConfigError::Syntax { path: origin.to_string(), line: i + 1, msg: format!("{key}: {msg}") }
                }
                ConfigError::UnknownKey(key) => {
                    ConfigError::Syntax { path: origin.to_string(), line: i + 1, msg: format!("unknown key {key:?}") }
                }
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |msg: String| ConfigError::BadValue { key: key.to_string(), msg };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::BadValue { key: key.to_string(), msg: format!("{v:?} is not a valid number") })
        }
        fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(ConfigError::BadValue { key: key.to_string(), msg: format!("{v:?} is not a boolean") }),
            }
        }
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "repos" => {
                self.repos = list(value).iter().map(|r| r.parse().map_err(|e| bad(format!("{e}")))).collect::<Result<_, _>>()?
            }
            "cache_dir" => self.cache_dir = opt_path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "parallelism" => {
                self.parallelism = num(key, value)?;
                if self.parallelism == 0 {
                    return Err(bad("must be positive".into()));
                }
            }
            "filter.hdl_extensions" => self.filter.hdl_extensions = list(value).into_iter().collect(),
            "filter.deny_labels" => self.filter.deny_labels = list(value).into_iter().collect(),
            "filter.allow_labels" => {
                let labels: BTreeSet<String> = list(value).into_iter().collect();
                self.filter.allow_labels = (!labels.is_empty()).then_some(labels);
            }
            "clean.min_tokens" => self.clean.min_tokens = num(key, value)?,
            "clean.max_tokens" => self.clean.max_tokens = num(key, value)?,
            "tokenizer.kind" => {
                self.clean.token_counter = match value {
                    "word_heuristic" => CounterSpec::WordHeuristic,
                    "bpe" => match &self.clean.token_counter {
                        b @ CounterSpec::Bpe { .. } => b.clone(),
                        CounterSpec::WordHeuristic => {
                            CounterSpec::Bpe { vocab: PathBuf::new(), merges: PathBuf::new(), byte_level: true }
                        }
                    },
                    _ => return Err(bad(format!("{value:?} is not word_heuristic or bpe"))),
                }
            }
            "tokenizer.vocab" | "tokenizer.merges" | "tokenizer.byte_level" => {
                let CounterSpec::Bpe { vocab, merges, byte_level } = &mut self.clean.token_counter else {
                    return Err(bad("set tokenizer.kind = bpe first".into()));
                };
                match key {
                    "tokenizer.vocab" => *vocab = PathBuf::from(value),
                    "tokenizer.merges" => *merges = PathBuf::from(value),
                    _ => *byte_level = flag(key, value)?,
                }
            }
            "split.seed" => self.split_seed = num(key, value)?,
            "split.ratios" => {
                let parts = list(value);
                let [a, b, c] = parts.as_slice() else {
                    return Err(bad("expected three comma-separated fractions".into()));
                };
                self.split_ratios = (num(key, a)?, num(key, b)?, num(key, c)?);
            }
            "prompts.localization" => self.prompts.localization_prompt = unescape(value),
            "prompts.repair" => self.prompts.repair_prompt = unescape(value),
            "prompts.layout" => self.prompts.layout = unescape(value),
            "scoring.tokens" => {
                self.scoring.split_mode = match value {
                    "code_aware" => SplitMode::CodeAware,
                    "whitespace" => SplitMode::Whitespace,
                    _ => return Err(bad(format!("{value:?} is not code_aware or whitespace"))),
                }
            }
            "scoring.strip_comments" => self.scoring.strip_comments = flag(key, value)?,
            "scoring.lowercase" => self.scoring.lowercase = flag(key, value)?,
            "mine.api_base" => self.mine.api_base = value.to_string(),
            "mine.since" => {
                self.mine.since = if value.is_empty() {
                    None
                } else {
                    Some(DateTime::parse_from_rfc3339(value).map_err(|e| bad(e.to_string()))?.with_timezone(&Utc))
                }
            }
            "mine.max_commits" => self.mine.max_commits = if value.is_empty() { None } else { Some(num(key, value)?) },
            "mine.wait_on_rate_limit" => self.mine.wait_on_rate_limit = flag(key, value)?,
            "mine.timeout_secs" => self.mine.timeout_secs = num(key, value)?,
            "enhance.defines" => {
                self.enhance.defines = list(value)
                    .into_iter()
                    .map(|d| match d.split_once('=') {
                        Some((n, v)) => (n.trim().to_string(), v.trim().to_string()),
                        None => (d, String::new()),
                    })
                    .collect()
            }
            "enhance.include_dirs" => self.enhance.include_dirs = list(value).into_iter().map(PathBuf::from).collect(),
            "enhance.verilator" => self.enhance.verilator = opt_path(value),
            "enhance.message_hook" => self.enhance.message_hook = (!value.is_empty()).then(|| value.to_string()),
            "enhance.hook_timeout_secs" => self.enhance.hook_timeout_secs = num(key, value)?,
            "demo.learning_rate" => self.demo.train.learning_rate = num(key, value)?,
            "demo.beta1" => self.demo.train.beta1 = num(key, value)?,
            "demo.beta2" => self.demo.train.beta2 = num(key, value)?,
            "demo.weight_decay" => self.demo.train.weight_decay = num(key, value)?,
            "demo.max_iterations" => self.demo.train.max_iterations = num(key, value)?,
            "demo.eval_interval" => self.demo.train.eval_interval = num(key, value)?,
            "demo.warmup_iterations" => self.demo.train.warmup_iterations = num(key, value)?,
            "demo.batch_size" => self.demo.train.batch_size = num(key, value)?,
            "demo.seed" => self.demo.train.seed = num(key, value)?,
            "demo.hidden" => self.demo.hidden = num(key, value)?,
            "demo.prompt_len" => self.demo.prompt_len = num(key, value)?,
            "demo.max_len" => self.demo.max_len = num(key, value)?,
            "demo.model_seed" => self.demo.model_seed = num(key, value)?,
            "demo.data" => self.demo.data = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Checks cross-field constraints after all assignments.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: String| Err(ConfigError::BadValue { key: key.into(), msg });
        if let Err(e) = self.filter.clone().normalized().validate() {
            return bad("filter", e.to_string());
        }
        if let Err(e) = self.clean.validate() {
            return bad("clean", e.to_string());
        }
        if let Err(e) = self.prompts.validate() {
            return bad("prompts", e.to_string());
        }
        let (a, b, c) = self.split_ratios;
        if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return bad("split.ratios", format!("({a}, {b}, {c}) must be fractions summing to 1"));
        }
        if let Err(e) = self.demo.train.validate() {
            return bad("demo", e.to_string());
        }
        if self.demo.hidden == 0 || self.demo.max_len == 0 {
            return bad("demo", "hidden and max_len must be positive".into());
        }
        if !(self.mine.timeout_secs > 0.0 && self.enhance.hook_timeout_secs > 0.0) {
            return bad("timeout", "timeouts must be positive".into());
        }
        Ok(())
    }

    pub fn effective_cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("cache"))
    }

    /// Every key with its effective value, in the file syntax.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("repos", join(self.repos.iter().map(|r| r.to_string())));
        put("cache_dir", self.effective_cache_dir().display().to_string());
        put("out_dir", self.out_dir.display().to_string());
        put("parallelism", self.parallelism.to_string());
        put("filter.hdl_extensions", join(&self.filter.hdl_extensions));
        put("filter.deny_labels", join(&self.filter.deny_labels));
        put("filter.allow_labels", self.filter.allow_labels.as_ref().map(join).unwrap_or_default());
        put("clean.min_tokens", self.clean.min_tokens.to_string());
        put("clean.max_tokens", self.clean.max_tokens.to_string());
        match &self.clean.token_counter {
            CounterSpec::WordHeuristic => put("tokenizer.kind", "word_heuristic".into()),
            CounterSpec::Bpe { vocab, merges, byte_level } => {
                put("tokenizer.kind", "bpe".into());
                put("tokenizer.vocab", vocab.display().to_string());
                put("tokenizer.merges", merges.display().to_string());
                put("tokenizer.byte_level", byte_level.to_string());
            }
        }
        put("split.seed", self.split_seed.to_string());
        let (a, b, c) = self.split_ratios;
        put("split.ratios", format!("{a},{b},{c}"));
        put("prompts.localization", escape(&self.prompts.localization_prompt));
        put("prompts.repair", escape(&self.prompts.repair_prompt));
        put("prompts.layout", escape(&self.prompts.layout));
        put(
            "scoring.tokens",
            match self.scoring.split_mode {
                SplitMode::CodeAware => "code_aware".into(),
                SplitMode::Whitespace => "whitespace".into(),
            },
        );
        put("scoring.strip_comments", self.scoring.strip_comments.to_string());
        put("scoring.lowercase", self.scoring.lowercase.to_string());
        put("mine.api_base", self.mine.api_base.clone());
        put("mine.since", self.mine.since.map(|d| d.to_rfc3339()).unwrap_or_default());
        put("mine.max_commits", self.mine.max_commits.map(|n| n.to_string()).unwrap_or_default());
        put("mine.wait_on_rate_limit", self.mine.wait_on_rate_limit.to_string());
        put("mine.timeout_secs", self.mine.timeout_secs.to_string());
        put(
            "enhance.defines",
            join(self.enhance.defines.iter().map(|(k, v)| if v.is_empty() { k.clone() } else { format!("{k}={v}") })),
        );
        put("enhance.include_dirs", join(self.enhance.include_dirs.iter().map(|d| d.display().to_string())));
        put("enhance.verilator", self.enhance.verilator.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put("enhance.message_hook", self.enhance.message_hook.clone().unwrap_or_default());
        put("enhance.hook_timeout_secs", self.enhance.hook_timeout_secs.to_string());
        let t = &self.demo.train;
        put("demo.learning_rate", t.learning_rate.to_string());
        put("demo.beta1", t.beta1.to_string());
        put("demo.beta2", t.beta2.to_string());
        put("demo.weight_decay", t.weight_decay.to_string());
        put("demo.max_iterations", t.max_iterations.to_string());
        put("demo.eval_interval", t.eval_interval.to_string());
        put("demo.warmup_iterations", t.warmup_iterations.to_string());
        put("demo.batch_size", t.batch_size.to_string());
        put("demo.seed", t.seed.to_string());
        put("demo.hidden", self.demo.hidden.to_string());
        put("demo.prompt_len", self.demo.prompt_len.to_string());
        put("demo.max_len", self.demo.max_len.to_string());
        put("demo.model_seed", self.demo.model_seed.to_string());
        put("demo.data", self.demo.data.display().to_string());
        m
    }

    /// [`Self::entries`] as file text.
    pub fn render(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.repos.len(), 8);
        let mut back = PipelineConfig::default();
        back.apply_text(&cfg.render(), "rendered").unwrap();
        assert_eq!(back.entries(), cfg.entries());
    }

    #[test]
    fn dotted_keys_and_escapes() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(
            "# mini\nrepos = a/b\nfilter.hdl_extensions = .sv, .v\nprompts.layout = {design}\\n---\\n{prompt}\nsplit.ratios = 0.5,0.25,0.25\n",
            "t",
        )
        .unwrap();
        assert_eq!(cfg.repos, vec![RepoRef::new("a", "b").unwrap()]);
        assert_eq!(cfg.filter.hdl_extensions.len(), 2);
        assert_eq!(cfg.prompts.layout, "{design}\n---\n{prompt}");
        assert_eq!(cfg.split_ratios, (0.5, 0.25, 0.25));
        cfg.validate().unwrap();
    }

    #[test]
    fn errors_name_the_line() {
        let mut cfg = PipelineConfig::default();
        let e = cfg.apply_text("repos = a/b\nnonsense\n", "f.conf").unwrap_err();
        assert_eq!(e, ConfigError::Syntax { path: "f.conf".into(), line: 2, msg: "expected key = value, found \"nonsense\"".into() });
        assert!(matches!(cfg.apply_text("bogus.key = 1", "f"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(cfg.set("parallelism", "0").is_err());
        assert!(cfg.set("tokenizer.vocab", "v.json").is_err());
        cfg.set("split.ratios", "0.5,0.5,0.5").unwrap();
        assert!(cfg.validate().is_err());
    }
}
