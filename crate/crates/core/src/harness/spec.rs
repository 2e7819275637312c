//! Experiment specs and their key-value file format.
//!
//! ```text
//! # one `key = value` per line; blank lines and `#` comments are ignored
//! name = manysstubs-bp
//! dataset = data/manysstubs4j.jsonl
//! schema = manysstubs4j
//! language = java
//! templates = HBP1, SBP1-init
//! style = infilling
//! backend = remote:http://localhost:8000
//! model = codet5p-220m
//! mode = prompt_tune
//! fraction = 1/100          # or: shots = 32
//! fixed_test_size = 500
//! seeds = 1, 2, 3
//! metric_mode = rate
//! output = runs/manysstubs-bp
//! ```
//!
//! Further keys: `beam_count`, `temperature`, `sample`, `top_p`,
//! `repetition_penalty`, `max_new_tokens`, `optimizer`, `adam_epsilon`,
//! `learning_rate`, `scheduler`, `epochs`, `compat_tokenizer`. Relative
//! paths are taken as given, relative to the working directory. Without a
//! `backend` key the worker URL environment variable is used if set, else
//! `stub:copy`.

use std::path::PathBuf;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::backend::{BackendConfig, GenerationParams, TuneMode, TuneParams};
use crate::codeparse::LanguageId;
use crate::corpus::{DatasetSchema, SamplingMode, SamplingPlan, DEFAULT_SEEDS};
use crate::metrics::AggregateMode;
use crate::template::{builtin, ModelStyle, PromptTemplate};

/// Template label of runs that use the plain fine-tuning input.
pub const PLAIN_TEMPLATE: &str = "plain";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub dataset: PathBuf,
    pub schema: DatasetSchema,
    pub language: LanguageId,
    /// Built-in template ids; ignored in fine-tuning mode.
    pub templates: Vec<String>,
    pub model_style: ModelStyle,
    pub backend: BackendConfig,
    pub model_id: String,
    pub mode: TuneMode,
    pub sampling: SamplingPlan,
    pub generation: GenerationParams,
    pub tune: TuneParams,
    pub metric_mode: AggregateMode,
    pub compat_tokenizer: bool,
    /// Not part of the fingerprint.
    pub output: PathBuf,
}

impl ExperimentSpec {
    /// A spec with defaults for everything but the dataset and backend.
    pub fn new(name: impl Into<String>, dataset: impl Into<PathBuf>, schema: DatasetSchema, language: LanguageId) -> Self {
        let name = name.into();
        Self {
            output: PathBuf::from("runs").join(&name),
            name,
            dataset: dataset.into(),
            schema,
            language,
            templates: Vec::new(),
            model_style: ModelStyle::Infilling,
            backend: BackendConfig::StubCopy,
            model_id: "stub".into(),
            mode: TuneMode::PromptTune,
            sampling: SamplingPlan {
                mode: SamplingMode::Fraction { fraction: Ratio::from_integer(1) },
                seeds: DEFAULT_SEEDS.to_vec(),
                fixed_test_size: None,
            },
            generation: GenerationParams::default(),
            tune: TuneParams::default(),
            metric_mode: AggregateMode::Rate,
            compat_tokenizer: false,
        }
    }

    /// Templates to run, in spec order. Fine-tuning runs have none.
    pub fn resolved_templates(&self) -> Result<Vec<PromptTemplate>, HarnessError> {
        if self.mode == TuneMode::FineTune {
            return Ok(Vec::new());
        }
        self.templates
            .iter()
            .map(|id| {
                builtin(id, self.model_style).ok_or_else(|| HarnessError::Spec(format!("unknown template id `{id}`")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.name.is_empty() {
            return Err(HarnessError::Spec("name is empty".into()));
        }
        if self.mode == TuneMode::PromptTune && self.templates.is_empty() {
            return Err(HarnessError::Spec("prompt tuning needs at least one template".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.templates.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(HarnessError::Spec(format!("template `{dup}` listed twice")));
        }
        self.resolved_templates()?;
        self.sampling.validate()?;
        if self.sampling.fixed_test_size == Some(0) {
            return Err(HarnessError::Spec("fixed_test_size must be positive".into()));
        }
        self.generation.validate()?;
        self.tune.validate()?;
        if self.tune.mode != self.mode {
            return Err(HarnessError::Spec("tune.mode differs from mode".into()));
        }
        Ok(())
    }

    /// SHA-256 over the spec's JSON form without the output directory.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("spec serializes");
        value.as_object_mut().expect("spec is an object").remove("output");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn from_config(text: &str) -> Result<Self, HarnessError> {
        let mut spec = ExperimentSpec::new("", "", DatasetSchema::Canonical, LanguageId::Java);
        let mut saw = std::collections::HashSet::new();
        let mut output = None;
        let mut sampling_mode = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split_once(" #").map_or(raw, |(l, _)| l).trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| config_error(line_no, "expected `key = value`"))?;
            if !saw.insert(key.to_string()) {
                return Err(config_error(line_no, format!("duplicate key `{key}`")));
            }
            let bad = |what: &str| config_error(line_no, format!("invalid {what} `{value}`"));
            match key {
                "name" => spec.name = value.to_string(),
                "dataset" => spec.dataset = PathBuf::from(value),
                "schema" => spec.schema = value.parse().map_err(|_| bad("schema"))?,
                "language" => spec.language = value.parse().map_err(|_| bad("language"))?,
                "templates" => spec.templates = split_list(value),
                "style" => spec.model_style = value.parse().map_err(|_| bad("style"))?,
                "backend" => spec.backend = value.parse().map_err(|_| bad("backend"))?,
                "model" => spec.model_id = value.to_string(),
                "mode" => spec.mode = value.parse().map_err(|_| bad("mode"))?,
                "fraction" | "shots" if sampling_mode.is_some() => {
                    return Err(config_error(line_no, "give either `fraction` or `shots`, not both"))
                }
                "fraction" => sampling_mode = Some(SamplingMode::Fraction { fraction: parse_fraction(value).ok_or_else(|| bad("fraction"))? }),
                "shots" => sampling_mode = Some(SamplingMode::Shots { shot_count: value.parse().map_err(|_| bad("shot count"))? }),
                "fixed_test_size" => spec.sampling.fixed_test_size = Some(value.parse().map_err(|_| bad("size"))?),
                "seeds" => spec.sampling.seeds = parse_seeds(value).ok_or_else(|| bad("seed list"))?,
                "metric_mode" => spec.metric_mode = value.parse().map_err(|_| bad("metric mode"))?,
                "output" => output = Some(PathBuf::from(value)),
                "compat_tokenizer" => spec.compat_tokenizer = value.parse().map_err(|_| bad("boolean"))?,
                "beam_count" => spec.generation.beam_count = value.parse().map_err(|_| bad("integer"))?,
                "temperature" => spec.generation.temperature = value.parse().map_err(|_| bad("number"))?,
                "sample" => spec.generation.sample = value.parse().map_err(|_| bad("boolean"))?,
                "top_p" => spec.generation.top_p = value.parse().map_err(|_| bad("number"))?,
                "repetition_penalty" => spec.generation.repetition_penalty = value.parse().map_err(|_| bad("number"))?,
                "max_new_tokens" => spec.generation.max_new_tokens = value.parse().map_err(|_| bad("integer"))?,
                "optimizer" => spec.tune.optimizer = value.to_string(),
                "adam_epsilon" => spec.tune.epsilon = value.parse().map_err(|_| bad("number"))?,
                "learning_rate" => spec.tune.learning_rate = value.parse().map_err(|_| bad("number"))?,
                "scheduler" => spec.tune.scheduler = value.to_string(),
                "epochs" => spec.tune.epochs = value.parse().map_err(|_| bad("integer"))?,
                _ => return Err(config_error(line_no, format!("unknown key `{key}`"))),
            }
        }
        for required in ["name", "dataset", "schema", "language"] {
            if !saw.contains(required) {
                return Err(HarnessError::Spec(format!("config lacks `{required}`")));
            }
        }
        if !saw.contains("backend") {
            spec.backend = BackendConfig::from_env().unwrap_or(BackendConfig::StubCopy);
        }
        if let Some(mode) = sampling_mode {
            spec.sampling.mode = mode;
        }
        spec.tune.mode = spec.mode;
        spec.output = output.unwrap_or_else(|| PathBuf::from("runs").join(&spec.name));
        spec.validate()?;
        Ok(spec)
    }

    /// The spec in the key-value format; parses back to an equal spec.
    pub fn to_config(&self) -> String {
        let mut lines = vec![
            format!("name = {}", self.name),
            format!("dataset = {}", self.dataset.display()),
            format!("schema = {}", self.schema),
            format!("language = {}", self.language),
        ];
        if !self.templates.is_empty() {
            lines.push(format!("templates = {}", self.templates.join(", ")));
        }
        lines.push(format!("style = {}", self.model_style));
        lines.push(format!("backend = {}", self.backend));
        lines.push(format!("model = {}", self.model_id));
        lines.push(format!("mode = {}", tune_mode_name(self.mode)));
        match self.sampling.mode {
            SamplingMode::Fraction { fraction } => lines.push(format!("fraction = {fraction}")),
            SamplingMode::Shots { shot_count } => lines.push(format!("shots = {shot_count}")),
        }
        if let Some(n) = self.sampling.fixed_test_size {
            lines.push(format!("fixed_test_size = {n}"));
        }
        let seeds: Vec<String> = self.sampling.seeds.iter().map(u64::to_string).collect();
        lines.push(format!("seeds = {}", seeds.join(", ")));
        lines.push(format!("metric_mode = {}", if self.metric_mode == AggregateMode::Rate { "rate" } else { "count" }));
        lines.push(format!("compat_tokenizer = {}", self.compat_tokenizer));
        let g = &self.generation;
        lines.push(format!("beam_count = {}", g.beam_count));
        lines.push(format!("temperature = {:?}", g.temperature));
        lines.push(format!("sample = {}", g.sample));
        lines.push(format!("top_p = {:?}", g.top_p));
        lines.push(format!("repetition_penalty = {:?}", g.repetition_penalty));
        lines.push(format!("max_new_tokens = {}", g.max_new_tokens));
        let t = &self.tune;
        lines.push(format!("optimizer = {}", t.optimizer));
        lines.push(format!("adam_epsilon = {:?}", t.epsilon));
        lines.push(format!("learning_rate = {:?}", t.learning_rate));
        lines.push(format!("scheduler = {}", t.scheduler));
        lines.push(format!("epochs = {}", t.epochs));
        lines.push(format!("output = {}", self.output.display()));
        lines.join("\n") + "\n"
    }
}

pub(crate) fn tune_mode_name(mode: TuneMode) -> &'static str {
    match mode {
        TuneMode::FineTune => "fine_tune",
        TuneMode::PromptTune => "prompt_tune",
    }
}

fn config_error(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Spec(format!("config line {line}: {}", message.into()))
}

fn split_list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// Seed list such as `1,2,3` or `1 2 3`.
pub fn parse_seeds(value: &str) -> Option<Vec<u64>> {
    let seeds: Option<Vec<u64>> =
        value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(|s| s.parse().ok()).collect();
    seeds.filter(|s| !s.is_empty())
}

/// `a/b`, an integer, or a decimal such as `0.01`, read exactly.
pub fn parse_fraction(value: &str) -> Option<Ratio<u64>> {
    if value.contains('/') {
        let (n, d) = value.split_once('/')?;
        let (n, d): (u64, u64) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
        return (d != 0).then(|| Ratio::new(n, d));
    }
    let (int, frac) = value.split_once('.').unwrap_or((value, ""));
    if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let scale = 10u64.pow(frac.len() as u32);
    let frac_value: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Ratio::new(int.checked_mul(scale)?.checked_add(frac_value)?, scale))
}
