use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spec::{tune_mode_name, ExperimentSpec, PLAIN_TEMPLATE};
use super::HarnessError;
use crate::backend::{Backend, BackendConfig, BackendError, GenerateItem, JobStatus, RepairJob, TuneMode};
use crate::codeparse::LanguageId;
use crate::corpus::{load_dataset, DatasetSplit, RepairInstance, SamplingMode, SamplingPlan};
use crate::metrics::{aggregate, cross_seed_mean, evaluate_batch, AggregateMode, CodeBleuConfig, EvalItem, MetricReport, Scores};
use crate::template::{instantiate, CompiledPrompt, PromptTemplate};

pub const PROTOCOL_VERSION: &str = crate::backend::wire::PROTO_VERSION;

const POLL_INTERVAL: Duration = Duration::from_secs(5);
const MAX_POLLS: usize = 17_280;

/// Scores of one template under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub instances: usize,
    #[serde(flatten)]
    pub scores: Scores<f64>,
    /// Prompts that failed to compile or came back as per-item errors;
    /// they are scored as empty predictions.
    pub generation_errors: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// SHA-256 over the test ids joined by newlines.
    pub test_manifest_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateResult {
    pub template_id: String,
    pub per_seed: Vec<SeedRow>,
    /// Mean of `per_seed` scores; absent when every seed failed.
    pub cross_seed: Option<Scores<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

/// Outcome of a run. Wall-clock times live in `timings.json` so that this
/// file is identical across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub fingerprint: String,
    pub protocol_version: String,
    /// Dataset file stem, used as the dataset label in reports.
    pub dataset: String,
    pub dataset_sha256: String,
    pub language: LanguageId,
    pub model_id: String,
    pub method: String,
    pub mode: TuneMode,
    pub backend: String,
    pub sampling: SamplingPlan,
    pub metric_mode: AggregateMode,
    pub seeds: Vec<u64>,
    pub templates: Vec<TemplateResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_seeds: Vec<SeedFailure>,
    pub complete: bool,
}

impl ExperimentResult {
    pub fn template(&self, id: &str) -> Option<&TemplateResult> {
        self.templates.iter().find(|t| t.template_id == id)
    }

    /// Template with the highest cross-seed EM; the first one on ties.
    pub fn best(&self) -> Option<&TemplateResult> {
        self.templates.iter().filter(|t| t.cross_seed.is_some()).fold(None, |best: Option<&TemplateResult>, t| match best {
            Some(b) if b.cross_seed.unwrap().em >= t.cross_seed.unwrap().em => Some(b),
            _ => Some(t),
        })
    }

    pub fn shot_count(&self) -> Option<usize> {
        match self.sampling.mode {
            SamplingMode::Shots { shot_count } => Some(shot_count),
            SamplingMode::Fraction { .. } => None,
        }
    }
}

/// Rows per template, or why the seed failed.
type SeedOutcome = Result<Vec<(String, SeedRow)>, String>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeedState {
    fingerprint: String,
    seed: u64,
    rows: Vec<(String, SeedRow)>,
}

#[derive(Serialize)]
struct Timings {
    started_unix: u64,
    finished_unix: u64,
    seconds_per_seed: Vec<(u64, f64)>,
}

fn method_label(spec: &ExperimentSpec) -> String {
    match (&spec.backend, spec.mode) {
        (BackendConfig::StubCopy, _) => "naive copy".into(),
        (_, TuneMode::FineTune) => "fine-tuning".into(),
        (_, TuneMode::PromptTune) => "prompt tuning".into(),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row).expect("serializable"));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs every seed of `spec` and writes the artifacts under `spec.output`.
///
/// Seeds run in parallel; one failing seed is recorded and the others
/// continue. If any seed failed, the partial result is still written and
/// returned inside [`HarnessError::Incomplete`]; rerunning the same spec
/// reuses the seeds that finished.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, HarnessError> {
    spec.validate()?;
    let started = unix_now();
    let templates = spec.resolved_templates()?;
    let bytes = std::fs::read(&spec.dataset).map_err(|e| HarnessError::io(&spec.dataset, e))?;
    let dataset_sha256 = sha256_hex(&bytes);
    let instances: Vec<RepairInstance> =
        load_dataset(&spec.dataset, spec.schema)?.into_iter().filter(|i| i.language == spec.language).collect();
    let mut seen = HashSet::new();
    if let Some(dup) = instances.iter().find(|i| !seen.insert(i.id.as_str())) {
        return Err(crate::corpus::SamplingError::DuplicateId(dup.id.clone()).into());
    }
    if let (&SamplingMode::Shots { shot_count }, Some(test)) = (&spec.sampling.mode, spec.sampling.fixed_test_size) {
        if instances.len() < shot_count + test {
            return Err(HarnessError::Spec(format!(
                "{} {} instances cannot hold {shot_count} shots plus a {test}-instance test set",
                instances.len(),
                spec.language
            )));
        }
    }

    let backend = spec.backend.build(&instances)?;
    let health = backend.health()?;
    if !health.ok {
        return Err(BackendError::Config("worker reports it is not healthy".into()).into());
    }
    if !spec.backend.is_stub() && !health.model_ids.is_empty() && !health.model_ids.contains(&spec.model_id) {
        return Err(BackendError::Config(format!("worker does not serve model `{}`", spec.model_id)).into());
    }

    let fingerprint = spec.fingerprint();
    std::fs::create_dir_all(&spec.output).map_err(|e| HarnessError::io(&spec.output, e))?;
    write_atomic(&spec.output.join("spec.conf"), spec.to_config().as_bytes())?;

    let ctx = SeedContext { spec, templates: &templates, instances: &instances, backend: backend.as_ref(), fingerprint: &fingerprint };
    let outcomes: Vec<(u64, f64, SeedOutcome)> = spec
        .sampling
        .seeds
        .par_iter()
        .map(|&seed| {
            let t0 = std::time::Instant::now();
            let out = ctx.run_seed(seed).map_err(|e| e.to_string());
            if let Err(e) = &out {
                log::warn!("seed {seed} failed: {e}");
            }
            (seed, t0.elapsed().as_secs_f64(), out)
        })
        .collect();

    let ids: Vec<String> = if spec.mode == TuneMode::FineTune {
        vec![PLAIN_TEMPLATE.to_string()]
    } else {
        templates.iter().map(|t| t.id.clone()).collect()
    };
    let mut failed = Vec::new();
    let mut per_template: Vec<Vec<SeedRow>> = vec![Vec::new(); ids.len()];
    for (seed, _, outcome) in &outcomes {
        match outcome {
            Ok(rows) => {
                for (id, row) in rows {
                    let i = ids.iter().position(|x| x == id).expect("row for a known template");
                    per_template[i].push(row.clone());
                }
            }
            Err(error) => failed.push(SeedFailure { seed: *seed, error: error.clone() }),
        }
    }
    let result = ExperimentResult {
        name: spec.name.clone(),
        fingerprint,
        protocol_version: PROTOCOL_VERSION.to_string(),
        dataset: spec.dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        dataset_sha256,
        language: spec.language,
        model_id: spec.model_id.clone(),
        method: method_label(spec),
        mode: spec.mode,
        backend: spec.backend.to_string(),
        sampling: spec.sampling.clone(),
        metric_mode: spec.metric_mode,
        seeds: spec.sampling.seeds.clone(),
        templates: ids
            .into_iter()
            .zip(per_template)
            .map(|(template_id, per_seed)| {
                let cross_seed = cross_seed_mean(&per_seed.iter().map(|r| r.scores).collect::<Vec<_>>());
                TemplateResult { template_id, per_seed, cross_seed }
            })
            .collect(),
        complete: failed.is_empty(),
        failed_seeds: failed,
    };
    write_json(&spec.output.join("result.json"), &result)?;
    write_json(
        &spec.output.join("timings.json"),
        &Timings {
            started_unix: started,
            finished_unix: unix_now(),
            seconds_per_seed: outcomes.iter().map(|(s, t, _)| (*s, *t)).collect(),
        },
    )?;
    if result.complete {
        Ok(result)
    } else {
        Err(HarnessError::Incomplete(Box::new(result)))
    }
}

struct SeedContext<'a> {
    spec: &'a ExperimentSpec,
    templates: &'a [PromptTemplate],
    instances: &'a [RepairInstance],
    backend: &'a dyn Backend,
    fingerprint: &'a str,
}

impl SeedContext<'_> {
    fn seed_dir(&self, seed: u64) -> PathBuf {
        self.spec.output.join(format!("seed-{seed}"))
    }

    fn run_seed(&self, seed: u64) -> Result<Vec<(String, SeedRow)>, HarnessError> {
        let dir = self.seed_dir(seed);
        let state_path = dir.join("state.json");
        if let Ok(text) = std::fs::read_to_string(&state_path) {
            if let Ok(state) = serde_json::from_str::<SeedState>(&text) {
                if state.fingerprint == self.fingerprint && state.seed == seed {
                    log::info!("seed {seed}: reusing finished state");
                    return Ok(state.rows);
                }
            }
        }

        let ids: Vec<String> = self.instances.iter().map(|i| i.id.clone()).collect();
        let manifest = self.spec.sampling.manifest(&ids, seed)?;
        let train: HashSet<&str> = manifest.train.iter().map(String::as_str).collect();
        if let Some(id) = manifest.test.iter().find(|id| train.contains(id.as_str())) {
            return Err(HarnessError::Spec(format!("seed {seed}: `{id}` is in both train and test")));
        }
        write_json(&dir.join("manifest.json"), &manifest)?;
        let test_manifest_sha256 = sha256_hex(manifest.test.join("\n").as_bytes());
        let by_id: std::collections::HashMap<&str, &RepairInstance> =
            self.instances.iter().map(|i| (i.id.as_str(), i)).collect();
        let test: Vec<&RepairInstance> = manifest.test.iter().map(|id| by_id[id.as_str()]).collect();

        let runs: Vec<(String, Option<&PromptTemplate>)> = if self.spec.mode == TuneMode::FineTune {
            vec![(PLAIN_TEMPLATE.to_string(), None)]
        } else {
            self.templates.iter().map(|t| (t.id.clone(), Some(t))).collect()
        };
        let mut rows = Vec::with_capacity(runs.len());
        for (template_id, template) in runs {
            let checkpoint = self.tune(&manifest, template)?;
            let model_ref = checkpoint.as_deref().unwrap_or(&self.spec.model_id);
            let (reports, errors) = self.generate_and_score(seed, &test, template, model_ref, &dir.join(&template_id))?;
            let summary = aggregate(&reports, self.spec.metric_mode)?;
            rows.push((
                template_id,
                SeedRow {
                    seed,
                    instances: summary.instances,
                    scores: summary.scores,
                    generation_errors: errors,
                    train_size: manifest.train.len(),
                    test_size: manifest.test.len(),
                    test_manifest_sha256: test_manifest_sha256.clone(),
                    checkpoint_ref: checkpoint,
                },
            ));
        }
        write_json(&state_path, &SeedState { fingerprint: self.fingerprint.to_string(), seed, rows: rows.clone() })?;
        Ok(rows)
    }

    /// Tunes on the training sample; stubs skip tuning and use the model id.
    fn tune(&self, manifest: &DatasetSplit, template: Option<&PromptTemplate>) -> Result<Option<String>, HarnessError> {
        if self.spec.backend.is_stub() {
            return Ok(None);
        }
        let mut job = RepairJob::new(
            self.spec.mode,
            &self.spec.model_id,
            template.into_iter().cloned().collect(),
            manifest.train.clone(),
            manifest.val.clone(),
            self.spec.tune.clone(),
        );
        let job_id = job.submit(self.backend, self.instances)?;
        log::info!("seed {}: submitted {} job {job_id}", manifest.seed, tune_mode_name(self.spec.mode));
        let status = job.wait(self.backend, POLL_INTERVAL, MAX_POLLS)?;
        let state = job.progress.unwrap_or_else(|| unreachable!("waited job has a state"));
        if status == JobStatus::Failed {
            let why = state.error.unwrap_or_else(|| "no error message".into());
            return Err(BackendError::Protocol(format!("tuning job {job_id} failed: {why}")).into());
        }
        state
            .checkpoint_ref
            .map(Some)
            .ok_or_else(|| BackendError::Protocol(format!("job {job_id} finished without a checkpoint")).into())
    }

    fn generate_and_score(
        &self,
        seed: u64,
        test: &[&RepairInstance],
        template: Option<&PromptTemplate>,
        model_ref: &str,
        dir: &Path,
    ) -> Result<(Vec<MetricReport<f64>>, usize), HarnessError> {
        let mut predictions: Vec<(String, Option<String>)> = vec![(String::new(), None); test.len()];
        let mut prompts = Vec::with_capacity(test.len());
        let mut slots = Vec::with_capacity(test.len());
        for (i, inst) in test.iter().enumerate() {
            let compiled = match template {
                None => Ok(CompiledPrompt::plain(inst)),
                Some(t) => instantiate(t, inst),
            };
            match compiled {
                Ok(p) => {
                    prompts.push(p);
                    slots.push(i);
                }
                Err(e) => predictions[i].1 = Some(e.to_string()),
            }
        }
        if !prompts.is_empty() {
            let items = self.backend.generate(model_ref, &prompts, &self.spec.generation)?;
            for (item, &i) in items.into_iter().zip(&slots) {
                predictions[i] = match item {
                    GenerateItem::Text { text, .. } => (text, None),
                    GenerateItem::Error { error, .. } => (String::new(), Some(error)),
                };
            }
        }
        let errors = predictions.iter().filter(|p| p.1.is_some()).count();

        #[derive(Serialize)]
        struct Prediction<'a> {
            instance_id: &'a str,
            prediction: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            error: Option<&'a str>,
        }
        let lines: Vec<Prediction<'_>> = test
            .iter()
            .zip(&predictions)
            .map(|(inst, (text, error))| Prediction { instance_id: &inst.id, prediction: text, error: error.as_deref() })
            .collect();
        write_jsonl(&dir.join("predictions.jsonl"), &lines)?;

        let items: Vec<EvalItem> = test
            .iter()
            .zip(predictions)
            .map(|(inst, (prediction, _))| EvalItem {
                id: inst.id.clone(),
                language: inst.language,
                prediction,
                reference: inst.fixed_code.clone(),
                seed: Some(seed),
            })
            .collect();
        let config = if self.spec.compat_tokenizer { CodeBleuConfig::default().compat() } else { CodeBleuConfig::default() };
        let reports = evaluate_batch(&items, &config);
        write_jsonl(&dir.join("reports.jsonl"), &reports)?;
        Ok((reports, errors))
    }
}
