use std::collections::HashMap;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::wire::{GenerateItem, Health, JobState, JobStatus, TuneRequest};
use super::{Backend, BackendError, GenerationParams};
use crate::corpus::RepairInstance;
use crate::template::CompiledPrompt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubMode {
    /// Predict the buggy code unchanged.
    Copy,
    /// Predict the table entry for the instance id.
    OracleTable(HashMap<String, String>),
    /// Predict the same text for every prompt.
    FixedText(String),
}

/// Deterministic offline backend. Tuning jobs finish at submission with a
/// no-op checkpoint.
#[derive(Debug)]
pub struct StubBackend {
    mode: StubMode,
    sources: HashMap<String, String>,
    jobs: Mutex<HashMap<String, JobState>>,
}

pub const STUB_MODEL: &str = "stub";

impl StubBackend {
    pub fn new(mode: StubMode) -> Self {
        Self { mode, sources: HashMap::new(), jobs: Mutex::new(HashMap::new()) }
    }

    /// Registers buggy code for copy mode, since a compiled prompt mixes it
    /// with template text.
    pub fn with_sources<'a>(mut self, instances: impl IntoIterator<Item = &'a RepairInstance>) -> Self {
        self.sources.extend(instances.into_iter().map(|i| (i.id.clone(), i.buggy_code.clone())));
        self
    }

    pub fn mode(&self) -> &StubMode {
        &self.mode
    }

    fn predict(&self, id: &str) -> Result<String, String> {
        match &self.mode {
            StubMode::Copy => self.sources.get(id).cloned().ok_or_else(|| format!("no buggy code registered for `{id}`")),
            StubMode::OracleTable(table) => table.get(id).cloned().ok_or_else(|| format!("no table entry for `{id}`")),
            StubMode::FixedText(text) => Ok(text.clone()),
        }
    }
}

impl Backend for StubBackend {
    fn generate(
        &self,
        _model_ref: &str,
        prompts: &[CompiledPrompt],
        params: &GenerationParams,
    ) -> Result<Vec<GenerateItem>, BackendError> {
        params.validate()?;
        if prompts.is_empty() {
            return Err(BackendError::Validation("no prompts".into()));
        }
        Ok(prompts
            .iter()
            .map(|p| {
                let instance_id = p.instance_id.clone();
                match self.predict(&p.instance_id) {
                    Ok(text) => GenerateItem::Text { instance_id, text },
                    Err(error) => GenerateItem::Error { instance_id, error },
                }
            })
            .collect())
    }

    fn submit_tune(&self, request: &TuneRequest) -> Result<String, BackendError> {
        request.validate()?;
        let body = serde_json::to_vec(request).map_err(|e| BackendError::Protocol(e.to_string()))?;
        let job_id = format!("stub-{}", &hex::encode(Sha256::digest(&body))[..16]);
        let state = JobState {
            status: JobStatus::Done,
            steps_done: u64::from(request.tune_params.epochs) * request.train.len() as u64,
            loss_curve: Vec::new(),
            checkpoint_ref: Some(format!("stub:noop:{job_id}")),
            error: None,
        };
        self.jobs.lock().expect("job table poisoned").insert(job_id.clone(), state);
        Ok(job_id)
    }

    fn poll(&self, job_id: &str) -> Result<JobState, BackendError> {
        self.jobs
            .lock()
            .expect("job table poisoned")
            .get(job_id)
            .cloned()
            .ok_or_else(|| BackendError::UnknownJob(job_id.to_string()))
    }

    fn health(&self) -> Result<Health, BackendError> {
        Ok(Health { ok: true, model_ids: vec![STUB_MODEL.to_string()] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{TuneMode, TuneParams};
    use crate::codeparse::LanguageId;

    fn prompt(id: &str) -> CompiledPrompt {
        CompiledPrompt::plain(&RepairInstance::new(id, LanguageId::C, "b", "f"))
    }

    #[test]
    fn modes() {
        let inst = RepairInstance::new("i1", LanguageId::C, "int x = 1;", "int x = 2;");
        let copy = StubBackend::new(StubMode::Copy).with_sources([&inst]);
        let p = GenerationParams::default();
        assert_eq!(copy.generate("m", &[prompt("i1")], &p).unwrap()[0].text(), Some("int x = 1;"));

        let table = StubBackend::new(StubMode::OracleTable(HashMap::from([("i1".into(), "F1".into())])));
        let out = table.generate("m", &[prompt("i1"), prompt("i2")], &p).unwrap();
        assert_eq!(out[0].text(), Some("F1"));
        assert!(matches!(&out[1], GenerateItem::Error { instance_id, .. } if instance_id == "i2"));

        let fixed = StubBackend::new(StubMode::FixedText("PASS".into()));
        assert!(fixed.generate("m", &[prompt("a"), prompt("b")], &p).unwrap().iter().all(|r| r.text() == Some("PASS")));
    }

    #[test]
    fn tune_finishes_immediately() {
        let stub = StubBackend::new(StubMode::Copy);
        let train: Vec<_> = (0..260).map(|i| RepairInstance::new(format!("t{i}"), LanguageId::Java, "a", "b")).collect();
        let templates = crate::template::builtin_templates(crate::template::TemplateSet::Bp, Default::default());
        let req = TuneRequest {
            mode: TuneMode::PromptTune,
            model_id: "m".into(),
            tune_params: TuneParams::default(),
            templates: templates[1..2].to_vec(),
            train,
            val: Vec::new(),
        };
        let id = stub.submit_tune(&req).unwrap();
        let state = stub.poll(&id).unwrap();
        assert_eq!(state.status, JobStatus::Done);
        assert!(state.steps_done <= 10 * 260);
        assert_eq!(stub.poll(&id).unwrap(), state);
        assert!(matches!(stub.poll("nope"), Err(BackendError::UnknownJob(_))));

        let fine = TuneRequest { mode: TuneMode::FineTune, templates: Vec::new(), ..req.clone() };
        stub.submit_tune(&fine).unwrap();
        let bad = TuneRequest { templates: Vec::new(), ..req };
        assert!(matches!(stub.submit_tune(&bad), Err(BackendError::Validation(_))));
    }
}
