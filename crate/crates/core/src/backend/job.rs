use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::wire::{JobState, JobStatus, TuneRequest};
use super::{Backend, BackendError, TuneMode, TuneParams};
use crate::corpus::RepairInstance;
use crate::template::PromptTemplate;

/// A tuning job over id manifests, tracked client-side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairJob {
    pub job_id: Option<String>,
    pub mode: TuneMode,
    pub model_id: String,
    pub templates: Vec<PromptTemplate>,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub tune_params: TuneParams,
    pub status: JobStatus,
    /// Last state reported by the backend.
    pub progress: Option<JobState>,
}

impl RepairJob {
    pub fn new(
        mode: TuneMode,
        model_id: impl Into<String>,
        templates: Vec<PromptTemplate>,
        train_ids: Vec<String>,
        val_ids: Vec<String>,
        tune_params: TuneParams,
    ) -> Self {
        Self {
            job_id: None,
            mode,
            model_id: model_id.into(),
            templates,
            train_ids,
            val_ids,
            tune_params: TuneParams { mode, ..tune_params },
            status: JobStatus::Queued,
            progress: None,
        }
    }

    /// Resolves the manifests against `pool` into a wire request.
    pub fn to_request(&self, pool: &[RepairInstance]) -> Result<TuneRequest, BackendError> {
        let by_id: HashMap<&str, &RepairInstance> = pool.iter().map(|i| (i.id.as_str(), i)).collect();
        let resolve = |ids: &[String]| {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|i| (*i).clone())
                        .ok_or_else(|| BackendError::Validation(format!("manifest references unknown instance `{id}`")))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let request = TuneRequest {
            mode: self.mode,
            model_id: self.model_id.clone(),
            tune_params: self.tune_params.clone(),
            templates: self.templates.clone(),
            train: resolve(&self.train_ids)?,
            val: resolve(&self.val_ids)?,
        };
        request.validate()?;
        Ok(request)
    }

    pub fn submit(&mut self, backend: &dyn Backend, pool: &[RepairInstance]) -> Result<String, BackendError> {
        let request = self.to_request(pool)?;
        let id = backend.submit_tune(&request)?;
        self.job_id = Some(id.clone());
        self.status = JobStatus::Queued;
        Ok(id)
    }

    /// Polls the backend and records the new state.
    pub fn refresh(&mut self, backend: &dyn Backend) -> Result<JobStatus, BackendError> {
        let id = self.job_id.as_deref().ok_or_else(|| BackendError::Validation("job was not submitted".into()))?;
        let state = backend.poll(id)?;
        if !self.status.can_become(state.status) {
            return Err(BackendError::Protocol(format!(
                "job `{id}` went from {:?} to {:?}",
                self.status, state.status
            )));
        }
        self.status = state.status;
        self.progress = Some(state);
        Ok(self.status)
    }

    /// Polls until the job is done or failed.
    pub fn wait(
        &mut self,
        backend: &dyn Backend,
        interval: std::time::Duration,
        max_polls: usize,
    ) -> Result<JobStatus, BackendError> {
        for _ in 0..max_polls {
            if self.refresh(backend)?.is_terminal() {
                return Ok(self.status);
            }
            std::thread::sleep(interval);
        }
        Err(BackendError::Timeout(self.job_id.clone().unwrap_or_default()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{StubBackend, StubMode};
    use crate::codeparse::LanguageId;

    #[test]
    fn missing_instance_is_a_validation_error() {
        let pool = vec![RepairInstance::new("a", LanguageId::C, "x", "y")];
        let job = RepairJob::new(TuneMode::FineTune, "m", Vec::new(), vec!["a".into(), "zz".into()], vec![], Default::default());
        match job.to_request(&pool) {
            Err(BackendError::Validation(m)) => assert!(m.contains("zz")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lifecycle_on_stub() {
        let pool = vec![RepairInstance::new("a", LanguageId::C, "x", "y")];
        let stub = StubBackend::new(StubMode::Copy);
        let mut job = RepairJob::new(TuneMode::FineTune, "m", Vec::new(), vec!["a".into()], vec![], Default::default());
        job.submit(&stub, &pool).unwrap();
        assert_eq!(job.wait(&stub, std::time::Duration::ZERO, 3).unwrap(), JobStatus::Done);
        assert!(job.progress.unwrap().checkpoint_ref.is_some());
    }
}
