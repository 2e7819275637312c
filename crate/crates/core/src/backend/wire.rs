//! JSON bodies of the worker protocol.
//!
//! | request                 | body             | response        |
//! |-------------------------|------------------|-----------------|
//! | `POST /v1/generate`     | [`GenerateRequest`] | [`GenerateResponse`] |
//! | `POST /v1/tune`         | [`TuneRequest`]  | [`TuneResponse`] |
//! | `GET /v1/jobs/{id}`     |                  | [`JobState`]    |
//! | `GET /v1/health`        |                  | [`Health`]      |
//!
//! Every request carries `X-Patchbench-Proto: 1`. Errors come back as a 4xx
//! or 5xx status with an [`ErrorBody`].

use serde::{Deserialize, Serialize};

use super::{BackendError, GenerationParams, TuneMode, TuneParams};
use crate::corpus::RepairInstance;
use crate::template::{CompiledPrompt, PromptTemplate};

pub const PROTO_HEADER: &str = "X-Patchbench-Proto";
pub const PROTO_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub model_ref: String,
    pub params: GenerationParams,
    pub prompts: Vec<CompiledPrompt>,
}

/// Outcome for one prompt: the mask completion or a per-item error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenerateItem {
    Text { instance_id: String, text: String },
    Error { instance_id: String, error: String },
}

impl GenerateItem {
    pub fn instance_id(&self) -> &str {
        match self {
            Self::Text { instance_id, .. } | Self::Error { instance_id, .. } => instance_id,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            Self::Text { text, .. } => Some(text),
            Self::Error { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub results: Vec<GenerateItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRequest {
    pub mode: TuneMode,
    pub model_id: String,
    pub tune_params: TuneParams,
    pub templates: Vec<PromptTemplate>,
    pub train: Vec<RepairInstance>,
    pub val: Vec<RepairInstance>,
}

impl TuneRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        self.tune_params.validate()?;
        if self.model_id.is_empty() {
            return Err(BackendError::Validation("model_id is empty".into()));
        }
        if self.train.is_empty() {
            return Err(BackendError::Validation("training set is empty".into()));
        }
        if self.mode == TuneMode::PromptTune && self.templates.is_empty() {
            return Err(BackendError::Validation("prompt tuning needs at least one template".into()));
        }
        for t in &self.templates {
            t.validate().map_err(|e| BackendError::Validation(e.to_string()))?;
        }
        for inst in self.train.iter().chain(&self.val) {
            inst.validate().map_err(|e| BackendError::Validation(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuneResponse {
    pub job_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Done | Self::Failed)
    }

    /// Status only moves forward: queued, running, then done or failed.
    pub fn can_become(self, next: JobStatus) -> bool {
        let rank = |s: JobStatus| match s {
            Self::Queued => 0,
            Self::Running => 1,
            Self::Done | Self::Failed => 2,
        };
        self == next || (!self.is_terminal() && rank(next) > rank(self))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobState {
    pub status: JobStatus,
    #[serde(deserialize_with = "crate::whole::deserialize")]
    pub steps_done: u64,
    pub loss_curve: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub ok: bool,
    pub model_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
