use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{
    ErrorBody, GenerateItem, GenerateRequest, GenerateResponse, Health, JobState, TuneRequest, TuneResponse,
    PROTO_HEADER, PROTO_VERSION,
};
use super::{Backend, BackendError, GenerationParams};
use crate::template::CompiledPrompt;

/// Retries of transport failures and 5xx replies, with delays of
/// `base_delay`, 2·`base_delay`, 4·`base_delay`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay: Duration::from_millis(200) }
    }
}

/// HTTP client for a tuning worker.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    base: String,
    client: Client,
    pub retry: RetryPolicy,
    /// Generation batches in flight at once.
    pub max_in_flight: usize,
    /// Prompts per generation request.
    pub batch_size: usize,
}

impl RemoteBackend {
    pub fn new(base_url: &str) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| BackendError::Transport { attempts: 0, last_error: e.to_string() })?;
        Ok(Self {
            base: base_url.trim_end_matches('/').to_string(),
            client,
            retry: RetryPolicy::default(),
            max_in_flight: 4,
            batch_size: 16,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn call<T: DeserializeOwned>(&self, build: impl Fn() -> RequestBuilder) -> Result<T, BackendError> {
        let attempts = self.retry.attempts.max(1);
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
            }
            let response = match build().header(PROTO_HEADER, PROTO_VERSION).send() {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("worker request failed (attempt {}): {e}", attempt + 1);
                    last_error = e.to_string();
                    continue;
                }
            };
            let status = response.status();
            let body = match response.bytes() {
                Ok(b) => b,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            if status.is_server_error() {
                last_error = format!("{status}: {}", error_message(&body));
                log::warn!("worker returned {last_error} (attempt {})", attempt + 1);
                continue;
            }
            if !status.is_success() {
                return Err(BackendError::Rejected { status: status.as_u16(), message: error_message(&body) });
            }
            return serde_json::from_slice(&body)
                .map_err(|e| BackendError::Protocol(format!("bad response body: {e}")));
        }
        Err(BackendError::Transport { attempts, last_error })
    }

    fn post<B: Serialize + Sync, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, BackendError> {
        let url = format!("{}{path}", self.base);
        self.call(|| self.client.post(&url).json(body))
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, BackendError> {
        let url = format!("{}{path}", self.base);
        self.call(|| self.client.get(&url))
    }

    fn generate_batch(
        &self,
        model_ref: &str,
        prompts: &[CompiledPrompt],
        params: &GenerationParams,
    ) -> Result<Vec<GenerateItem>, BackendError> {
        let request = GenerateRequest { model_ref: model_ref.to_string(), params: params.clone(), prompts: prompts.to_vec() };
        let response: GenerateResponse = self.post("/v1/generate", &request)?;
        if response.results.len() != prompts.len() {
            return Err(BackendError::Protocol(format!(
                "{} results for {} prompts",
                response.results.len(),
                prompts.len()
            )));
        }
        for (item, prompt) in response.results.iter().zip(prompts) {
            if item.instance_id() != prompt.instance_id {
                return Err(BackendError::Protocol(format!(
                    "result for `{}` where `{}` was expected",
                    item.instance_id(),
                    prompt.instance_id
                )));
            }
        }
        Ok(response.results)
    }
}

fn error_message(body: &[u8]) -> String {
    serde_json::from_slice::<ErrorBody>(body)
        .map(|b| b.error)
        .unwrap_or_else(|_| String::from_utf8_lossy(body).chars().take(500).collect())
}

impl Backend for RemoteBackend {
    fn generate(
        &self,
        model_ref: &str,
        prompts: &[CompiledPrompt],
        params: &GenerationParams,
    ) -> Result<Vec<GenerateItem>, BackendError> {
        params.validate()?;
        if prompts.is_empty() {
            return Err(BackendError::Validation("no prompts".into()));
        }
        let batches: Vec<&[CompiledPrompt]> = prompts.chunks(self.batch_size.max(1)).collect();
        let mut out = Vec::with_capacity(prompts.len());
        for wave in batches.chunks(self.max_in_flight.max(1)) {
            let results: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> =
                    wave.iter().map(|batch| s.spawn(|| self.generate_batch(model_ref, batch, params))).collect();
                handles.into_iter().map(|h| h.join().expect("generation thread panicked")).collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }

    fn submit_tune(&self, request: &TuneRequest) -> Result<String, BackendError> {
        request.validate()?;
        let response: TuneResponse = self.post("/v1/tune", request)?;
        Ok(response.job_id)
    }

    fn poll(&self, job_id: &str) -> Result<JobState, BackendError> {
        match self.get(&format!("/v1/jobs/{job_id}")) {
            Err(BackendError::Rejected { status, .. }) if status == StatusCode::NOT_FOUND.as_u16() => {
                Err(BackendError::UnknownJob(job_id.to_string()))
            }
            other => other,
        }
    }

    fn health(&self) -> Result<Health, BackendError> {
        self.get("/v1/health")
    }
}
