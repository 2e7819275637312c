//! Model access: generation and tuning behind one [`Backend`] trait.
//!
//! [`StubBackend`] answers offline and deterministically; [`RemoteBackend`]
//! talks to a tuning worker over the JSON protocol described in [`wire`].

mod job;
mod params;
mod remote;
mod stub;
pub mod wire;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

pub use job::RepairJob;
pub use params::{GenerationParams, TuneMode, TuneParams};
pub use remote::{RemoteBackend, RetryPolicy};
pub use stub::{StubBackend, StubMode, STUB_MODEL};
pub use wire::{GenerateItem, Health, JobState, JobStatus, TuneRequest};

use crate::corpus::RepairInstance;
use crate::template::CompiledPrompt;

/// Environment variable naming the default worker URL.
pub const WORKER_URL_ENV: &str = "PATCHBENCH_WORKER_URL";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    Validation(String),
    #[error("worker unreachable after {attempts} attempt(s): {last_error}")]
    Transport { attempts: u32, last_error: String },
    #[error("worker rejected the request ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("unknown job `{0}`")]
    UnknownJob(String),
    #[error("job `{0}` did not finish in time")]
    Timeout(String),
    #[error("backend config: {0}")]
    Config(String),
}

/// Model access. Implementations are shareable across threads.
pub trait Backend: Send + Sync {
    /// One result per prompt, in prompt order. Per-item failures are
    /// [`GenerateItem::Error`] entries; the call fails only as a whole.
    fn generate(
        &self,
        model_ref: &str,
        prompts: &[CompiledPrompt],
        params: &GenerationParams,
    ) -> Result<Vec<GenerateItem>, BackendError>;

    fn submit_tune(&self, request: &TuneRequest) -> Result<String, BackendError>;

    /// Current job state; repeated calls do not change it.
    fn poll(&self, job_id: &str) -> Result<JobState, BackendError>;

    fn health(&self) -> Result<Health, BackendError>;
}

/// Backend selection as written on the command line and in spec files:
/// `stub:copy`, `stub:table=<file>`, `stub:fixed=<text>`, `remote:<url>`.
/// The table file is a JSON object mapping instance ids to predictions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BackendConfig {
    StubCopy,
    StubTable(PathBuf),
    StubFixed(String),
    Remote(String),
}

impl BackendConfig {
    pub fn is_stub(&self) -> bool {
        !matches!(self, Self::Remote(_))
    }

    /// `remote:<url>` from [`WORKER_URL_ENV`], if set.
    pub fn from_env() -> Option<Self> {
        std::env::var(WORKER_URL_ENV).ok().filter(|u| !u.is_empty()).map(Self::Remote)
    }

    /// Builds the backend. Copy mode learns buggy code from `sources`.
    pub fn build(&self, sources: &[RepairInstance]) -> Result<Box<dyn Backend>, BackendError> {
        Ok(match self {
            Self::StubCopy => Box::new(StubBackend::new(StubMode::Copy).with_sources(sources)),
            Self::StubTable(path) => Box::new(StubBackend::new(StubMode::OracleTable(load_table(path)?))),
            Self::StubFixed(text) => Box::new(StubBackend::new(StubMode::FixedText(text.clone()))),
            Self::Remote(url) => Box::new(RemoteBackend::new(url)?),
        })
    }
}

pub fn load_table(path: &std::path::Path) -> Result<HashMap<String, String>, BackendError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BackendError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))
}

impl fmt::Display for BackendConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StubCopy => f.write_str("stub:copy"),
            Self::StubTable(p) => write!(f, "stub:table={}", p.display()),
            Self::StubFixed(t) => write!(f, "stub:fixed={t}"),
            Self::Remote(u) => write!(f, "remote:{u}"),
        }
    }
}

impl FromStr for BackendConfig {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stub:copy" {
            Ok(Self::StubCopy)
        } else if let Some(p) = s.strip_prefix("stub:table=") {
            Ok(Self::StubTable(PathBuf::from(p)))
        } else if let Some(t) = s.strip_prefix("stub:fixed=") {
            Ok(Self::StubFixed(t.to_string()))
        } else if let Some(u) = s.strip_prefix("remote:").filter(|u| !u.is_empty()) {
            Ok(Self::Remote(u.to_string()))
        } else {
            Err(BackendError::Config(format!(
                "unknown backend `{s}` (expected stub:copy, stub:table=<file>, stub:fixed=<text> or remote:<url>)"
            )))
        }
    }
}

impl serde::Serialize for BackendConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BackendConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_strings_round_trip() {
        for s in ["stub:copy", "stub:table=/tmp/t.json", "stub:fixed=PASS", "remote:http://localhost:8000"] {
            let c: BackendConfig = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("remote:".parse::<BackendConfig>().is_err());
        assert!("gpu".parse::<BackendConfig>().is_err());
    }
}
