use serde::{Deserialize, Serialize};

use super::BackendError;

/// Decoding settings sent with every generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    #[serde(deserialize_with = "crate::whole::deserialize")]
    pub beam_count: u32,
    pub temperature: f64,
    pub sample: bool,
    pub top_p: f64,
    pub repetition_penalty: f64,
    #[serde(deserialize_with = "crate::whole::deserialize")]
    pub max_new_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self { beam_count: 5, temperature: 1.0, sample: false, top_p: 0.9, repetition_penalty: 1.0, max_new_tokens: 512 }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::Validation(m.to_string()));
        if self.beam_count < 1 {
            return bad("beam_count must be at least 1");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must lie in (0, 1]");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if !(self.repetition_penalty > 0.0 && self.repetition_penalty.is_finite()) {
            return bad("repetition_penalty must be positive");
        }
        if self.max_new_tokens == 0 {
            return bad("max_new_tokens must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneMode {
    /// Update model weights on plain buggy-code inputs.
    FineTune,
    /// Update model weights and soft prompt rows on templated inputs.
    #[default]
    PromptTune,
}

impl std::str::FromStr for TuneMode {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fine_tune" => Ok(Self::FineTune),
            "prompt_tune" => Ok(Self::PromptTune),
            _ => Err(BackendError::Validation(format!("unknown tuning mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneParams {
    pub optimizer: String,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub scheduler: String,
    #[serde(deserialize_with = "crate::whole::deserialize")]
    pub epochs: u32,
    pub mode: TuneMode,
}

impl Default for TuneParams {
    fn default() -> Self {
        Self {
            optimizer: "adamw".into(),
            epsilon: 1e-8,
            learning_rate: 5e-5,
            scheduler: "linear".into(),
            epochs: 10,
            mode: TuneMode::PromptTune,
        }
    }
}

impl TuneParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(BackendError::Validation("learning_rate must be positive".into()));
        }
        if self.epochs < 1 {
            return Err(BackendError::Validation("epochs must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(BackendError::Validation("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let g = GenerationParams::default();
        g.validate().unwrap();
        assert_eq!((g.beam_count, g.sample, g.max_new_tokens), (5, false, 512));
        assert!(GenerationParams { top_p: 0.0, ..g.clone() }.validate().is_err());
        assert!(GenerationParams { beam_count: 0, ..g.clone() }.validate().is_err());
        assert!(GenerationParams { temperature: 0.0, ..g }.validate().is_err());
        let t = TuneParams::default();
        t.validate().unwrap();
        assert_eq!((t.optimizer.as_str(), t.epochs, t.learning_rate), ("adamw", 10, 5e-5));
        assert!(TuneParams { epochs: 0, ..t.clone() }.validate().is_err());
        assert!(TuneParams { learning_rate: -1.0, ..t }.validate().is_err());
    }

    #[test]
    fn partial_json_takes_defaults() {
        let g: GenerationParams = serde_json::from_str(r#"{"beam_count": 1}"#).unwrap();
        assert_eq!(g, GenerationParams { beam_count: 1, ..Default::default() });
    }
}
