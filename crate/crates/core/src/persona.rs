use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::timestamp::Timestamp;

/// Default highlight budget: three minutes.
pub const DEFAULT_MAX_DURATION: Timestamp = Timestamp::from_secs(180);

/// Who the clip is for and how long it may be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub role: String,
    #[serde(default)]
    pub extra_requirements: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub max_duration: Timestamp,
}

impl Persona {
    pub fn new(role: impl Into<String>, max_duration: Timestamp) -> Self {
        Persona {
            role: role.into(),
            extra_requirements: String::new(),
            keywords: Vec::new(),
            max_duration,
        }
    }

    pub fn with_requirements(mut self, extra: impl Into<String>) -> Self {
        self.extra_requirements = extra.into();
        self
    }

    pub fn with_keywords<I, S>(mut self, keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.keywords = keywords.into_iter().map(Into::into).collect();
        self
    }

    pub fn is_valid(&self) -> bool {
        self.max_duration > Timestamp::ZERO
    }

    /// Stable short identifier derived from the persona's content.
    pub fn id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.role.as_bytes());
        h.update([0]);
        h.update(self.extra_requirements.as_bytes());
        h.update([0]);
        for k in &self.keywords {
            h.update(k.as_bytes());
            h.update([0]);
        }
        h.update(self.max_duration.centis().to_le_bytes());
        let digest = h.finalize();
        format!("persona-{}", hex::encode(&digest[..6]))
    }
}

impl Default for Persona {
    fn default() -> Self {
        Persona::new("general audience", DEFAULT_MAX_DURATION)
    }
}
