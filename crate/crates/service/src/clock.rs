//! Time and identifier sources, injectable so runs can be reproduced.

use sha2::{Digest, Sha256};

pub trait Clock: Send + Sync {
    /// Current time as an RFC 3339 string.
    fn now(&self) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

/// Always reports the same instant.
#[derive(Debug, Clone)]
pub struct FixedClock(pub String);

impl Default for FixedClock {
    fn default() -> Self {
        FixedClock("1970-01-01T00:00:00.000Z".into())
    }
}

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IdStrategy {
    /// Random UUIDs.
    #[default]
    Random,
    /// Derived from the source bytes and persona; repeated submissions get
    /// numeric suffixes.
    Deterministic,
}

impl IdStrategy {
    /// Base identifier for a job; `taken` reports ids already in use.
    pub fn make(self, source_digest: &str, persona_id: &str, taken: impl Fn(&str) -> bool) -> String {
        let base = match self {
            IdStrategy::Random => return uuid::Uuid::new_v4().simple().to_string(),
            IdStrategy::Deterministic => {
                let mut h = Sha256::new();
                h.update(source_digest.as_bytes());
                h.update([0]);
                h.update(persona_id.as_bytes());
                hex::encode(h.finalize())[..16].to_string()
            }
        };
        if !taken(&base) {
            return base;
        }
        (2u64..)
            .map(|n| format!("{base}-{n}"))
            .find(|id| !taken(id))
            .expect("unbounded suffix search")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_ids_repeat_and_disambiguate() {
        let a = IdStrategy::Deterministic.make("abc", "p", |_| false);
        assert_eq!(a, IdStrategy::Deterministic.make("abc", "p", |_| false));
        assert_eq!(a.len(), 16);
        let b = IdStrategy::Deterministic.make("abc", "p", |id| id == a);
        assert_eq!(b, format!("{a}-2"));
        assert_ne!(a, IdStrategy::Deterministic.make("abd", "p", |_| false));
    }

    #[test]
    fn random_ids_differ() {
        let a = IdStrategy::Random.make("x", "p", |_| false);
        let b = IdStrategy::Random.make("x", "p", |_| false);
        assert_ne!(a, b);
        assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn system_clock_is_rfc3339() {
        let now = SystemClock.now();
        assert!(chrono::DateTime::parse_from_rfc3339(&now).is_ok(), "{now}");
    }
}
