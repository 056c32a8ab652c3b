use std::time::Duration;

use thiserror::Error;

use crate::skeleton::JointConfiguration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Fresh,
    Stale,
    Starved,
}

impl Status {
    /// Value carried in the confidence field of joint frames.
    pub fn code(self) -> f32 {
        match self {
            Status::Fresh => 1.0,
            Status::Stale => 0.5,
            Status::Starved => 0.0,
        }
    }

    pub fn from_code(code: f32) -> Option<Self> {
        [Status::Fresh, Status::Stale, Status::Starved]
            .into_iter()
            .find(|s| s.code() == code)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Fresh => "fresh",
            Status::Stale => "stale",
            Status::Starved => "starved",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("stale policy needs 0 < fresh_ms ({fresh_ms}) <= hold_ms ({hold_ms})")]
pub struct StalePolicyError {
    pub fresh_ms: u64,
    pub hold_ms: u64,
}

/// How long the last good result stays usable.
#[derive(Debug, Clone, PartialEq)]
pub struct StalePolicy {
    fresh_ms: u64,
    hold_ms: u64,
    neutral: JointConfiguration,
}

pub const DEFAULT_FRESH_MS: u64 = 100;
pub const DEFAULT_HOLD_MS: u64 = 1000;

impl StalePolicy {
    pub fn new(fresh_ms: u64, hold_ms: u64, neutral: JointConfiguration) -> Result<Self, StalePolicyError> {
        if fresh_ms == 0 || fresh_ms > hold_ms {
            return Err(StalePolicyError { fresh_ms, hold_ms });
        }
        Ok(Self {
            fresh_ms,
            hold_ms,
            neutral,
        })
    }

    pub fn with_defaults(neutral: JointConfiguration) -> Self {
        Self::new(DEFAULT_FRESH_MS, DEFAULT_HOLD_MS, neutral).expect("defaults are ordered")
    }

    pub fn fresh_ms(&self) -> u64 {
        self.fresh_ms
    }

    pub fn hold_ms(&self) -> u64 {
        self.hold_ms
    }

    pub fn neutral(&self) -> &JointConfiguration {
        &self.neutral
    }
}

/// Output for a consumer whose newest result is `age` old.
///
/// A starved output is the neutral pose stamped with the last good frame's
/// sequence and timestamp, so output sequence numbers never go backwards.
pub fn apply_stale_policy(
    last_good: Option<&JointConfiguration>,
    age: Duration,
    policy: &StalePolicy,
) -> (JointConfiguration, Status) {
    let age_ms = age.as_secs_f64() * 1e3;
    match last_good {
        Some(good) if age_ms <= policy.fresh_ms as f64 => {
            let mut out = good.clone();
            out.stale = false;
            (out, Status::Fresh)
        }
        Some(good) if age_ms <= policy.hold_ms as f64 => {
            let mut out = good.clone();
            out.stale = true;
            (out, Status::Stale)
        }
        _ => {
            let mut out = policy.neutral.clone();
            out.stale = true;
            if let Some(good) = last_good {
                out.sequence = good.sequence;
                out.timestamp_us = good.timestamp_us;
            }
            (out, Status::Starved)
        }
    }
}
