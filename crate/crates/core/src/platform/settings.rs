use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crowd::CrowdPolicy;
use crate::error::{Error, Result};
use crate::workflow::QcPolicy;

pub const CONFIG_FILE: &str = "config.toml";

/// Tunable thresholds, read from `config.toml` in the store directory.
/// Missing keys take the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub overlap_fraction: f64,
    pub overlap_arity: usize,
    pub batch_iaa_threshold: f64,
    pub tag_iaa_threshold: f64,
    pub quiz_pass: usize,
    pub min_accuracy: f64,
    pub gold_min_evidence: u32,
    /// Share of hidden gold items in crowd job streams.
    pub gold_rate: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let qc = QcPolicy::default();
        let crowd = CrowdPolicy::default();
        Settings {
            overlap_fraction: qc.overlap_fraction,
            overlap_arity: qc.overlap_arity,
            batch_iaa_threshold: qc.batch_iaa_threshold,
            tag_iaa_threshold: qc.tag_iaa_threshold,
            quiz_pass: crowd.quiz_pass,
            min_accuracy: crowd.min_accuracy,
            gold_min_evidence: crowd.gold_min_evidence,
            gold_rate: 0.1,
        }
    }
}

impl Settings {
    pub fn parse(input: &str) -> Result<Self> {
        let s: Settings = toml::from_str(input).map_err(|e| Error::Config(e.to_string()))?;
        s.qc().validate(s.overlap_arity)?;
        if !(0.0..=1.0).contains(&s.min_accuracy) {
            return Err(Error::Config(format!(
                "min_accuracy must lie in [0, 1], got {}",
                s.min_accuracy
            )));
        }
        if !(0.0..1.0).contains(&s.gold_rate) {
            return Err(Error::Config(format!(
                "gold_rate must lie in [0, 1), got {}",
                s.gold_rate
            )));
        }
        if s.quiz_pass > crate::crowd::QUIZ_LENGTH {
            return Err(Error::Config(format!(
                "quiz_pass exceeds the quiz length {}",
                crate::crowd::QUIZ_LENGTH
            )));
        }
        Ok(s)
    }

    /// Reads `config.toml` from `dir`, or the defaults when there is none.
    pub fn load(dir: &Path) -> Result<Self> {
        match std::fs::read_to_string(dir.join(CONFIG_FILE)) {
            Ok(s) => Self::parse(&s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn qc(&self) -> QcPolicy {
        QcPolicy {
            overlap_fraction: self.overlap_fraction,
            overlap_arity: self.overlap_arity,
            batch_iaa_threshold: self.batch_iaa_threshold,
            tag_iaa_threshold: self.tag_iaa_threshold,
        }
    }

    pub fn crowd(&self) -> CrowdPolicy {
        CrowdPolicy {
            quiz_pass: self.quiz_pass,
            min_accuracy: self.min_accuracy,
            gold_min_evidence: self.gold_min_evidence,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file() {
        let s = Settings::parse("batch_iaa_threshold = 0.85\nquiz_pass = 16\n").unwrap();
        assert_eq!(s.qc().batch_iaa_threshold, 0.85);
        assert_eq!(s.crowd().quiz_pass, 16);
        assert_eq!(s.tag_iaa_threshold, 0.80);
        assert_eq!(Settings::parse("").unwrap(), Settings::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Settings::parse("overlap_fraction = 1.5").is_err());
        assert!(Settings::parse("quiz_pass = 21").is_err());
        assert!(Settings::parse("unknown = 1").is_err());
    }
}
