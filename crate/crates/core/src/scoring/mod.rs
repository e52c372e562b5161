// SPDX-License-Identifier: MIT OR Apache-2.0

//! Behavioral scoring of yes/no depth answers.
//!
//! Two scoring modes share one pipeline:
//!
//! * **logit**: `p = logistic(logit_yes - logit_no)`, correctness is `p` when
//!   the answer should be yes and `1 - p` otherwise;
//! * **exact match**: the free-text answer is reduced to its leading yes/no
//!   token and compared with the ground truth.
//!
//! Template scores are averaged per scene first, then scene scores per split.

mod aggregate;
mod mock;
mod wilson;

pub use aggregate::{
    aggregate, exact_match_counts, heatmap, scene_scores, size_sweep_report, AggregateConfig, CellHeatmap, SceneScore,
    SizeSweepReport, SplitReport,
};
pub use mock::{mock_agent, run_mock_agent, AgentKind, MOCK_LOGIT_MAGNITUDE};
pub use wilson::{wilson_ci, WilsonInterval, Z_95};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tunnelgen::Answer;

/// A model's response to one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogitRecord<T> {
    pub question_id: String,
    pub logit_yes: T,
    pub logit_no: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_text: Option<String>,
}

impl<T: Scalar> LogitRecord<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.logit_yes.is_finite() && self.logit_no.is_finite()) {
            return Err(Error::invalid(format!(
                "record `{}` has non-finite logits",
                self.question_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    #[default]
    Logit,
    ExactMatch,
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Logit => "logit",
            Self::ExactMatch => "exact_match",
        })
    }
}

impl FromStr for ScoringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(Self::Logit),
            "exact" | "exact_match" | "exact-match" => Ok(Self::ExactMatch),
            other => Err(Error::invalid(format!("unknown scoring mode `{other}`"))),
        }
    }
}

/// Numerically stable logistic function.
pub fn logistic<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Logit-based correctness of one record.
pub fn correctness<T: Scalar>(record: &LogitRecord<T>, ground_truth: Answer) -> Result<T> {
    record.validate()?;
    let p = logistic(record.logit_yes - record.logit_no);
    Ok(match ground_truth {
        Answer::Yes => p,
        Answer::No => T::one() - p,
    })
}

/// Reduces free text to a yes/no answer: trim, case-fold, drop punctuation
/// and take the leading word.
pub fn parse_yes_no(text: &str) -> Option<Answer> {
    let lowered = text.trim().to_lowercase();
    let token = lowered.split(|c: char| !c.is_alphanumeric()).find(|t| !t.is_empty())?;
    match token {
        "yes" => Some(Answer::Yes),
        "no" => Some(Answer::No),
        _ => None,
    }
}

/// Exact-match outcome; unparseable answers score 0 and are flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactMatch {
    pub correct: bool,
    pub parse_failure: bool,
}

impl ExactMatch {
    pub fn score<T: Scalar>(self) -> T {
        if self.correct {
            T::one()
        } else {
            T::zero()
        }
    }
}

pub fn exact_match<T>(record: &LogitRecord<T>, ground_truth: Answer) -> ExactMatch {
    match record.answer_text.as_deref().and_then(parse_yes_no) {
        Some(answer) => ExactMatch {
            correct: answer == ground_truth,
            parse_failure: false,
        },
        None => ExactMatch {
            correct: false,
            parse_failure: true,
        },
    }
}
