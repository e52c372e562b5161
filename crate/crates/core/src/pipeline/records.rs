// SPDX-License-Identifier: MIT OR Apache-2.0

//! Line-delimited record streams: QA, logits and annotations.

use std::collections::HashSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::json::{read_text, to_canonical_line, write_atomic};
use crate::error::{Error, Result};
use crate::heuristics::AnnotatedExample;
use crate::probing::{Category, RelationExample};
use crate::scoring::LogitRecord;
use crate::tunnelgen::QuestionRecord;

/// Fields tried, in order, to name a record in error messages.
const ID_FIELDS: [&str; 4] = ["question_id", "example_id", "scene_id", "pair_id"];

/// One JSON object per line, LF-terminated.
pub fn write_jsonl<S: Serialize>(path: &Path, records: &[S]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&to_canonical_line(r)?);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Parses a record stream. Blank lines are skipped; errors name the line
/// and, when it can be recovered, the record id.
pub fn read_jsonl<D: DeserializeOwned>(path: &Path) -> Result<Vec<D>> {
    let text = read_text(path)?;
    parse_jsonl(&text, &path.display().to_string())
}

pub(crate) fn parse_jsonl<D: DeserializeOwned>(text: &str, source: &str) -> Result<Vec<D>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("{source}:{}", n + 1);
        let value: Value = serde_json::from_str(line)
            .map_err(|e| Error::format(format!("{location}:{}", e.column()), e.to_string()))?;
        let id = ID_FIELDS
            .iter()
            .find_map(|f| value.get(*f).and_then(Value::as_str))
            .map(str::to_owned);
        let record = serde_json::from_value(value).map_err(|e| {
            let message = match &id {
                Some(id) => format!("record `{id}`: {e}"),
                None => e.to_string(),
            };
            Error::format(location.clone(), message)
        })?;
        out.push(record);
    }
    Ok(out)
}

fn ensure_unique<'a>(kind: &'static str, ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId {
                kind,
                id: id.to_owned(),
            });
        }
    }
    Ok(())
}

pub fn read_questions(path: &Path) -> Result<Vec<QuestionRecord>> {
    let records: Vec<QuestionRecord> = read_jsonl(path)?;
    ensure_unique("question", records.iter().map(|r| r.question_id.as_str()))?;
    Ok(records)
}

pub fn read_logits(path: &Path) -> Result<Vec<LogitRecord<f64>>> {
    let records: Vec<LogitRecord<f64>> = read_jsonl(path)?;
    ensure_unique("logit record", records.iter().map(|r| r.question_id.as_str()))?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

/// Every logit record must answer a known question.
pub fn check_logit_references(logits: &[LogitRecord<f64>], questions: &[QuestionRecord]) -> Result<()> {
    let known: HashSet<&str> = questions.iter().map(|q| q.question_id.as_str()).collect();
    match logits.iter().find(|r| !known.contains(r.question_id.as_str())) {
        Some(r) => Err(Error::Dangling {
            kind: "logit record",
            id: r.question_id.clone(),
            target: "question",
        }),
        None => Ok(()),
    }
}

/// An externally annotated benchmark example. Depth examples fill the
/// vertical-center fields; relation examples fill `relation` and the object
/// or option lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub example_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_center_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near_center_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_height: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_option: Option<usize>,
}

impl AnnotationRecord {
    /// Whether the record carries the fields needed for depth classification.
    pub fn has_depth_fields(&self) -> bool {
        self.far_center_v.is_some() && self.near_center_v.is_some() && self.image_height.is_some()
    }

    pub fn to_depth_example(&self) -> Result<AnnotatedExample<f64>> {
        match (self.far_center_v, self.near_center_v, self.image_height) {
            (Some(far), Some(near), Some(h)) => Ok(AnnotatedExample {
                example_id: self.example_id.clone(),
                far_center_v: far,
                near_center_v: near,
                image_height: h,
            }),
            _ => Err(Error::invalid(format!(
                "annotation `{}` lacks far_center_v, near_center_v or image_height",
                self.example_id
            ))),
        }
    }

    pub fn to_relation_example(&self) -> Result<RelationExample> {
        let relation = self
            .relation
            .ok_or_else(|| Error::invalid(format!("annotation `{}` has no relation", self.example_id)))?;
        Ok(RelationExample {
            example_id: self.example_id.clone(),
            relation,
            objects: self.objects.clone(),
            options: self.options.clone(),
            correct_option: self.correct_option,
        })
    }
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let records: Vec<AnnotationRecord> = read_jsonl(path)?;
    ensure_unique("example", records.iter().map(|r| r.example_id.as_str()))?;
    Ok(records)
}
