// SPDX-License-Identifier: MIT OR Apache-2.0

//! Swap-pair construction.
//!
//! Horizontal and vertical examples name two objects; the pair is the
//! question about `(A, B)` and the same question about `(B, A)`, whose answer
//! is the inverse relation. Distance examples come as multiple-choice
//! questions: the target is the correct option, the reference a seeded
//! uniform pick among the distractors, and the swap exchanges the two.

use serde::{Deserialize, Serialize};

use rand::Rng;

use super::{Axis, Category};
use crate::error::{Error, Result};
use crate::rng;

/// A benchmark relation example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationExample {
    pub example_id: String,
    /// For horizontal/vertical: relation of `objects[0]` to `objects[1]`.
    /// For distance: whether the question asked for the farthest or the
    /// closest option.
    pub relation: Category,
    pub objects: Vec<String>,
    pub options: Vec<String>,
    pub correct_option: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapPair {
    pub pair_id: String,
    pub q_original: String,
    pub q_swapped: String,
    /// Answer to the original question.
    pub category: Category,
    pub axis: Axis,
}

impl SwapPair {
    pub fn validate(&self) -> Result<()> {
        if self.q_original == self.q_swapped {
            return Err(Error::invalid(format!(
                "pair `{}` uses the same question twice",
                self.pair_id
            )));
        }
        if self.category.axis() != self.axis {
            return Err(Error::invalid(format!(
                "pair `{}`: category {} is not on the {:?} axis",
                self.pair_id, self.category, self.axis
            )));
        }
        Ok(())
    }
}

/// A question the inference side must run to obtain a hidden state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeQuestion {
    pub question_id: String,
    pub example_id: String,
    pub text: String,
    pub subject: String,
    pub reference: String,
    pub answer: Category,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapPairSet {
    pub pairs: Vec<SwapPair>,
    pub questions: Vec<ProbeQuestion>,
    /// Distance examples dropped for lack of a distractor option.
    pub skipped_no_distractor: usize,
}

fn question_text(axis: Axis, subject: &str, reference: &str) -> String {
    match axis {
        Axis::Horizontal => format!("Is {subject} to the left or right of {reference}?"),
        Axis::Vertical => format!("Is {subject} above or below {reference}?"),
        Axis::Distance => format!("Is {subject} farther from or closer to the camera than {reference}?"),
    }
}

pub fn build_swap_pairs(examples: &[RelationExample], seed: u64) -> Result<SwapPairSet> {
    let mut set = SwapPairSet::default();
    let mut seen = std::collections::HashSet::new();
    for ex in examples {
        if !seen.insert(ex.example_id.as_str()) {
            return Err(Error::DuplicateId {
                kind: "example",
                id: ex.example_id.clone(),
            });
        }
        let axis = ex.relation.axis();
        let (subject, reference) = match axis {
            Axis::Horizontal | Axis::Vertical => match ex.objects.as_slice() {
                [a, b] if a != b => (a.clone(), b.clone()),
                _ => {
                    return Err(Error::invalid(format!(
                        "example `{}` needs exactly two distinct objects",
                        ex.example_id
                    )))
                }
            },
            Axis::Distance => {
                let correct = ex.correct_option.ok_or_else(|| {
                    Error::invalid(format!("distance example `{}` has no correct option", ex.example_id))
                })?;
                let target = ex.options.get(correct).ok_or_else(|| {
                    Error::invalid(format!(
                        "example `{}`: correct option {correct} out of range",
                        ex.example_id
                    ))
                })?;
                let distractors: Vec<&String> = ex
                    .options
                    .iter()
                    .enumerate()
                    .filter(|(i, o)| *i != correct && *o != target)
                    .map(|(_, o)| o)
                    .collect();
                if distractors.is_empty() {
                    set.skipped_no_distractor += 1;
                    continue;
                }
                let mut stream = rng::keyed_stream(seed, &ex.example_id);
                let reference = distractors[stream.gen_range(0..distractors.len())];
                (target.clone(), reference.clone())
            }
        };
        let original = ProbeQuestion {
            question_id: format!("{}-orig", ex.example_id),
            example_id: ex.example_id.clone(),
            text: question_text(axis, &subject, &reference),
            subject: subject.clone(),
            reference: reference.clone(),
            answer: ex.relation,
        };
        let swapped = ProbeQuestion {
            question_id: format!("{}-swap", ex.example_id),
            example_id: ex.example_id.clone(),
            text: question_text(axis, &reference, &subject),
            subject: reference,
            reference: subject,
            answer: ex.relation.opposite(),
        };
        set.pairs.push(SwapPair {
            pair_id: ex.example_id.clone(),
            q_original: original.question_id.clone(),
            q_swapped: swapped.question_id.clone(),
            category: ex.relation,
            axis,
        });
        set.questions.push(original);
        set.questions.push(swapped);
    }
    Ok(set)
}
