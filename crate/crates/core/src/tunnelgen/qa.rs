// SPDX-License-Identifier: MIT OR Apache-2.0

//! The four yes/no depth-comparison questions asked about every scene.
//!
//! | template | text                                            | answer |
//! |----------|-------------------------------------------------|--------|
//! | 1        | Is the {far} closer to the camera than the {near}?  | No  |
//! | 2        | Is the {near} closer to the camera than the {far}?  | Yes |
//! | 3        | Is the {near} farther from the camera than the {far}? | No |
//! | 4        | Is the {far} farther from the camera than the {near}? | Yes |

use std::fmt;

use serde::{Deserialize, Serialize};

use super::SceneInstance;
use crate::error::{Error, Result};

pub const TEMPLATE_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn from_bool(yes: bool) -> Self {
        if yes {
            Self::Yes
        } else {
            Self::No
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Self::Yes => Self::No,
            Self::No => Self::Yes,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Yes => "Yes",
            Self::No => "No",
        })
    }
}

/// Which of the scene's objects a question mentions first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectRole {
    Far,
    Near,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Closer,
    Farther,
}

/// `(subject, comparison)` of a template: "Is the <subject> <comparison>
/// ... than the other object?"
pub fn template_semantics(template_id: u8) -> Result<(ObjectRole, Comparison)> {
    match template_id {
        1 => Ok((ObjectRole::Far, Comparison::Closer)),
        2 => Ok((ObjectRole::Near, Comparison::Closer)),
        3 => Ok((ObjectRole::Near, Comparison::Farther)),
        4 => Ok((ObjectRole::Far, Comparison::Farther)),
        other => Err(Error::invalid(format!("unknown question template {other}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRecord {
    pub question_id: String,
    pub scene_id: String,
    pub template_id: u8,
    pub text: String,
    pub ground_truth: Answer,
    /// Object descriptors in the order the question mentions them.
    pub queried_pair: (String, String),
}

/// Emits the four template questions for a scene, in template order.
pub fn generate_qa<T>(scene: &SceneInstance<T>) -> Result<[QuestionRecord; TEMPLATE_COUNT]> {
    let far = scene.far.object.descriptor();
    let near = scene.near.object.descriptor();
    if far == near {
        return Err(Error::invalid(format!(
            "scene `{}`: both objects are `{far}`",
            scene.scene_id
        )));
    }
    let make = |template_id: u8| -> QuestionRecord {
        let (subject, comparison) = template_semantics(template_id).expect("template ids 1-4");
        let (first, second) = match subject {
            ObjectRole::Far => (&far, &near),
            ObjectRole::Near => (&near, &far),
        };
        let phrase = match comparison {
            Comparison::Closer => "closer to the camera than",
            Comparison::Farther => "farther from the camera than",
        };
        // The far object is always farther, so the truth follows from roles.
        let truth = match (subject, comparison) {
            (ObjectRole::Far, Comparison::Farther) | (ObjectRole::Near, Comparison::Closer) => Answer::Yes,
            _ => Answer::No,
        };
        QuestionRecord {
            question_id: format!("{}-q{template_id}", scene.scene_id),
            scene_id: scene.scene_id.clone(),
            template_id,
            text: format!("Is the {first} {phrase} the {second}?"),
            ground_truth: truth,
            queried_pair: (first.clone(), second.clone()),
        }
    };
    Ok([make(1), make(2), make(3), make(4)])
}
