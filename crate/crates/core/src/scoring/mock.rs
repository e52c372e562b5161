// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scripted agents with known behavior, used as oracles for the scoring
//! pipeline.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LogitRecord;
use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::rng;
use crate::scalar::Scalar;
use crate::tunnelgen::{template_semantics, Answer, Comparison, ObjectRole, QuestionRecord, SceneInstance};

/// Logit given to the chosen token; the other token gets its negation.
pub const MOCK_LOGIT_MAGNITUDE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AgentKind {
    /// Believes the object drawn higher in the image is farther.
    HeightHeuristic,
    /// Believes the object drawn lower in the image is farther.
    AntiHeuristic,
    /// Knows the true depths.
    DepthOracle,
    /// Believes the physically smaller object is farther.
    SizeHeuristic,
    /// Depth oracle whose answer is flipped with probability `epsilon`.
    NoisyOracle { epsilon: f64, seed: u64 },
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::HeightHeuristic => f.write_str("height-heuristic"),
            Self::AntiHeuristic => f.write_str("anti-heuristic"),
            Self::DepthOracle => f.write_str("depth-oracle"),
            Self::SizeHeuristic => f.write_str("size-heuristic"),
            Self::NoisyOracle { epsilon, seed } => write!(f, "noisy-oracle(epsilon={epsilon}, seed={seed})"),
        }
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    /// Parses the deterministic agents; the noisy oracle needs its
    /// parameters and is built directly.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "height-heuristic" => Ok(Self::HeightHeuristic),
            "anti-heuristic" => Ok(Self::AntiHeuristic),
            "depth-oracle" => Ok(Self::DepthOracle),
            "size-heuristic" => Ok(Self::SizeHeuristic),
            other => Err(Error::invalid(format!("unknown agent `{other}`"))),
        }
    }
}

/// Which object the agent believes is farther.
fn believed_farther<T: Scalar>(
    kind: AgentKind,
    scene: &SceneInstance<T>,
    camera: &CameraModel<T>,
) -> Result<ObjectRole> {
    let far_if = |cond: bool| if cond { ObjectRole::Far } else { ObjectRole::Near };
    Ok(match kind {
        AgentKind::DepthOracle | AgentKind::NoisyOracle { .. } => {
            far_if(scene.far.placement.depth > scene.near.placement.depth)
        }
        AgentKind::HeightHeuristic | AgentKind::AntiHeuristic => {
            let far_v = camera.project(scene.far.placement.center)?.v;
            let near_v = camera.project(scene.near.placement.center)?.v;
            let far_higher = far_v < near_v;
            far_if(far_higher == matches!(kind, AgentKind::HeightHeuristic))
        }
        AgentKind::SizeHeuristic => far_if(scene.far.object.size < scene.near.object.size),
    })
}

/// Response of a scripted agent to one question about `scene`.
pub fn mock_agent<T: Scalar>(
    kind: AgentKind,
    scene: &SceneInstance<T>,
    question: &QuestionRecord,
    camera: &CameraModel<T>,
) -> Result<LogitRecord<T>> {
    if question.scene_id != scene.scene_id {
        return Err(Error::invalid(format!(
            "question `{}` belongs to scene `{}`, not `{}`",
            question.question_id, question.scene_id, scene.scene_id
        )));
    }
    let (subject, comparison) = template_semantics(question.template_id)?;
    let farther = believed_farther(kind, scene, camera)?;
    let mut answer = Answer::from_bool((comparison == Comparison::Farther) == (subject == farther));
    if let AgentKind::NoisyOracle { epsilon, seed } = kind {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(format!("noise rate must lie in [0, 1], got {epsilon}")));
        }
        let mut stream = rng::keyed_stream(seed, &question.question_id);
        if stream.gen::<f64>() < epsilon {
            answer = answer.flipped();
        }
    }
    let m = T::lit(MOCK_LOGIT_MAGNITUDE);
    let (logit_yes, logit_no) = match answer {
        Answer::Yes => (m, -m),
        Answer::No => (-m, m),
    };
    Ok(LogitRecord {
        question_id: question.question_id.clone(),
        logit_yes,
        logit_no,
        answer_text: Some(answer.to_string()),
    })
}

/// Runs an agent over every question, in question order.
pub fn run_mock_agent<T: Scalar>(
    kind: AgentKind,
    scenes: &[SceneInstance<T>],
    questions: &[QuestionRecord],
    camera: &CameraModel<T>,
) -> Result<Vec<LogitRecord<T>>> {
    let by_id: HashMap<&str, &SceneInstance<T>> = scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    questions
        .iter()
        .map(|q| {
            let scene = by_id.get(q.scene_id.as_str()).ok_or_else(|| Error::Dangling {
                kind: "question",
                id: q.question_id.clone(),
                target: "scene",
            })?;
            mock_agent(kind, scene, q, camera)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::HeuristicLabel;
    use crate::scoring::{correctness, exact_match};
    use crate::tunnelgen::{generate_grid, generate_qa, DepthPair, TunnelSpec};

    #[test]
    fn oracle_is_always_right_in_both_modes() {
        let spec = TunnelSpec::<f64>::standard();
        for scene in generate_grid(&spec, &DepthPair::standard(), 1, 4).unwrap() {
            for q in generate_qa(&scene).unwrap() {
                let r = mock_agent(AgentKind::DepthOracle, &scene, &q, &spec.camera).unwrap();
                assert!(exact_match(&r, q.ground_truth).correct);
                assert!(correctness(&r, q.ground_truth).unwrap() > 0.999_999);
            }
        }
    }

    #[test]
    fn height_heuristic_matches_label() {
        let spec = TunnelSpec::<f64>::standard();
        for scene in generate_grid(&spec, &DepthPair::standard(), 1, 8).unwrap() {
            let expect_right = match scene.heuristic_label {
                HeuristicLabel::Consistent => true,
                HeuristicLabel::Counter => false,
                HeuristicLabel::Ambiguous => continue,
            };
            for q in generate_qa(&scene).unwrap() {
                let h = mock_agent(AgentKind::HeightHeuristic, &scene, &q, &spec.camera).unwrap();
                let a = mock_agent(AgentKind::AntiHeuristic, &scene, &q, &spec.camera).unwrap();
                assert_eq!(exact_match(&h, q.ground_truth).correct, expect_right);
                assert_eq!(exact_match(&a, q.ground_truth).correct, !expect_right);
            }
        }
    }

    #[test]
    fn noisy_oracle_is_seeded() {
        let spec = TunnelSpec::<f64>::standard();
        let scenes = generate_grid(&spec, &DepthPair::standard(), 1, 4).unwrap();
        let qs: Vec<_> = scenes.iter().flat_map(|s| generate_qa(s).unwrap()).collect();
        let kind = AgentKind::NoisyOracle { epsilon: 0.5, seed: 1 };
        let a = run_mock_agent(kind, &scenes, &qs, &spec.camera).unwrap();
        let b = run_mock_agent(kind, &scenes, &qs, &spec.camera).unwrap();
        assert_eq!(a, b);
        let never = run_mock_agent(
            AgentKind::NoisyOracle { epsilon: 0.0, seed: 1 },
            &scenes,
            &qs,
            &spec.camera,
        )
        .unwrap();
        let oracle = run_mock_agent(AgentKind::DepthOracle, &scenes, &qs, &spec.camera).unwrap();
        assert_eq!(never, oracle);
        let bad = AgentKind::NoisyOracle { epsilon: 1.5, seed: 1 };
        assert!(run_mock_agent(bad, &scenes, &qs, &spec.camera).is_err());
    }

    #[test]
    fn agent_names() {
        for name in ["height-heuristic", "anti-heuristic", "depth-oracle", "size-heuristic"] {
            assert_eq!(name.parse::<AgentKind>().unwrap().to_string(), name);
        }
        assert!("noisy-oracle".parse::<AgentKind>().is_err());
    }
}
