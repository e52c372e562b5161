// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{correctness, exact_match, LogitRecord, ScoringMode};
use crate::error::{Error, Result};
use crate::heuristics::HeuristicLabel;
use crate::scalar::{compensated_mean, Scalar};
use crate::tunnelgen::{QuestionRecord, SceneInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateConfig {
    pub mode: ScoringMode,
    /// Count ambiguous scenes in `v_mean` (they never enter the splits).
    pub include_ambiguous: bool,
}

/// Mean correctness of one scene over its templates.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneScore<T> {
    pub scene_id: String,
    pub score: T,
    pub questions: usize,
}

/// Per-scene scores keyed by scene id, plus the number of unparseable
/// answers (exact-match mode only).
///
/// Every question must have exactly one record and every record must match a
/// question. Template scores are summed in template order, so the result
/// does not depend on the order of `records`.
pub fn scene_scores<T: Scalar>(
    records: &[LogitRecord<T>],
    questions: &[QuestionRecord],
    mode: ScoringMode,
) -> Result<(BTreeMap<String, SceneScore<T>>, usize)> {
    let mut by_id: HashMap<&str, &QuestionRecord> = HashMap::with_capacity(questions.len());
    for q in questions {
        if by_id.insert(q.question_id.as_str(), q).is_some() {
            return Err(Error::DuplicateId {
                kind: "question",
                id: q.question_id.clone(),
            });
        }
    }
    let mut answered: HashMap<&str, &LogitRecord<T>> = HashMap::with_capacity(records.len());
    for r in records {
        if !by_id.contains_key(r.question_id.as_str()) {
            return Err(Error::Dangling {
                kind: "logit record",
                id: r.question_id.clone(),
                target: "question",
            });
        }
        if answered.insert(r.question_id.as_str(), r).is_some() {
            return Err(Error::DuplicateId {
                kind: "logit record",
                id: r.question_id.clone(),
            });
        }
    }
    let mut missing: Vec<String> = questions
        .iter()
        .filter(|q| !answered.contains_key(q.question_id.as_str()))
        .map(|q| q.question_id.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingRecords(missing));
    }

    let mut per_scene: BTreeMap<&str, Vec<(u8, &str, T)>> = BTreeMap::new();
    let mut parse_failures = 0usize;
    for q in questions {
        let record = answered[q.question_id.as_str()];
        let score = match mode {
            ScoringMode::Logit => correctness(record, q.ground_truth)?,
            ScoringMode::ExactMatch => {
                let m = exact_match(record, q.ground_truth);
                parse_failures += usize::from(m.parse_failure);
                m.score()
            }
        };
        per_scene
            .entry(q.scene_id.as_str())
            .or_default()
            .push((q.template_id, q.question_id.as_str(), score));
    }
    let scores = per_scene
        .into_iter()
        .map(|(scene_id, mut items)| {
            items.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            let n = items.len();
            let score = compensated_mean(items.into_iter().map(|(_, _, s)| s)).expect("scene has questions");
            (
                scene_id.to_string(),
                SceneScore {
                    scene_id: scene_id.to_string(),
                    score,
                    questions: n,
                },
            )
        })
        .collect();
    Ok((scores, parse_failures))
}

/// Split accuracies and the consistent-minus-counter gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitReport<T> {
    pub mode: ScoringMode,
    pub v_mean: Option<T>,
    pub v_consistent: Option<T>,
    pub v_counter: Option<T>,
    /// `v_consistent - v_counter`.
    pub gap: Option<T>,
    pub n_consistent: usize,
    pub n_counter: usize,
    pub n_ambiguous: usize,
    pub ambiguous_in_mean: bool,
    pub n_questions: usize,
    pub parse_failures: usize,
}

/// Scores records against questions and splits scenes by heuristic label.
pub fn aggregate<T: Scalar>(
    records: &[LogitRecord<T>],
    questions: &[QuestionRecord],
    labels: &BTreeMap<String, HeuristicLabel>,
    config: AggregateConfig,
) -> Result<SplitReport<T>> {
    let (scores, parse_failures) = scene_scores(records, questions, config.mode)?;
    let mut split: BTreeMap<HeuristicLabel, Vec<T>> = BTreeMap::new();
    for (scene_id, s) in &scores {
        let label = labels.get(scene_id).ok_or_else(|| Error::Dangling {
            kind: "question scene",
            id: scene_id.clone(),
            target: "scene label",
        })?;
        split.entry(*label).or_default().push(s.score);
    }
    let take = |label| split.get(&label).cloned().unwrap_or_default();
    let consistent = take(HeuristicLabel::Consistent);
    let counter = take(HeuristicLabel::Counter);
    let ambiguous = take(HeuristicLabel::Ambiguous);

    // BTreeMap iteration keeps scene-id order inside each split, so the means
    // are bit-identical for any record permutation.
    let mut pooled: Vec<(&String, T)> = scores
        .iter()
        .filter(|(id, _)| config.include_ambiguous || labels[*id] != HeuristicLabel::Ambiguous)
        .map(|(id, s)| (id, s.score))
        .collect();
    pooled.sort_by(|a, b| a.0.cmp(b.0));

    let v_consistent = compensated_mean(consistent.iter().copied());
    let v_counter = compensated_mean(counter.iter().copied());
    Ok(SplitReport {
        mode: config.mode,
        v_mean: compensated_mean(pooled.into_iter().map(|(_, s)| s)),
        v_consistent,
        v_counter,
        gap: v_consistent.zip(v_counter).map(|(a, b)| a - b),
        n_consistent: consistent.len(),
        n_counter: counter.len(),
        n_ambiguous: ambiguous.len(),
        ambiguous_in_mean: config.include_ambiguous,
        n_questions: questions.len(),
        parse_failures,
    })
}

/// Mean correctness per `(far slot, near slot)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellHeatmap<T> {
    pub slots: u32,
    /// Row = far slot, column = near slot; `None` where no scene survives the
    /// filter.
    pub grid: Vec<Vec<Option<T>>>,
    /// Majority label of each cell's scenes (ties resolve to ambiguous).
    pub labels: Vec<Vec<HeuristicLabel>>,
    pub filter: Option<HeuristicLabel>,
    pub mode: ScoringMode,
}

impl<T: Scalar> CellHeatmap<T> {
    /// Unweighted mean over present cells.
    pub fn mean(&self) -> Option<T> {
        compensated_mean(self.grid.iter().flatten().filter_map(|c| *c))
    }
}

/// Per-cell mean over all instances and templates. With a filter, only
/// scenes carrying that label contribute and cells left empty are `None`.
pub fn heatmap<T: Scalar>(
    records: &[LogitRecord<T>],
    questions: &[QuestionRecord],
    scenes: &[SceneInstance<T>],
    slots: u32,
    mode: ScoringMode,
    filter: Option<HeuristicLabel>,
) -> Result<CellHeatmap<T>> {
    let (scores, _) = scene_scores(records, questions, mode)?;
    let n = slots as usize;
    let mut cells: Vec<Vec<Vec<(String, T, usize)>>> = vec![vec![Vec::new(); n]; n];
    let mut label_counts = vec![vec![[0usize; 3]; n]; n];
    for scene in scenes {
        let (i, j) = (scene.cell.0 as usize, scene.cell.1 as usize);
        if i >= n || j >= n {
            return Err(Error::invalid(format!(
                "scene `{}` cell ({i}, {j}) outside a {slots}x{slots} grid",
                scene.scene_id
            )));
        }
        let slot = HeuristicLabel::ALL
            .iter()
            .position(|l| *l == scene.heuristic_label)
            .expect("label in ALL");
        label_counts[i][j][slot] += 1;
        if filter.is_some_and(|f| f != scene.heuristic_label) {
            continue;
        }
        let s = scores.get(&scene.scene_id).ok_or_else(|| Error::Dangling {
            kind: "scene",
            id: scene.scene_id.clone(),
            target: "scored question",
        })?;
        cells[i][j].push((scene.scene_id.clone(), s.score, s.questions));
    }

    let grid = cells
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|mut members| {
                    members.sort_by(|a, b| a.0.cmp(&b.0));
                    let total_q: usize = members.iter().map(|m| m.2).sum();
                    if total_q == 0 {
                        return None;
                    }
                    // Question-weighted mean over the cell.
                    let weighted = members.iter().map(|(_, s, q)| *s * T::from_count(*q));
                    Some(crate::scalar::compensated_sum(weighted) / T::from_count(total_q))
                })
                .collect()
        })
        .collect();
    let labels = label_counts
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|[c, k, a]| {
                    if c > k && c > a {
                        HeuristicLabel::Consistent
                    } else if k > c && k > a {
                        HeuristicLabel::Counter
                    } else {
                        HeuristicLabel::Ambiguous
                    }
                })
                .collect()
        })
        .collect();
    Ok(CellHeatmap {
        slots,
        grid,
        labels,
        filter,
        mode,
    })
}

/// Accuracy along the object-size sweep and the endpoint gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeSweepReport<T> {
    pub mode: ScoringMode,
    /// Ascending.
    pub s1_values: Vec<T>,
    pub v_by_s1: Vec<T>,
    pub scenes_per_bucket: Vec<usize>,
    /// Mean over every sweep scene.
    pub v_mean: T,
    pub v_s1_min: T,
    pub v_s1_max: T,
    /// `v_s1_min - v_s1_max`; positive when smaller-looking far objects help.
    pub size_gap: T,
}

pub fn size_sweep_report<T: Scalar>(
    records: &[LogitRecord<T>],
    questions: &[QuestionRecord],
    sweep_scenes: &[SceneInstance<T>],
    mode: ScoringMode,
) -> Result<SizeSweepReport<T>> {
    let (scores, _) = scene_scores(records, questions, mode)?;
    let mut buckets: BTreeMap<u32, (T, Vec<(String, T)>)> = BTreeMap::new();
    for scene in sweep_scenes {
        let tag = scene
            .size_sweep
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("scene `{}` is not part of a size sweep", scene.scene_id)))?;
        let s = scores.get(&scene.scene_id).ok_or_else(|| Error::Dangling {
            kind: "scene",
            id: scene.scene_id.clone(),
            target: "scored question",
        })?;
        let entry = buckets.entry(tag.step).or_insert_with(|| (tag.s1, Vec::new()));
        if entry.0 != tag.s1 {
            return Err(Error::invalid(format!(
                "sweep step {} has inconsistent s1 values ({} vs {})",
                tag.step, entry.0, tag.s1
            )));
        }
        entry.1.push((scene.scene_id.clone(), s.score));
    }
    let max_step = *buckets
        .keys()
        .next_back()
        .ok_or_else(|| Error::invalid("no size-sweep scenes supplied"))?;
    if max_step == 0 {
        return Err(Error::invalid("size sweep needs at least two s1 buckets"));
    }
    if let Some(missing) = (0..=max_step).find(|k| !buckets.contains_key(k)) {
        return Err(Error::invalid(format!("size sweep bucket {missing} has no scenes")));
    }

    let mut s1_values = Vec::new();
    let mut v_by_s1 = Vec::new();
    let mut counts = Vec::new();
    let mut all = Vec::new();
    for (_, (s1, mut members)) in buckets {
        members.sort_by(|a, b| a.0.cmp(&b.0));
        s1_values.push(s1);
        counts.push(members.len());
        v_by_s1.push(compensated_mean(members.iter().map(|m| m.1)).expect("non-empty bucket"));
        all.extend(members);
    }
    if s1_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("size sweep s1 values are not increasing with step"));
    }
    all.sort_by(|a, b| a.0.cmp(&b.0));
    let first = v_by_s1[0];
    let last = *v_by_s1.last().expect("at least two buckets");
    Ok(SizeSweepReport {
        mode,
        s1_values,
        v_by_s1,
        scenes_per_bucket: counts,
        v_mean: compensated_mean(all.into_iter().map(|m| m.1)).expect("non-empty sweep"),
        v_s1_min: first,
        v_s1_max: last,
        size_gap: first - last,
    })
}

/// Question-level exact-match tallies `(correct, total)` per heuristic
/// label, for binomial intervals.
pub fn exact_match_counts<T: Scalar>(
    records: &[LogitRecord<T>],
    questions: &[QuestionRecord],
    labels: &BTreeMap<String, HeuristicLabel>,
) -> Result<BTreeMap<HeuristicLabel, (u64, u64)>> {
    // Same completeness checks as the scorer.
    scene_scores(records, questions, ScoringMode::ExactMatch)?;
    let answers: HashMap<&str, &LogitRecord<T>> = records.iter().map(|r| (r.question_id.as_str(), r)).collect();
    let mut counts: BTreeMap<HeuristicLabel, (u64, u64)> = BTreeMap::new();
    for q in questions {
        let label = labels.get(&q.scene_id).ok_or_else(|| Error::Dangling {
            kind: "question scene",
            id: q.scene_id.clone(),
            target: "scene label",
        })?;
        let entry = counts.entry(*label).or_default();
        entry.0 += u64::from(exact_match(answers[q.question_id.as_str()], q.ground_truth).correct);
        entry.1 += 1;
    }
    Ok(counts)
}
