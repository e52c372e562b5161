// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the built `vdprobe` binary inside `dir`.
pub fn vdprobe(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_vdprobe"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn vdprobe");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Like [`vdprobe`] but panics unless the command succeeds.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let run = vdprobe(dir, args);
    assert_eq!(run.code, 0, "vdprobe {args:?} failed: {}", run.stderr);
    run.stdout
}

pub fn json(path: impl AsRef<Path>) -> Value {
    let text = std::fs::read_to_string(path.as_ref()).expect("read json");
    serde_json::from_str(&text).expect("parse json")
}

pub fn payload(path: impl AsRef<Path>) -> Value {
    json(path)["payload"].clone()
}

pub fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Pairs per category in [`write_probe_fixture`].
pub const PAIRS_PER_CATEGORY: usize = 8;
pub const PROBE_DIM: usize = 16;

/// Writes `annotations.jsonl` and `hidden.sprb` into `dir`.
///
/// Every pair's delta is `±scale·u + noise`, where `u` is `e0` for
/// horizontal pairs, `e1` for vertical ones and the unit vector along
/// `e2 + alpha·e1` for distance pairs. Scales 3, 2 and 1 keep the principal
/// axes apart. `noise[l]` is the uniform noise half-width of layer `l`.
pub fn write_probe_fixture(dir: &Path, alpha: f64, noise: &[f64], seed: u64) {
    use rand::{Rng, SeedableRng};
    use vdprobe::pipeline::{write_hidden_states, write_jsonl, AnnotationRecord};
    use vdprobe::probing::{Category, HiddenStateRecord};

    let mut annotations = Vec::new();
    let mut pairs = Vec::new();
    for category in Category::ALL {
        for i in 0..PAIRS_PER_CATEGORY {
            let id = format!("{}-{i:02}", category.as_str());
            let (objects, options, correct) = match category {
                Category::Far | Category::Close => (
                    vec![],
                    vec![format!("{id}-target"), format!("{id}-other"), format!("{id}-third")],
                    Some(0),
                ),
                _ => (vec![format!("{id}-a"), format!("{id}-b")], vec![], None),
            };
            annotations.push(AnnotationRecord {
                example_id: id.clone(),
                relation: Some(category),
                far_center_v: None,
                near_center_v: None,
                image_height: None,
                objects,
                options,
                correct_option: correct,
            });
            pairs.push((id, category));
        }
    }
    write_jsonl(&dir.join("annotations.jsonl"), &annotations).unwrap();

    let norm = (1.0 + alpha * alpha).sqrt();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for (layer, &sigma) in noise.iter().enumerate() {
        for (id, category) in &pairs {
            let mut direction = vec![0.0; PROBE_DIM];
            match category {
                Category::Left | Category::Right => direction[0] = 3.0,
                Category::Above | Category::Below => direction[1] = 2.0,
                Category::Far | Category::Close => {
                    direction[2] = 1.0 / norm;
                    direction[1] = alpha / norm;
                }
            }
            let sign = if category.is_canonical() { 1.0 } else { -1.0 };
            let base: Vec<f64> = (0..PROBE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let swapped: Vec<f64> = base
                .iter()
                .zip(&direction)
                .map(|(b, u)| b + sign * u + sigma * rng.gen_range(-1.0..1.0))
                .collect();
            records.push(HiddenStateRecord {
                question_id: format!("{id}-orig"),
                layer: layer as u32,
                vector: base,
            });
            records.push(HiddenStateRecord {
                question_id: format!("{id}-swap"),
                layer: layer as u32,
                vector: swapped,
            });
        }
    }
    write_hidden_states(&dir.join("hidden.sprb"), PROBE_DIM as u32, &records).unwrap();
}
