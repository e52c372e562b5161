// SPDX-License-Identifier: MIT OR Apache-2.0

//! Round trips and error reporting of the interchange formats.

use std::collections::BTreeSet;

use vdprobe::heuristics::DEFAULT_THRESHOLD_FRACTION;
use vdprobe::pipeline::*;
use vdprobe::probing::{Category, HiddenStateRecord};
use vdprobe::scoring::LogitRecord;
use vdprobe::tunnelgen::{generate_grid, generate_qa, DepthPair, QuestionRecord, TunnelSpec};
use vdprobe::Error;

fn grid_manifest(instances: u32) -> SceneManifest {
    let tunnel = TunnelSpec::standard();
    let depths = DepthPair::standard();
    SceneManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        master_seed: 42,
        variant: ManifestVariant::Grid,
        tunnel,
        depths,
        instances_per_cell: instances,
        threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
        size_sweep: None,
        scenes: generate_grid(&tunnel, &depths, instances, 42).unwrap(),
    }
}

#[test]
fn full_manifest_rewrites_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let manifest = grid_manifest(12);
    assert_eq!(manifest.scenes.len(), 3072);
    write_manifest(&a, &manifest).unwrap();
    let back = read_manifest(&a).unwrap();
    assert_eq!(back, manifest);
    write_manifest(&b, &back).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(std::fs::read(&a).unwrap().ends_with(b"}\n"));
}

#[test]
fn manifest_rejects_unknown_fields_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    write_manifest(&p, &grid_manifest(1)).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();

    std::fs::write(&p, text.replacen("{\n", "{\n  \"surprise\": 1,\n", 1)).unwrap();
    assert!(matches!(read_manifest(&p).unwrap_err(), Error::Format { .. }));

    std::fs::write(&p, text.replace("\"schema_version\": 1", "\"schema_version\": 2")).unwrap();
    assert!(matches!(
        read_manifest(&p).unwrap_err(),
        Error::Version { found: 2, expected: 1 }
    ));

    let dup = text.replacen("tunnel-00-00-00\"", "tunnel-00-01-00\"", 1);
    std::fs::write(&p, dup).unwrap();
    assert!(read_manifest(&p).is_err());
}

#[test]
fn record_streams_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = grid_manifest(1);
    let qa: Vec<QuestionRecord> = manifest.scenes.iter().flat_map(|s| generate_qa(s).unwrap()).collect();
    let qa_path = dir.path().join("qa.jsonl");
    write_jsonl(&qa_path, &qa).unwrap();
    assert_eq!(read_questions(&qa_path).unwrap(), qa);
    let text = std::fs::read_to_string(&qa_path).unwrap();
    assert_eq!(text.lines().count(), 1024);
    assert!(text.ends_with('\n') && !text.contains('\r'));

    let logits = vec![
        LogitRecord {
            question_id: qa[0].question_id.clone(),
            logit_yes: 0.125,
            logit_no: -3.5,
            answer_text: Some("Yes".into()),
        },
        LogitRecord {
            question_id: qa[1].question_id.clone(),
            logit_yes: 1e-7,
            logit_no: 2.0,
            answer_text: None,
        },
    ];
    let lp = dir.path().join("logits.jsonl");
    write_jsonl(&lp, &logits).unwrap();
    assert_eq!(read_logits(&lp).unwrap(), logits);
    check_logit_references(&logits, &qa).unwrap();
}

#[test]
fn duplicate_and_dangling_records() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("logits.jsonl");
    std::fs::write(
        &lp,
        "{\"question_id\":\"q1\",\"logit_yes\":1,\"logit_no\":0}\n{\"question_id\":\"q1\",\"logit_yes\":1,\"logit_no\":0}\n",
    )
    .unwrap();
    assert!(matches!(read_logits(&lp).unwrap_err(), Error::DuplicateId { .. }));

    let logits = vec![LogitRecord {
        question_id: "nobody-q9".to_owned(),
        logit_yes: 0.0,
        logit_no: 0.0,
        answer_text: None,
    }];
    let err = check_logit_references(&logits, &[]).unwrap_err();
    assert!(err.to_string().contains("nobody-q9"), "{err}");
}

#[test]
fn malformed_line_reports_location_and_id() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ann.jsonl");
    std::fs::write(
        &p,
        "{\"example_id\":\"a\",\"relation\":\"left\",\"objects\":[\"cup\",\"box\"]}\n{\"example_id\":\"b\",\"relation\":\"sideways\"}\n",
    )
    .unwrap();
    let err = read_annotations(&p).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("ann.jsonl:2") && msg.contains("record `b`"), "{msg}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn annotations_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ann.jsonl");
    let records = vec![
        AnnotationRecord {
            example_id: "d".into(),
            relation: None,
            far_center_v: Some(120.5),
            near_center_v: Some(300.0),
            image_height: Some(480),
            objects: vec![],
            options: vec![],
            correct_option: None,
        },
        AnnotationRecord {
            example_id: "r".into(),
            relation: Some(Category::Close),
            far_center_v: None,
            near_center_v: None,
            image_height: None,
            objects: vec![],
            options: vec!["chair".into(), "lamp".into(), "sofa".into()],
            correct_option: Some(2),
        },
    ];
    write_jsonl(&p, &records).unwrap();
    assert_eq!(read_annotations(&p).unwrap(), records);
}

fn hidden_fixture() -> Vec<HiddenStateRecord<f32>> {
    let mut out = Vec::new();
    for layer in 0..2u32 {
        for q in 0..3u32 {
            out.push(HiddenStateRecord {
                question_id: format!("question-{q}"),
                layer,
                vector: (0..4).map(|k| (layer as f32) - 0.25 * (q * 4 + k) as f32).collect(),
            });
        }
    }
    out
}

#[test]
fn hidden_state_file_cardinality_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.sprb");
    write_hidden_states(&p, 4, &hidden_fixture()).unwrap();
    let (header, all) = read_hidden_states(&p, None).unwrap();
    assert_eq!(
        header,
        SprbHeader {
            version: SPRB_VERSION,
            dim: 4,
            record_count: 6
        }
    );
    assert_eq!(all.len(), 6);
    assert!(all.iter().all(|r| r.vector.len() == 4));
    let widened: Vec<Vec<f64>> = hidden_fixture()
        .into_iter()
        .map(|r| r.vector.into_iter().map(f64::from).collect())
        .collect();
    assert_eq!(all.iter().map(|r| r.vector.clone()).collect::<Vec<_>>(), widened);

    let (_, layer1) = read_hidden_states(&p, Some(BTreeSet::from([1]))).unwrap();
    assert_eq!(layer1.len(), 3);
    let streamed: Vec<_> = SprbReader::open(&p).unwrap().with_layers(BTreeSet::from([0])).collect();
    assert_eq!(streamed.len(), 3);
}

#[test]
fn hidden_state_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.sprb");
    let bytes = encode_hidden_states(4, &hidden_fixture()).unwrap();

    std::fs::write(&p, &bytes[..bytes.len() - 30]).unwrap();
    let msg = read_hidden_states(&p, None).unwrap_err().to_string();
    assert!(msg.contains("declares 6 records"), "{msg}");

    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"XXXX");
    std::fs::write(&p, &bad).unwrap();
    assert!(matches!(
        read_hidden_states(&p, None).unwrap_err(),
        Error::Format { .. }
    ));

    let missing = dir.path().join("absent.sprb");
    assert!(matches!(
        read_hidden_states(&missing, None).unwrap_err(),
        Error::Io { .. }
    ));
}

#[test]
fn report_digests_ignore_location() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let sub = dir.path().join("sub");
    std::fs::create_dir(&sub).unwrap();
    let b = sub.join("b.txt");
    std::fs::write(&a, "same").unwrap();
    std::fs::write(&b, "same").unwrap();
    assert_eq!(
        InputDigest::of_file("x", &a).unwrap(),
        InputDigest::of_file("x", &b).unwrap()
    );
}
