// SPDX-License-Identifier: MIT OR Apache-2.0

//! Interchange formats: scene manifests, JSONL record streams, SPRB
//! hidden-state files and run reports.

mod json;
mod manifest;
mod records;
mod report;
mod sprb;

pub use json::{
    read_document, read_text, read_versioned, to_canonical_line, to_canonical_string, write_atomic, write_document,
};
pub use manifest::{read_manifest, write_manifest, ManifestVariant, SceneManifest, MANIFEST_SCHEMA_VERSION};
pub use records::{
    check_logit_references, read_annotations, read_jsonl, read_logits, read_questions, write_jsonl, AnnotationRecord,
};
pub use report::{read_report, write_report, InputDigest, RunReport, REPORT_SCHEMA_VERSION, TOOL_NAME, TOOL_VERSION};
pub use sprb::{
    decode_hidden_states, encode_hidden_states, read_hidden_states, write_hidden_states, SprbHeader, SprbReader,
    SPRB_MAGIC, SPRB_VERSION,
};
