// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scene manifests: the generated scenes plus everything needed to
//! regenerate or render them.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::json::{read_versioned, write_document};
use crate::error::{Error, Result};
use crate::tunnelgen::{DepthPair, SceneInstance, SizeSweepConfig, TunnelSpec};

pub const MANIFEST_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestVariant {
    Grid,
    SizeSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub schema_version: u64,
    pub master_seed: u64,
    pub variant: ManifestVariant,
    /// Includes the camera.
    pub tunnel: TunnelSpec<f64>,
    pub depths: DepthPair<f64>,
    pub instances_per_cell: u32,
    /// Ambiguity threshold the stored labels were computed with.
    pub threshold_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_sweep: Option<SizeSweepConfig<f64>>,
    pub scenes: Vec<SceneInstance<f64>>,
}

impl SceneManifest {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Version {
                found: self.schema_version,
                expected: MANIFEST_SCHEMA_VERSION,
            });
        }
        self.tunnel.validate()?;
        self.depths.validate(&self.tunnel)?;
        match (self.variant, &self.size_sweep) {
            (ManifestVariant::SizeSweep, Some(s)) => s.validate()?,
            (ManifestVariant::SizeSweep, None) => {
                return Err(Error::invalid("size-sweep manifest lacks its sweep configuration"))
            }
            (ManifestVariant::Grid, Some(_)) => {
                return Err(Error::invalid("grid manifest carries a sweep configuration"))
            }
            (ManifestVariant::Grid, None) => {}
        }
        let mut seen = HashSet::new();
        for scene in &self.scenes {
            if !seen.insert(scene.scene_id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "scene",
                    id: scene.scene_id.clone(),
                });
            }
            scene.validate(&self.tunnel)?;
            if (self.variant == ManifestVariant::SizeSweep) != scene.size_sweep.is_some() {
                return Err(Error::invalid(format!(
                    "scene `{}` does not match the manifest variant",
                    scene.scene_id
                )));
            }
        }
        Ok(())
    }
}

pub fn write_manifest(path: &Path, manifest: &SceneManifest) -> Result<()> {
    manifest.validate()?;
    write_document(path, manifest)
}

pub fn read_manifest(path: &Path) -> Result<SceneManifest> {
    let manifest: SceneManifest = read_versioned(path, MANIFEST_SCHEMA_VERSION)?;
    manifest.validate()?;
    Ok(manifest)
}
