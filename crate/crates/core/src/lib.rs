// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tools for measuring whether vision-language models judge depth from
//! vertical image position.
//!
//! * [`geometry`]: pinhole projection and the ground-plane elevation cue.
//! * [`tunnelgen`]: the tunnel benchmark (scene grid, size sweep, QA).
//! * [`heuristics`]: consistent / counter / ambiguous labelling.
//! * [`scoring`]: logit and exact-match correctness, split reports,
//!   heatmaps, Wilson intervals and scripted reference agents.
//! * [`probing`]: swap-pair deltas, axis coherence, VD-EI, PCA and layer
//!   selection over hidden states.
//! * [`pipeline`]: manifests, record streams, SPRB files and reports.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the common types at `f64`.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod heuristics;
pub mod pipeline;
pub mod probing;
pub mod rng;
pub mod scalar;
pub mod scoring;
pub mod tunnelgen;

pub use error::{Error, Result};

pub type Camera = geometry::CameraModel<f64>;
pub type Point = geometry::Point3<f64>;
pub type Tunnel = tunnelgen::TunnelSpec<f64>;
pub type Depths = tunnelgen::DepthPair<f64>;
pub type Scene = tunnelgen::SceneInstance<f64>;
pub type SizeSweep = tunnelgen::SizeSweepConfig<f64>;
pub type Logits = scoring::LogitRecord<f64>;
pub type Splits = scoring::SplitReport<f64>;
pub type Heatmap = scoring::CellHeatmap<f64>;
pub type SweepReport = scoring::SizeSweepReport<f64>;
pub type Delta = probing::DeltaVector<f64>;
pub type Coherence = probing::CoherenceReport<f64>;
pub type Pca = probing::PcaResult<f64>;
pub type HiddenState = probing::HiddenStateRecord<f64>;
pub type LayerSelection = probing::LayerSelectionReport<f64>;
