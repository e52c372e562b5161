// SPDX-License-Identifier: MIT OR Apache-2.0

//! Contrastive probing of hidden states: swap pairs, delta vectors, axis
//! coherence, the VD-Entanglement Index, similarity matrices, PCA, layer
//! selection and rank-correlation checks.

mod category;
mod coherence;
mod layers;
mod pairs;
mod pca;
mod spearman;

pub use category::{Axis, Category};
pub use coherence::{
    axis_coherence, category_stats, coherence_report, cosine, delta, pair_deltas, similarity_matrix, vd_ei,
    vd_ei_from_matrix, CategoryStats, CoherenceReport, DeltaVector, MIN_NORM,
};
pub use layers::{
    layer_robustness, select_layer, LayerSelectionReport, LayerTrace, ModelCoherence, RobustnessReport,
    SelectionConfig, SelectionRule,
};
pub use pairs::{build_swap_pairs, ProbeQuestion, RelationExample, SwapPair, SwapPairSet};
pub use pca::{pca, pca_deltas, DeltaPca, PcaResult};
pub use spearman::{average_ranks, spearman};

/// Final-token hidden state of one question at one layer.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HiddenStateRecord<T> {
    pub question_id: String,
    pub layer: u32,
    pub vector: Vec<T>,
}
