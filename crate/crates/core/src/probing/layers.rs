// SPDX-License-Identifier: MIT OR Apache-2.0

//! Choosing a representative layer and checking how much the cross-model
//! ranking depends on that choice.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{spearman, Axis, CoherenceReport};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{compensated_mean, Scalar};

/// Knobs of the layer-selection rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    /// A layer is near an axis' peak when its coherence is at least
    /// `max - (1 - plateau_fraction) * |max|`.
    pub plateau_fraction: f64,
    /// Width of the centered VD-EI window (clipped at the ends).
    pub vd_window: usize,
    /// Population variance of the window below which VD-EI counts as stable.
    pub stability_tol: f64,
    /// Excluded final band: the last `max(min_final_band, ceil(fraction * L))` layers.
    pub final_band_fraction: f64,
    pub min_final_band: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            plateau_fraction: 0.9,
            vd_window: 3,
            stability_tol: 0.01,
            final_band_fraction: 0.05,
            min_final_band: 2,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.plateau_fraction > 0.0 && self.plateau_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "plateau_fraction must lie in (0, 1], got {}",
                self.plateau_fraction
            )));
        }
        if self.vd_window == 0 {
            return Err(Error::invalid("vd_window must be positive"));
        }
        if !(self.stability_tol >= 0.0 && self.stability_tol.is_finite()) {
            return Err(Error::invalid(format!(
                "stability_tol must be non-negative, got {}",
                self.stability_tol
            )));
        }
        if !(0.0..1.0).contains(&self.final_band_fraction) {
            return Err(Error::invalid(format!(
                "final_band_fraction must lie in [0, 1), got {}",
                self.final_band_fraction
            )));
        }
        Ok(())
    }

    /// Number of trailing layers excluded for a model with `total_layers`.
    pub fn final_band(&self, total_layers: usize) -> usize {
        let scaled = (self.final_band_fraction * total_layers as f64).ceil() as usize;
        scaled.max(self.min_final_band)
    }
}

/// Which rule fixed the selected layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Deepest plateau layer with a stable VD-EI.
    VdEiStability,
    /// No plateau layer had a stable VD-EI; deepest plateau layer.
    CoherencePlateau,
    /// The joint plateau was empty outside the final band; deepest layer
    /// near the peak of any axis.
    RelaxedUnion,
}

/// Per-layer evaluation of the selection rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace<T> {
    pub layer: u32,
    /// Near-peak flags in horizontal, vertical, distance order; `None` for
    /// an axis that is undefined at every layer.
    pub near_peak: [Option<bool>; 3],
    pub in_final_band: bool,
    pub vd_ei_window_variance: Option<T>,
    pub stable: bool,
    pub candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSelectionReport<T> {
    pub selected_layer: u32,
    pub candidate_range: Vec<u32>,
    pub total_layers: u32,
    pub final_band: Vec<u32>,
    pub rule: SelectionRule,
    pub relaxed_to_union: bool,
    /// Every layer was near every axis peak, so the plateau carried no
    /// information.
    pub plateau_covers_all: bool,
    pub warnings: Vec<String>,
    pub trace: Vec<LayerTrace<T>>,
    pub trajectories: Vec<CoherenceReport<T>>,
}

fn near_peak_flags<T: Scalar>(trajectories: &[CoherenceReport<T>], axis: Axis, fraction: T) -> Option<Vec<bool>> {
    let values: Vec<Option<T>> = trajectories.iter().map(|r| r.coherence(axis)).collect();
    let max = values.iter().flatten().copied().reduce(T::max)?;
    let threshold = max - (T::one() - fraction) * max.abs();
    Some(values.iter().map(|v| v.is_some_and(|v| v >= threshold)).collect())
}

fn window_variance<T: Scalar>(values: &[Option<T>], center: usize, width: usize) -> Option<T> {
    let lo = center.saturating_sub((width - 1) / 2);
    let hi = (lo + width).min(values.len());
    let window: Vec<T> = values[lo..hi].iter().copied().collect::<Option<_>>()?;
    let mean = compensated_mean(window.iter().copied())?;
    compensated_mean(window.iter().map(|&v| (v - mean) * (v - mean)))
}

/// Picks `L*` from one coherence report per layer (layers `0..L` in order).
pub fn select_layer<T: Scalar>(
    trajectories: &[CoherenceReport<T>],
    config: &SelectionConfig,
) -> Result<LayerSelectionReport<T>> {
    config.validate()?;
    let total = trajectories.len();
    if let Some((i, r)) = trajectories.iter().enumerate().find(|(i, r)| r.layer as usize != *i) {
        return Err(Error::invalid(format!(
            "trajectory entry {i} is for layer {} (expected {i})",
            r.layer
        )));
    }
    let band = config.final_band(total);
    if band >= total {
        return Err(Error::invalid(format!(
            "{total} layers leave nothing outside the final band of {band}"
        )));
    }
    let fraction = T::lit(config.plateau_fraction);
    let flags: Vec<Option<Vec<bool>>> = Axis::ALL
        .iter()
        .map(|&a| near_peak_flags(trajectories, a, fraction))
        .collect();
    if flags.iter().all(Option::is_none) {
        return Err(Error::invalid("no axis coherence is defined at any layer"));
    }
    let vd: Vec<Option<T>> = trajectories.iter().map(|r| r.vd_ei).collect();
    let tol = T::lit(config.stability_tol);

    let trace: Vec<LayerTrace<T>> = (0..total)
        .map(|i| {
            let near_peak = [0, 1, 2].map(|a| flags[a].as_ref().map(|f| f[i]));
            let variance = window_variance(&vd, i, config.vd_window);
            let in_final_band = i >= total - band;
            LayerTrace {
                layer: i as u32,
                near_peak,
                in_final_band,
                vd_ei_window_variance: variance,
                stable: variance.is_some_and(|v| v < tol),
                candidate: !in_final_band && near_peak.iter().flatten().all(|&b| b),
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let plateau_covers_all = trace.iter().all(|t| t.near_peak.iter().flatten().all(|&b| b));
    if plateau_covers_all {
        warnings.push("every layer is near the peak of every axis; the plateau does not discriminate".to_owned());
    }
    let mut candidates: Vec<usize> = trace.iter().filter(|t| t.candidate).map(|t| t.layer as usize).collect();
    let relaxed_to_union = candidates.is_empty();
    let mut trace = trace;
    if relaxed_to_union {
        warnings.push("no layer outside the final band is near all axis peaks; relaxed to any axis".to_owned());
        candidates = trace
            .iter()
            .filter(|t| !t.in_final_band && t.near_peak.iter().flatten().any(|&b| b))
            .map(|t| t.layer as usize)
            .collect();
        if candidates.is_empty() {
            warnings.push("no axis peaks outside the final band; using all non-final layers".to_owned());
            candidates = (0..total - band).collect();
        }
        for &c in &candidates {
            trace[c].candidate = true;
        }
    }
    let stable_deepest = candidates.iter().rev().find(|&&c| trace[c].stable).copied();
    let (selected, rule) = match (stable_deepest, relaxed_to_union) {
        (Some(c), false) => (c, SelectionRule::VdEiStability),
        (None, false) => (*candidates.last().expect("nonempty"), SelectionRule::CoherencePlateau),
        (Some(c), true) => (c, SelectionRule::RelaxedUnion),
        (None, true) => (*candidates.last().expect("nonempty"), SelectionRule::RelaxedUnion),
    };
    Ok(LayerSelectionReport {
        selected_layer: selected as u32,
        candidate_range: candidates.iter().map(|&c| c as u32).collect(),
        total_layers: total as u32,
        final_band: ((total - band) as u32..total as u32).collect(),
        rule,
        relaxed_to_union,
        plateau_covers_all,
        warnings,
        trace,
        trajectories: trajectories.to_vec(),
    })
}

/// Distance-axis coherence per layer of one model, with its candidate range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCoherence<T> {
    pub name: String,
    pub coh_d: Vec<T>,
    pub candidate_range: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport<T> {
    pub samples: usize,
    /// One entry per sample; `None` where the sampled values were all tied.
    pub rho_values: Vec<Option<T>>,
    /// Mean over the defined entries.
    pub mean_rho: Option<T>,
    pub min_rho: Option<T>,
    pub max_rho: Option<T>,
    pub undefined: usize,
}

/// Samples one layer per model uniformly from its candidate range, ranks the
/// models by the sampled `Coh_D` and correlates that with `reference`.
pub fn layer_robustness<T: Scalar>(
    models: &[ModelCoherence<T>],
    reference: &[T],
    samples: usize,
    seed: u64,
) -> Result<RobustnessReport<T>> {
    if models.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least two models, got {}",
            models.len()
        )));
    }
    if reference.len() != models.len() {
        return Err(Error::invalid(format!(
            "{} reference values for {} models",
            reference.len(),
            models.len()
        )));
    }
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let mut names = BTreeSet::new();
    for m in models {
        if !names.insert(m.name.as_str()) {
            return Err(Error::DuplicateId {
                kind: "model",
                id: m.name.clone(),
            });
        }
        if m.candidate_range.is_empty() {
            return Err(Error::invalid(format!(
                "model `{}` has an empty candidate range",
                m.name
            )));
        }
        if let Some(&l) = m.candidate_range.iter().find(|&&l| l as usize >= m.coh_d.len()) {
            return Err(Error::invalid(format!(
                "model `{}`: candidate layer {l} beyond its {} layers",
                m.name,
                m.coh_d.len()
            )));
        }
    }
    let mut stream = rng::keyed_stream(seed, "layer-robustness");
    let mut sampled = vec![T::zero(); models.len()];
    let mut rho_values = Vec::with_capacity(samples);
    for _ in 0..samples {
        for (slot, m) in sampled.iter_mut().zip(models) {
            let layer = m.candidate_range[stream.gen_range(0..m.candidate_range.len())];
            *slot = m.coh_d[layer as usize];
        }
        rho_values.push(spearman(&sampled, reference)?);
    }
    let defined: Vec<T> = rho_values.iter().flatten().copied().collect();
    Ok(RobustnessReport {
        samples,
        mean_rho: compensated_mean(defined.iter().copied()),
        min_rho: defined.iter().copied().reduce(T::min),
        max_rho: defined.iter().copied().reduce(T::max),
        undefined: samples - defined.len(),
        rho_values,
    })
}
