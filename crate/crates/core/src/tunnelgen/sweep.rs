// SPDX-License-Identifier: MIT OR Apache-2.0

//! Object-size sweep: the two sizes are anti-correlated under a fixed sum
//! while placement, appearance and lighting stay fixed.

use serde::{Deserialize, Serialize};

use super::{build_scene, sample_appearance, scene_stream, DepthPair, SceneInstance, TunnelSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Sweep of the far object's size `s1` with `s2 = total - s1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeSweepConfig<T> {
    pub s1_min: T,
    pub s1_max: T,
    /// Number of equal intervals; the sweep has `intervals + 1` points.
    pub intervals: u32,
    pub total: T,
}

impl<T: Scalar> SizeSweepConfig<T> {
    /// `s1` from 0.10 to 0.30 in 10 steps, `s1 + s2 = 0.4`.
    pub fn standard() -> Self {
        Self {
            s1_min: T::lit(0.10),
            s1_max: T::lit(0.30),
            intervals: 10,
            total: T::lit(0.4),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals == 0 {
            return Err(Error::invalid("size sweep needs at least one interval"));
        }
        if !(self.s1_min > T::zero() && self.s1_max > self.s1_min && self.total > self.s1_max) {
            return Err(Error::invalid(format!(
                "size sweep needs 0 < s1_min < s1_max < total, got ({}, {}, {})",
                self.s1_min, self.s1_max, self.total
            )));
        }
        Ok(())
    }

    /// `(s1, s2)` for every sweep point, ascending in `s1`.
    pub fn pairs(&self) -> Vec<(T, T)> {
        let n = T::from_u32(self.intervals).unwrap_or_else(T::one);
        (0..=self.intervals)
            .map(|k| {
                let k_t = T::from_u32(k).unwrap_or_else(T::zero);
                // Interpolate from both ends so the endpoints are exact.
                let s1 = (self.s1_min * (n - k_t) + self.s1_max * k_t) / n;
                (s1, self.total - s1)
            })
            .collect()
    }
}

/// Position of a scene within a size sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTag<T> {
    pub base_id: String,
    pub step: u32,
    pub s1: T,
    pub s2: T,
}

/// Layout held fixed across one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepBase {
    pub far_theta: u32,
    pub near_theta: u32,
    pub instance_index: u32,
}

/// All sweep variants of one base layout.
pub fn generate_size_sweep<T: Scalar>(
    spec: &TunnelSpec<T>,
    depths: &DepthPair<T>,
    sweep: &SizeSweepConfig<T>,
    base: SweepBase,
    master_seed: u64,
) -> Result<Vec<SceneInstance<T>>> {
    spec.validate()?;
    depths.validate(spec)?;
    sweep.validate()?;
    let SweepBase {
        far_theta: i,
        near_theta: j,
        instance_index: t,
    } = base;
    let mut stream = rng::stream(master_seed, scene_stream(i, j, t));
    let appearance = sample_appearance(&mut stream)?;
    let base_id = format!("sweep-{i:02}-{j:02}-{t:02}");
    sweep
        .pairs()
        .into_iter()
        .enumerate()
        .map(|(step, (s1, s2))| {
            let step = step as u32;
            let tag = SweepTag {
                base_id: base_id.clone(),
                step,
                s1,
                s2,
            };
            build_scene(
                spec,
                depths,
                format!("{base_id}-s{step:02}"),
                (i, j, t),
                &appearance,
                (s1, s2),
                Some(tag),
            )
        })
        .collect()
}

/// Sweeps every cell of the angular grid, `instances_per_cell` base layouts
/// per cell, ordered by `(i, j, t, step)`.
pub fn generate_size_sweep_grid<T: Scalar>(
    spec: &TunnelSpec<T>,
    depths: &DepthPair<T>,
    sweep: &SizeSweepConfig<T>,
    instances_per_cell: u32,
    master_seed: u64,
) -> Result<Vec<SceneInstance<T>>> {
    if instances_per_cell == 0 {
        return Err(Error::invalid("instances per cell must be at least 1"));
    }
    let mut scenes = Vec::new();
    for i in 0..spec.angular_slots {
        for j in 0..spec.angular_slots {
            for t in 0..instances_per_cell {
                let base = SweepBase {
                    far_theta: i,
                    near_theta: j,
                    instance_index: t,
                };
                scenes.extend(generate_size_sweep(spec, depths, sweep, base, master_seed)?);
            }
        }
    }
    Ok(scenes)
}
