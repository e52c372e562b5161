// SPDX-License-Identifier: MIT OR Apache-2.0

//! Consistent / counter / ambiguous labelling of depth examples from the
//! vertical image position of the two objects.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::scalar::Scalar;
use crate::tunnelgen::SceneInstance;

/// Default ambiguity threshold as a fraction of image height.
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.05;

/// Whether the vertical-position shortcut agrees with true depth order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicLabel {
    /// Farther object appears higher in the image.
    Consistent,
    /// Farther object appears lower in the image.
    Counter,
    /// Vertical gap too small to call.
    Ambiguous,
}

impl HeuristicLabel {
    pub const ALL: [HeuristicLabel; 3] = [Self::Consistent, Self::Counter, Self::Ambiguous];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Consistent => "consistent",
            Self::Counter => "counter",
            Self::Ambiguous => "ambiguous",
        }
    }

    /// Label obtained after exchanging which object is farther.
    pub fn swapped(self) -> Self {
        match self {
            Self::Consistent => Self::Counter,
            Self::Counter => Self::Consistent,
            Self::Ambiguous => Self::Ambiguous,
        }
    }
}

impl fmt::Display for HeuristicLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "counter" => Ok(Self::Counter),
            "ambiguous" => Ok(Self::Ambiguous),
            other => Err(Error::invalid(format!("unknown heuristic label `{other}`"))),
        }
    }
}

/// Vertical centers (pixels, `v` downward) of the ground-truth farther and
/// nearer objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedExample<T> {
    pub example_id: String,
    pub far_center_v: T,
    pub near_center_v: T,
    pub image_height: u32,
}

impl<T: Scalar> AnnotatedExample<T> {
    pub fn validate(&self) -> Result<()> {
        if self.image_height == 0 {
            return Err(Error::invalid(format!(
                "example `{}`: image height must be positive",
                self.example_id
            )));
        }
        let h = T::from_u32(self.image_height).unwrap_or_else(T::zero);
        for (name, v) in [
            ("far_center_v", self.far_center_v),
            ("near_center_v", self.near_center_v),
        ] {
            if !(v.is_finite() && v >= T::zero() && v <= h) {
                return Err(Error::invalid(format!(
                    "example `{}`: {name} = {v} outside [0, {}]",
                    self.example_id, self.image_height
                )));
            }
        }
        Ok(())
    }
}

/// Labels one example. `Δy` strictly below `threshold_fraction` of the image
/// height is ambiguous; otherwise the farther object being higher (smaller
/// `v`) makes the example consistent.
pub fn classify<T: Scalar>(example: &AnnotatedExample<T>, threshold_fraction: T) -> Result<HeuristicLabel> {
    example.validate()?;
    if !(threshold_fraction > T::zero() && threshold_fraction < T::one()) {
        return Err(Error::invalid(format!(
            "threshold fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    let height = T::from_u32(example.image_height).unwrap_or_else(T::one);
    // Compare as a ratio so a gap of exactly 5% of e.g. 480 px is not
    // pushed over the threshold by the rounding of 0.05 * 480.
    let gap = (example.far_center_v - example.near_center_v).abs() / height;
    Ok(if gap < threshold_fraction {
        HeuristicLabel::Ambiguous
    } else if example.far_center_v < example.near_center_v {
        HeuristicLabel::Consistent
    } else {
        HeuristicLabel::Counter
    })
}

/// Projects the 3D centers of a generated scene's two objects and labels it.
///
/// The vertical center used is the projection of the object's 3D center,
/// not a rendered silhouette centroid.
pub fn classify_scene<T: Scalar>(
    scene: &SceneInstance<T>,
    camera: &CameraModel<T>,
    threshold_fraction: T,
) -> Result<HeuristicLabel> {
    let far = camera.project(scene.far.placement.center)?;
    let near = camera.project(scene.near.placement.center)?;
    let example = AnnotatedExample {
        example_id: scene.scene_id.clone(),
        far_center_v: far.v,
        near_center_v: near.v,
        image_height: camera.image_height,
    };
    classify(&example, threshold_fraction)
}

/// Distribution of labels over a set of examples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub consistent: usize,
    pub counter: usize,
    pub ambiguous: usize,
}

impl LabelCounts {
    pub fn record(&mut self, label: HeuristicLabel) {
        match label {
            HeuristicLabel::Consistent => self.consistent += 1,
            HeuristicLabel::Counter => self.counter += 1,
            HeuristicLabel::Ambiguous => self.ambiguous += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.consistent + self.counter + self.ambiguous
    }
}

impl FromIterator<HeuristicLabel> for LabelCounts {
    fn from_iter<I: IntoIterator<Item = HeuristicLabel>>(iter: I) -> Self {
        let mut counts = Self::default();
        for label in iter {
            counts.record(label);
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(far: f64, near: f64, height: u32) -> AnnotatedExample<f64> {
        AnnotatedExample {
            example_id: "e".into(),
            far_center_v: far,
            near_center_v: near,
            image_height: height,
        }
    }

    #[test]
    fn basic_cases() {
        assert_eq!(
            classify(&ex(300.0, 600.0, 1000), 0.05).unwrap(),
            HeuristicLabel::Consistent
        );
        assert_eq!(
            classify(&ex(600.0, 300.0, 1000), 0.05).unwrap(),
            HeuristicLabel::Counter
        );
        assert_eq!(
            classify(&ex(500.0, 530.0, 1000), 0.05).unwrap(),
            HeuristicLabel::Ambiguous
        );
    }

    #[test]
    fn gap_exactly_at_threshold_is_not_ambiguous() {
        assert_eq!(
            classify(&ex(500.0, 550.0, 1000), 0.05).unwrap(),
            HeuristicLabel::Consistent
        );
        assert_eq!(classify(&ex(224.0, 200.0, 480), 0.05).unwrap(), HeuristicLabel::Counter);
        assert_eq!(
            classify(&ex(100.0, 116.0, 320), 0.05).unwrap(),
            HeuristicLabel::Consistent
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(classify(&ex(-1.0, 10.0, 100), 0.05).is_err());
        assert!(classify(&ex(1.0, 101.0, 100), 0.05).is_err());
        assert!(classify(&ex(1.0, 10.0, 0), 0.05).is_err());
        assert!(classify(&ex(1.0, 10.0, 100), 0.0).is_err());
        assert!(classify(&ex(1.0, 10.0, 100), 1.0).is_err());
    }

    #[test]
    fn label_round_trips_through_str() {
        for label in HeuristicLabel::ALL {
            assert_eq!(label.as_str().parse::<HeuristicLabel>().unwrap(), label);
        }
        assert!("maybe".parse::<HeuristicLabel>().is_err());
    }

    #[test]
    fn counts() {
        let counts: LabelCounts = [
            HeuristicLabel::Consistent,
            HeuristicLabel::Ambiguous,
            HeuristicLabel::Consistent,
        ]
        .into_iter()
        .collect();
        assert_eq!(
            (counts.consistent, counts.counter, counts.ambiguous, counts.total()),
            (2, 0, 1, 3)
        );
    }

    proptest! {
        #[test]
        fn swapping_roles_flips_label(far in 0.0f64..720.0, near in 0.0f64..720.0) {
            let a = classify(&ex(far, near, 720), 0.05).unwrap();
            let b = classify(&ex(near, far, 720), 0.05).unwrap();
            prop_assert_eq!(b, a.swapped());
        }

        #[test]
        fn raising_threshold_keeps_ambiguous(far in 0.0f64..1000.0, near in 0.0f64..1000.0,
                                             t1 in 0.001f64..0.5, extra in 0.0f64..0.49) {
            let t2 = t1 + extra;
            let a = classify(&ex(far, near, 1000), t1).unwrap();
            let b = classify(&ex(far, near, 1000), t2).unwrap();
            if a == HeuristicLabel::Ambiguous {
                prop_assert_eq!(b, HeuristicLabel::Ambiguous);
            }
        }
    }
}
