// SPDX-License-Identifier: MIT OR Apache-2.0

//! Procedural generation of tunnel scenes.
//!
//! A straight corridor with a square cross-section runs along the camera's
//! optical axis. Each scene holds two objects at fixed depths (the first is
//! always the farther one); each object is swept over `angular_slots`
//! positions around the cross-section so the image-plane layout changes while
//! the depth order stays put.
//!
//! Angular convention: slot 0 points straight up, indices increase clockwise
//! as seen from the camera, and slots are uniform in angle. The anchor of a
//! slot is where the ray from the tunnel axis meets the square wall.

mod qa;
mod sweep;

pub use qa::{generate_qa, template_semantics, Answer, Comparison, ObjectRole, QuestionRecord, TEMPLATE_COUNT};
pub use sweep::{generate_size_sweep, generate_size_sweep_grid, SizeSweepConfig, SweepBase, SweepTag};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Point3};
use crate::heuristics::{classify_scene, HeuristicLabel, DEFAULT_THRESHOLD_FRACTION};
use crate::rng;
use crate::scalar::Scalar;

pub const ROUGHNESS_RANGE: (f64, f64) = (0.05, 1.0);
pub const SIZE_SCALE_RANGE: (f64, f64) = (1.0, 1.5);
pub const FAR_BASE_SIZE: f64 = 0.2;
pub const NEAR_BASE_SIZE: f64 = 0.1;
pub const SUN_ROTATION_RANGE: (f64, f64) = (1.25 * PI, 1.75 * PI);
pub const BACKGROUND_INTENSITY: f64 = 0.15;
/// Attempts at drawing a near object whose (color, shape) differs from the far one.
pub const MAX_APPEARANCE_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Sphere,
    Cube,
}

impl Shape {
    pub const ALL: [Shape; 2] = [Shape::Sphere, Shape::Cube];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Cube => "cube",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Cyan,
    Magenta,
    Black,
}

impl Color {
    pub const ALL: [Color; 7] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Cyan,
        Color::Magenta,
        Color::Black,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Red => "red",
            Self::Green => "green",
            Self::Blue => "blue",
            Self::Yellow => "yellow",
            Self::Cyan => "cyan",
            Self::Magenta => "magenta",
            Self::Black => "black",
        }
    }
}

/// Appearance of one object. `size` is the bounding radius of a sphere or
/// the half-edge of a cube, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec<T> {
    pub shape: Shape,
    pub color: Color,
    pub size: T,
    pub roughness: T,
}

impl<T> ObjectSpec<T> {
    /// `"<color> <shape>"`, as used in question text.
    pub fn descriptor(&self) -> String {
        format!("{} {}", self.color.as_str(), self.shape.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement<T> {
    pub theta_index: u32,
    pub depth: T,
    /// Point on the tunnel wall.
    pub anchor: Point3<T>,
    /// Object center, pulled inward from the anchor by the object size.
    pub center: Point3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacedObject<T> {
    pub object: ObjectSpec<T>,
    pub placement: Placement<T>,
}

/// Sky-light parameters recorded for the external renderer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lighting<T> {
    /// Radians.
    pub sun_rotation: T,
    pub background_intensity: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneInstance<T> {
    pub scene_id: String,
    /// `(far theta index, near theta index)`.
    pub cell: (u32, u32),
    pub instance_index: u32,
    pub far: PlacedObject<T>,
    pub near: PlacedObject<T>,
    pub lighting: Lighting<T>,
    pub heuristic_label: HeuristicLabel,
    /// Present only for scenes from the object-size sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_sweep: Option<SweepTag<T>>,
}

impl<T: Scalar> SceneInstance<T> {
    /// Checks the per-scene invariants against the tunnel it was generated in.
    pub fn validate(&self, spec: &TunnelSpec<T>) -> Result<()> {
        let id = &self.scene_id;
        if self.far.placement.depth <= self.near.placement.depth {
            return Err(Error::invalid(format!(
                "scene `{id}`: far object is not farther than near object"
            )));
        }
        if self.cell != (self.far.placement.theta_index, self.near.placement.theta_index) {
            return Err(Error::invalid(format!(
                "scene `{id}`: cell does not match theta indices"
            )));
        }
        if (self.far.object.color, self.far.object.shape) == (self.near.object.color, self.near.object.shape) {
            return Err(Error::invalid(format!("scene `{id}`: objects share (color, shape)")));
        }
        for obj in [&self.far, &self.near] {
            let p = &obj.placement;
            if p.theta_index >= spec.angular_slots {
                return Err(Error::invalid(format!(
                    "scene `{id}`: theta index {} out of range",
                    p.theta_index
                )));
            }
            if !(p.depth > T::zero() && p.depth < spec.length) {
                return Err(Error::invalid(format!(
                    "scene `{id}`: depth {} outside tunnel",
                    p.depth
                )));
            }
            if !(p.anchor.is_finite() && p.center.is_finite()) {
                return Err(Error::invalid(format!("scene `{id}`: non-finite coordinates")));
            }
            let h = spec.half_extent;
            if !(p.center.x.abs() < h && p.center.y.abs() < h) {
                return Err(Error::invalid(format!(
                    "scene `{id}`: object center outside the cross-section"
                )));
            }
            let o = &obj.object;
            if !(o.size > T::zero() && o.size < h) {
                return Err(Error::invalid(format!("scene `{id}`: object size {} invalid", o.size)));
            }
            let (lo, hi) = ROUGHNESS_RANGE;
            if !(o.roughness >= T::lit(lo) && o.roughness <= T::lit(hi)) {
                return Err(Error::invalid(format!(
                    "scene `{id}`: roughness {} outside [{lo}, {hi}]",
                    o.roughness
                )));
            }
        }
        Ok(())
    }
}

/// Tunnel geometry and the camera looking down it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelSpec<T> {
    /// Half the side of the square cross-section, meters.
    pub half_extent: T,
    pub length: T,
    pub angular_slots: u32,
    /// Sits on the tunnel axis with the optical axis along the tunnel.
    pub camera: CameraModel<T>,
}

impl<T: Scalar> TunnelSpec<T> {
    /// 2 m x 2 m cross-section, 12 m long, 16 slots; 800 px focal length at
    /// 1024 x 1024. The camera height is the half-extent, i.e. the floor of
    /// the tunnel is the ground plane.
    pub fn standard() -> Self {
        let camera = CameraModel::new(T::lit(800.0), T::one(), 1024, 1024).expect("default camera is valid");
        Self {
            half_extent: T::one(),
            length: T::lit(12.0),
            angular_slots: 16,
            camera,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_extent.is_finite() && self.half_extent > T::zero()) {
            return Err(Error::invalid(format!(
                "half extent must be positive, got {}",
                self.half_extent
            )));
        }
        if !(self.length.is_finite() && self.length > T::zero()) {
            return Err(Error::invalid(format!(
                "tunnel length must be positive, got {}",
                self.length
            )));
        }
        if self.angular_slots < 4 {
            return Err(Error::invalid(format!(
                "need at least 4 angular slots, got {}",
                self.angular_slots
            )));
        }
        self.camera.validate()
    }
}

/// Fixed depths of the two objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthPair<T> {
    pub z_far: T,
    pub z_near: T,
}

impl<T: Scalar> DepthPair<T> {
    pub fn standard() -> Self {
        Self {
            z_far: T::lit(6.0),
            z_near: T::lit(3.0),
        }
    }

    pub fn validate(&self, spec: &TunnelSpec<T>) -> Result<()> {
        if !(self.z_near > T::zero() && self.z_far > self.z_near) {
            return Err(Error::invalid(format!(
                "depths must satisfy z_far > z_near > 0, got ({}, {})",
                self.z_far, self.z_near
            )));
        }
        if self.z_far >= spec.length {
            return Err(Error::invalid(format!(
                "far depth {} must be inside the {} m tunnel",
                self.z_far, spec.length
            )));
        }
        Ok(())
    }
}

/// Wall anchor of `theta_index` at `depth`.
pub fn angular_position<T: Scalar>(spec: &TunnelSpec<T>, theta_index: u32, depth: T) -> Result<Point3<T>> {
    let slots = spec.angular_slots;
    if theta_index >= slots {
        return Err(Error::invalid(format!(
            "theta index {theta_index} outside [0, {slots})"
        )));
    }
    if !(depth > T::zero() && depth < spec.length) {
        return Err(Error::invalid(format!(
            "depth {depth} outside the open interval (0, {})",
            spec.length
        )));
    }
    // Fold into (-slots/2, slots/2] so k and slots - k use exactly negated
    // angles, which makes left/right mirror pairs bit-exact.
    let signed = if 2 * theta_index > slots {
        i64::from(theta_index) - i64::from(slots)
    } else {
        i64::from(theta_index)
    };
    let two_pi = T::lit(2.0 * PI);
    let angle = two_pi * T::from_i64(signed).unwrap_or_else(T::zero) / T::from_u32(slots).unwrap_or_else(T::one);
    let (sin, cos) = angle.sin_cos();
    // Camera frame has y downward: up is -y, clockwise from up goes to +x.
    let dx = snap_zero(sin);
    let dy = snap_zero(-cos);
    let h = spec.half_extent;
    let (x, y) = if dx.abs() >= dy.abs() {
        (h.copysign(dx), h * dy / dx.abs())
    } else {
        (h * dx / dy.abs(), h.copysign(dy))
    };
    Ok(Point3::new(x, y, depth))
}

fn snap_zero<T: Scalar>(v: T) -> T {
    if v.abs() < T::lit(1e-12) {
        T::zero()
    } else {
        v
    }
}

/// Pulls a wall anchor toward the tunnel axis by `size`, within the
/// cross-section plane.
pub fn place_object<T: Scalar>(anchor: Point3<T>, size: T, spec: &TunnelSpec<T>) -> Result<Point3<T>> {
    if !(size.is_finite() && size > T::zero()) {
        return Err(Error::invalid(format!("object size must be positive, got {size}")));
    }
    if size >= spec.half_extent {
        return Err(Error::invalid(format!(
            "object size {size} reaches the tunnel axis (half extent {})",
            spec.half_extent
        )));
    }
    let radial = (anchor.x * anchor.x + anchor.y * anchor.y).sqrt();
    if radial <= T::zero() {
        return Err(Error::invalid("anchor lies on the tunnel axis"));
    }
    Ok(Point3::new(
        anchor.x - size * anchor.x / radial,
        anchor.y - size * anchor.y / radial,
        anchor.z,
    ))
}

fn placement<T: Scalar>(spec: &TunnelSpec<T>, theta_index: u32, depth: T, size: T) -> Result<Placement<T>> {
    let anchor = angular_position(spec, theta_index, depth)?;
    let center = place_object(anchor, size, spec)?;
    Ok(Placement {
        theta_index,
        depth,
        anchor,
        center,
    })
}

/// Stream number for scene `(i, j, t)`; independent of grid size.
pub(crate) fn scene_stream(i: u32, j: u32, t: u32) -> u64 {
    (u64::from(i) << 42) | (u64::from(j) << 21) | u64::from(t)
}

/// Random per-scene draws, kept separate from geometry so the size sweep can
/// reuse appearance and lighting while overriding sizes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Appearance {
    pub far: (Shape, Color, f64, f64),
    pub near: (Shape, Color, f64, f64),
    pub sun_rotation: f64,
}

pub(crate) fn sample_appearance(rng: &mut ChaCha8Rng) -> Result<Appearance> {
    let far_shape = Shape::ALL[rng.gen_range(0..Shape::ALL.len())];
    let far_color = Color::ALL[rng.gen_range(0..Color::ALL.len())];
    let far_scale = rng.gen_range(SIZE_SCALE_RANGE.0..=SIZE_SCALE_RANGE.1);
    let far_rough = rng.gen_range(ROUGHNESS_RANGE.0..=ROUGHNESS_RANGE.1);

    let mut near_pair = None;
    for _ in 0..MAX_APPEARANCE_ATTEMPTS {
        let shape = Shape::ALL[rng.gen_range(0..Shape::ALL.len())];
        let color = Color::ALL[rng.gen_range(0..Color::ALL.len())];
        if (shape, color) != (far_shape, far_color) {
            near_pair = Some((shape, color));
            break;
        }
    }
    let (near_shape, near_color) = near_pair.ok_or_else(|| {
        Error::invalid(format!(
            "no distinct (color, shape) after {MAX_APPEARANCE_ATTEMPTS} attempts"
        ))
    })?;
    let near_scale = rng.gen_range(SIZE_SCALE_RANGE.0..=SIZE_SCALE_RANGE.1);
    let near_rough = rng.gen_range(ROUGHNESS_RANGE.0..=ROUGHNESS_RANGE.1);
    let sun_rotation = rng.gen_range(SUN_ROTATION_RANGE.0..=SUN_ROTATION_RANGE.1);
    Ok(Appearance {
        far: (far_shape, far_color, far_scale, far_rough),
        near: (near_shape, near_color, near_scale, near_rough),
        sun_rotation,
    })
}

/// Assembles a scene from cell coordinates, sizes and sampled appearance,
/// and labels it from the projected centers.
pub(crate) fn build_scene<T: Scalar>(
    spec: &TunnelSpec<T>,
    depths: &DepthPair<T>,
    scene_id: String,
    (i, j, t): (u32, u32, u32),
    appearance: &Appearance,
    (far_size, near_size): (T, T),
    size_sweep: Option<SweepTag<T>>,
) -> Result<SceneInstance<T>> {
    let (fs, fc, _, fr) = appearance.far;
    let (ns, nc, _, nr) = appearance.near;
    let mut scene = SceneInstance {
        scene_id,
        cell: (i, j),
        instance_index: t,
        far: PlacedObject {
            object: ObjectSpec {
                shape: fs,
                color: fc,
                size: far_size,
                roughness: T::lit(fr),
            },
            placement: placement(spec, i, depths.z_far, far_size)?,
        },
        near: PlacedObject {
            object: ObjectSpec {
                shape: ns,
                color: nc,
                size: near_size,
                roughness: T::lit(nr),
            },
            placement: placement(spec, j, depths.z_near, near_size)?,
        },
        lighting: Lighting {
            sun_rotation: T::lit(appearance.sun_rotation),
            background_intensity: T::lit(BACKGROUND_INTENSITY),
        },
        heuristic_label: HeuristicLabel::Ambiguous,
        size_sweep,
    };
    scene.heuristic_label = classify_scene(&scene, &spec.camera, T::lit(DEFAULT_THRESHOLD_FRACTION))?;
    Ok(scene)
}

/// One scene per `(far slot, near slot, instance)`, in that lexicographic
/// order. Output is a pure function of the arguments.
pub fn generate_grid<T: Scalar>(
    spec: &TunnelSpec<T>,
    depths: &DepthPair<T>,
    instances_per_cell: u32,
    master_seed: u64,
) -> Result<Vec<SceneInstance<T>>> {
    spec.validate()?;
    depths.validate(spec)?;
    if instances_per_cell == 0 {
        return Err(Error::invalid("instances per cell must be at least 1"));
    }
    let slots = spec.angular_slots;
    let mut scenes = Vec::with_capacity((slots * slots * instances_per_cell) as usize);
    for i in 0..slots {
        for j in 0..slots {
            for t in 0..instances_per_cell {
                let mut stream = rng::stream(master_seed, scene_stream(i, j, t));
                let appearance = sample_appearance(&mut stream)?;
                let sizes = (
                    T::lit(FAR_BASE_SIZE * appearance.far.2),
                    T::lit(NEAR_BASE_SIZE * appearance.near.2),
                );
                let id = format!("tunnel-{i:02}-{j:02}-{t:02}");
                scenes.push(build_scene(spec, depths, id, (i, j, t), &appearance, sizes, None)?);
            }
        }
    }
    Ok(scenes)
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shape `{s}`")))
    }
}

impl FromStr for Color {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown color `{s}`")))
    }
}
