// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pinhole projection and the ground-plane elevation relationship.
//!
//! Conventions used throughout the crate:
//!
//! * Camera frame: `x` right, `y` **down**, `z` along the optical axis.
//! * Image frame: origin top-left, `v` increases downward.
//!
//! With the camera at height `H_c` above a flat ground plane and zero tilt, a
//! ground point at depth `Z` sits at camera-frame `y = H_c` and projects
//! `f * H_c / Z` pixels below the principal point. That offset shrinks as `Z`
//! grows, so farther ground points appear higher in the image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Intrinsics plus mounting height of an ideal pinhole camera (no tilt, skew
/// or distortion).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel<T> {
    /// Focal length in pixels.
    pub focal_length: T,
    /// Height of the optical center above the ground plane, meters.
    pub camera_height: T,
    pub image_width: u32,
    pub image_height: u32,
    /// `(u0, v0)` in pixels.
    pub principal_point: (T, T),
}

impl<T: Scalar> CameraModel<T> {
    /// Camera with the principal point at the image center.
    pub fn new(focal_length: T, camera_height: T, image_width: u32, image_height: u32) -> Result<Self> {
        let half = T::lit(0.5);
        let camera = Self {
            focal_length,
            camera_height,
            image_width,
            image_height,
            principal_point: (
                T::from_u32(image_width).unwrap_or_else(T::zero) * half,
                T::from_u32(image_height).unwrap_or_else(T::zero) * half,
            ),
        };
        camera.validate()?;
        Ok(camera)
    }

    pub fn with_principal_point(mut self, u0: T, v0: T) -> Result<Self> {
        self.principal_point = (u0, v0);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length.is_finite() && self.focal_length > T::zero()) {
            return Err(Error::invalid(format!(
                "focal length must be positive and finite, got {}",
                self.focal_length
            )));
        }
        if !(self.camera_height.is_finite() && self.camera_height >= T::zero()) {
            return Err(Error::invalid(format!(
                "camera height must be non-negative and finite, got {}",
                self.camera_height
            )));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {}x{}",
                self.image_width, self.image_height
            )));
        }
        let (u0, v0) = self.principal_point;
        let w = T::from_u32(self.image_width).unwrap_or_else(T::zero);
        let h = T::from_u32(self.image_height).unwrap_or_else(T::zero);
        if !(u0 >= T::zero() && u0 <= w && v0 >= T::zero() && v0 <= h) {
            return Err(Error::invalid(format!(
                "principal point ({u0}, {v0}) lies outside the {}x{} image",
                self.image_width, self.image_height
            )));
        }
        Ok(())
    }

    /// Projects a camera-frame point to pixel coordinates.
    pub fn project(&self, p: Point3<T>) -> Result<ImagePoint<T>> {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::domain(format!(
                "cannot project non-finite point ({}, {}, {})",
                p.x, p.y, p.z
            )));
        }
        if p.z <= T::zero() {
            return Err(Error::domain(format!(
                "cannot project point with non-positive depth z = {}",
                p.z
            )));
        }
        let (u0, v0) = self.principal_point;
        Ok(ImagePoint {
            u: u0 + self.focal_length * p.x / p.z,
            v: v0 + self.focal_length * p.y / p.z,
            depth: p.z,
        })
    }

    /// Image-frame vertical offset below the principal point of a
    /// ground-plane point at `depth`: `f * H_c / depth`.
    pub fn ground_vertical(&self, depth: T) -> Result<T> {
        if !(depth.is_finite() && depth > T::zero()) {
            return Err(Error::domain(format!(
                "ground depth must be positive and finite, got {depth}"
            )));
        }
        Ok(self.focal_length * self.camera_height / depth)
    }

    /// Maps a world point (`Y` up, ground plane `Y = 0`, camera at
    /// `(0, H_c, 0)` looking along `+Z`) into the camera frame used by
    /// [`Self::project`].
    pub fn world_to_camera(&self, world: Point3<T>) -> Point3<T> {
        Point3::new(world.x, self.camera_height - world.y, world.z)
    }
}

/// Point in the camera frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Projected pixel coordinates with the source depth kept for bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagePoint<T> {
    pub u: T,
    pub v: T,
    pub depth: T,
}
