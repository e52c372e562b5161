// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial relation a probing question is about.
///
/// `left`, `above` and `far` are the canonical direction of their axis;
/// `right`, `below` and `close` are the opposite one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Left,
    Right,
    Above,
    Below,
    Far,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
    Distance,
}

impl Category {
    /// Fixed order used for similarity matrices.
    pub const ALL: [Category; 6] = [
        Category::Left,
        Category::Right,
        Category::Above,
        Category::Below,
        Category::Far,
        Category::Close,
    ];

    pub fn axis(self) -> Axis {
        match self {
            Self::Left | Self::Right => Axis::Horizontal,
            Self::Above | Self::Below => Axis::Vertical,
            Self::Far | Self::Close => Axis::Distance,
        }
    }

    pub fn is_canonical(self) -> bool {
        matches!(self, Self::Left | Self::Above | Self::Far)
    }

    pub fn opposite(self) -> Self {
        match self {
            Self::Left => Self::Right,
            Self::Right => Self::Left,
            Self::Above => Self::Below,
            Self::Below => Self::Above,
            Self::Far => Self::Close,
            Self::Close => Self::Far,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Left => "left",
            Self::Right => "right",
            Self::Above => "above",
            Self::Below => "below",
            Self::Far => "far",
            Self::Close => "close",
        }
    }

    pub(crate) fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).expect("category in ALL")
    }
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Horizontal, Axis::Vertical, Axis::Distance];

    pub fn canonical(self) -> Category {
        match self {
            Self::Horizontal => Category::Left,
            Self::Vertical => Category::Above,
            Self::Distance => Category::Far,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown spatial category `{s}`")))
    }
}
