//! Scenario description: the self-contained input of one run.

use alloc::vec::Vec;

use crate::billiards::backend::NoiseConfig;
use crate::billiards::TableSpec;
use crate::math::Vec2;
use crate::{FrameIdx, ObjId};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BallSpec {
    pub id: ObjId,
    pub pos: Vec2,
    pub vel: Vec2,
    #[cfg_attr(feature = "serde", serde(default = "default_radius"))]
    pub radius: f64,
    /// Frame at which the ball enters the scene (0 = from the start).
    #[cfg_attr(feature = "serde", serde(default))]
    pub appears_at: FrameIdx,
}

#[cfg(feature = "serde")]
fn default_radius() -> f64 {
    10.0
}

/// Impulse added to a ball's velocity at a given frame.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShotSpec {
    pub frame: FrameIdx,
    pub ball: ObjId,
    pub impulse: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub table: TableSpec,
    pub balls: Vec<BallSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub shots: Vec<ShotSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise: NoiseConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// Motion-stretch coefficient for rendering.
    #[cfg_attr(feature = "serde", serde(default))]
    pub stretch: f64,
    /// Stream length in frames.
    pub frames: usize,
}
