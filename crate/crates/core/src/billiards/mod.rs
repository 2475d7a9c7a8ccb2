//! Deterministic 2-D billiards world.
//!
//! Plays three roles: frame source for the stream, behavioral stand-in for
//! the detector and segmenter backends (with configurable noise), and
//! ground-truth oracle for goal/collision/rebound events. World units map
//! 1:1 to pixels at the default render scale.

mod backend;
mod render;
mod scenario;
mod world;

pub use backend::{BilliardsBackend, NoiseConfig, pocket_obj_id, POCKET_ID_BASE};
pub use render::{render_masks, SceneBall, SceneFrame};
pub use scenario::{BallSpec, Scenario, ShotSpec};
pub use world::{Ball, GroundTruthEvent, World};

use crate::math::Vec2;

/// The six named pockets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PocketName {
    TL,
    TM,
    TR,
    BL,
    BM,
    BR,
}

impl PocketName {
    pub const ALL: [PocketName; 6] = [
        PocketName::TL,
        PocketName::TM,
        PocketName::TR,
        PocketName::BL,
        PocketName::BM,
        PocketName::BR,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PocketName::TL => "TL",
            PocketName::TM => "TM",
            PocketName::TR => "TR",
            PocketName::BL => "BL",
            PocketName::BM => "BM",
            PocketName::BR => "BR",
        }
    }
}

/// The four cushion boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BoundaryName {
    Top,
    Bottom,
    Left,
    Right,
}

impl BoundaryName {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryName::Top => "top",
            BoundaryName::Bottom => "bottom",
            BoundaryName::Left => "left",
            BoundaryName::Right => "right",
        }
    }
}

/// Table geometry and material parameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableSpec {
    pub width: f64,
    pub height: f64,
    pub pocket_radius: f64,
    /// Restitution of the cushion normal component, in [0, 1].
    pub cushion_restitution: f64,
    /// Speed lost per frame to rolling friction (units/frame^2).
    pub friction_decel: f64,
    /// A cushion contact within this many pocket radii of a pocket center
    /// deflects irregularly off the pocket jaw.
    #[cfg_attr(feature = "serde", serde(default = "default_jaw_zone"))]
    pub jaw_zone_scale: f64,
    /// Deflection added to the reflected velocity on a jaw contact, degrees.
    #[cfg_attr(feature = "serde", serde(default = "default_jaw_deflection"))]
    pub jaw_deflection_deg: f64,
}

fn default_jaw_zone() -> f64 {
    2.0
}

fn default_jaw_deflection() -> f64 {
    40.0
}

impl TableSpec {
    pub fn standard(width: f64, height: f64) -> Self {
        TableSpec {
            width,
            height,
            pocket_radius: 20.0,
            cushion_restitution: 0.92,
            friction_decel: 0.6,
            jaw_zone_scale: default_jaw_zone(),
            jaw_deflection_deg: default_jaw_deflection(),
        }
    }

    /// Pocket centers in the standard six-pocket layout: four corners plus
    /// the midpoints of the two long rails. All lie on the table boundary.
    pub fn pockets(&self) -> [(PocketName, Vec2); 6] {
        let (w, h) = (self.width, self.height);
        [
            (PocketName::TL, Vec2::new(0.0, 0.0)),
            (PocketName::TM, Vec2::new(w / 2.0, 0.0)),
            (PocketName::TR, Vec2::new(w, 0.0)),
            (PocketName::BL, Vec2::new(0.0, h)),
            (PocketName::BM, Vec2::new(w / 2.0, h)),
            (PocketName::BR, Vec2::new(w, h)),
        ]
    }
}
