//! Billiards event detection from segmentation masks.
//!
//! Centroid, velocity and acceleration tracks are built from per-frame
//! masks; goal, collision and rebound detectors then judge each frame.
//! Re-processing a frame (after a correcting propagation) replaces the
//! judgments recorded for it, so the event log converges to the latest
//! evidence.

mod detect;
mod geometry;
mod log;
mod track;

pub use detect::{detect_collision, detect_goal, detect_rebound};
pub use geometry::{derive_geometry, GeometryError, TableGeometry};
pub use log::{EventLog, GoalInfo, Recorded};
pub use track::{BallTracks, TrackPoint};

/// Detection thresholds. All are dimensionally anchored to scene scale so
/// scenarios at any resolution behave alike; every one is overridable.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdConfig {
    /// "Near a pocket" radius for goal checks and the jaw fallback.
    pub near_pocket_radius: f64,
    /// Minimum |dv| between consecutive frames that counts as significant.
    pub velocity_change_threshold: f64,
    /// Ball-ball distance that counts as "near" for collision pairing.
    pub proximity_radius: f64,
    /// Allowed relative deviation of the reversed perpendicular component.
    pub perpendicular_reversal_tolerance: f64,
    /// Allowed relative deviation of the parallel component.
    pub parallel_consistency_tolerance: f64,
    /// Inward inset of the rebound buffer zones.
    pub buffer_margin: f64,
}

impl ThresholdConfig {
    /// Defaults derived from scene scale.
    pub fn derived(pocket_radius: f64, ball_radius: f64, friction_decel: f64) -> Self {
        ThresholdConfig {
            near_pocket_radius: 2.0 * pocket_radius,
            velocity_change_threshold: 3.0 * friction_decel,
            proximity_radius: 2.2 * (2.0 * ball_radius),
            perpendicular_reversal_tolerance: 0.30,
            parallel_consistency_tolerance: 0.25,
            buffer_margin: 1.5 * ball_radius,
        }
    }
}
