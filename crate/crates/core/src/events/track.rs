//! Centroid/velocity/acceleration tracks per ball.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math::Vec2;
use crate::{FrameIdx, ObjId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackPoint {
    pub centroid: Vec2,
    /// Defined only when this frame and the previous one both have centroids.
    pub velocity: Option<Vec2>,
    /// Defined only with three consecutive centroids.
    pub accel: Option<Vec2>,
}

/// Per-ball, per-frame kinematic track built from mask centroids.
///
/// `observe_frame` replaces the data for a frame, so re-processing a revised
/// frame updates the track in place; derived quantities at the frame and its
/// two successors are refreshed to stay consistent.
#[derive(Clone, Debug, Default)]
pub struct BallTracks {
    tracks: BTreeMap<ObjId, BTreeMap<FrameIdx, TrackPoint>>,
}

impl BallTracks {
    pub fn new() -> Self {
        BallTracks::default()
    }

    pub fn observe_frame(&mut self, frame: FrameIdx, centroids: &BTreeMap<ObjId, Vec2>) {
        for (&id, &c) in centroids {
            let track = self.tracks.entry(id).or_default();
            track.insert(
                frame,
                TrackPoint {
                    centroid: c,
                    velocity: None,
                    accel: None,
                },
            );
        }
        let ids: Vec<ObjId> = self.tracks.keys().copied().collect();
        for id in ids {
            if !centroids.contains_key(&id) {
                self.tracks.get_mut(&id).unwrap().remove(&frame);
            }
            for f in frame..=frame + 2 {
                self.refresh_derived(id, f);
            }
        }
    }

    fn refresh_derived(&mut self, id: ObjId, frame: FrameIdx) {
        let track = self.tracks.get_mut(&id).unwrap();
        let c_prev = track.get(&(frame - 1)).map(|p| p.centroid);
        let v_prev = track.get(&(frame - 1)).and_then(|p| p.velocity);
        if let Some(point) = track.get_mut(&frame) {
            point.velocity = c_prev.map(|cp| point.centroid - cp);
            point.accel = match (point.velocity, v_prev) {
                (Some(v), Some(vp)) => Some(v - vp),
                _ => None,
            };
        }
    }

    pub fn ball_ids(&self) -> Vec<ObjId> {
        self.tracks.keys().copied().collect()
    }

    pub fn present(&self, id: ObjId, frame: FrameIdx) -> bool {
        self.tracks
            .get(&id)
            .map(|t| t.contains_key(&frame))
            .unwrap_or(false)
    }

    pub fn centroid(&self, id: ObjId, frame: FrameIdx) -> Option<Vec2> {
        self.tracks.get(&id)?.get(&frame).map(|p| p.centroid)
    }

    pub fn velocity(&self, id: ObjId, frame: FrameIdx) -> Option<Vec2> {
        self.tracks.get(&id)?.get(&frame)?.velocity
    }

    pub fn accel(&self, id: ObjId, frame: FrameIdx) -> Option<Vec2> {
        self.tracks.get(&id)?.get(&frame)?.accel
    }

    pub fn frames_of(&self, id: ObjId) -> Vec<FrameIdx> {
        self.tracks
            .get(&id)
            .map(|t| t.keys().copied().collect())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    fn obs(tracks: &mut BallTracks, frame: FrameIdx, pts: &[(ObjId, f64, f64)]) {
        let map: BTreeMap<ObjId, Vec2> = pts
            .iter()
            .map(|&(id, x, y)| (id, Vec2::new(x, y)))
            .collect();
        tracks.observe_frame(frame, &map);
    }

    #[test]
    fn velocity_needs_consecutive_frames() {
        let mut t = BallTracks::new();
        obs(&mut t, 0, &[(1, 0.0, 0.0)]);
        obs(&mut t, 1, &[(1, 3.0, 4.0)]);
        obs(&mut t, 2, &[(1, 6.0, 8.0)]);
        assert_eq!(t.velocity(1, 0), None);
        assert_eq!(t.velocity(1, 1), Some(Vec2::new(3.0, 4.0)));
        assert_eq!(t.accel(1, 1), None);
        assert_eq!(t.accel(1, 2), Some(Vec2::ZERO));

        // A gap at frame 3 kills velocity at 4 but not at 5.
        obs(&mut t, 3, &[]);
        obs(&mut t, 4, &[(1, 12.0, 16.0)]);
        obs(&mut t, 5, &[(1, 15.0, 20.0)]);
        assert!(!t.present(1, 3));
        assert_eq!(t.velocity(1, 4), None);
        assert_eq!(t.velocity(1, 5), Some(Vec2::new(3.0, 4.0)));
        assert_eq!(t.accel(1, 5), None);
    }

    #[test]
    fn revision_updates_derived_values() {
        let mut t = BallTracks::new();
        obs(&mut t, 0, &[(1, 0.0, 0.0)]);
        obs(&mut t, 1, &[(1, 5.0, 0.0)]);
        obs(&mut t, 2, &[(1, 10.0, 0.0)]);
        assert_eq!(t.velocity(1, 1), Some(Vec2::new(5.0, 0.0)));

        // Revised frame 1: centroid corrected, derived values follow at 1 and 2.
        obs(&mut t, 1, &[(1, 4.0, 0.0)]);
        assert_eq!(t.velocity(1, 1), Some(Vec2::new(4.0, 0.0)));
        assert_eq!(t.velocity(1, 2), Some(Vec2::new(6.0, 0.0)));
        assert_eq!(t.accel(1, 2), Some(Vec2::new(2.0, 0.0)));
    }
}
