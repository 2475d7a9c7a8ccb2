//! The three frame-level event detectors.
//!
//! Each detector re-judges one frame from the current tracks and replaces
//! whatever the log holds for that frame's keys. Velocity estimates lag
//! instantaneous physics by up to one frame (centroids are displacement
//! averages), so a judgment may land one frame after the physical contact;
//! a pair or boundary already recorded on the previous two frames is treated
//! as the same contact, not a new one.

use crate::events::geometry::TableGeometry;
use crate::events::log::{EventLog, GoalInfo};
use crate::events::track::BallTracks;
use crate::events::ThresholdConfig;
use crate::math::abs;
use crate::{FrameIdx, ObjId};

use alloc::collections::BTreeSet;

/// Goal detection, active from frame 2.
///
/// A ball scores into the nearest pocket when it was near that pocket on the
/// previous frame, its previous velocity pointed at the pocket (positive
/// inner product), and it is absent now. A recorded goal is retracted when
/// the ball's mask reappears at or after the goal frame.
pub fn detect_goal(
    tracks: &BallTracks,
    geometry: &TableGeometry,
    frame: FrameIdx,
    log: &mut EventLog,
    frame_rev: u32,
) {
    if frame < 2 {
        return;
    }
    for ball in tracks.ball_ids() {
        if tracks.present(ball, frame) {
            if log.goal(ball).map(|g| g.value.frame <= frame) == Some(true) {
                log.remove_goal(ball);
            }
            continue;
        }
        let judgment = (|| {
            let prev_c = tracks.centroid(ball, frame - 1)?;
            let prev_v = tracks.velocity(ball, frame - 1)?;
            let (pocket, center, dist) = geometry.nearest_pocket(prev_c);
            if dist > geometry.near_pocket_radius {
                return None;
            }
            if (center - prev_c).dot(prev_v) <= 0.0 {
                return None;
            }
            Some(GoalInfo { frame, pocket })
        })();
        match judgment {
            Some(info) => log.set_goal(ball, info, frame_rev),
            None => {
                if log.goal(ball).map(|g| g.value.frame == frame) == Some(true) {
                    log.remove_goal(ball);
                }
            }
        }
    }
}

/// Collision detection, active from frame 3 (acceleration needs three
/// consecutive centroids).
///
/// Triggered per ball by a significant velocity change; the partner must
/// have been closing on the previous frame, show a significant change too
/// with the accelerations pointing apart along the line of centers, and have
/// been near the triggering ball.
pub fn detect_collision(
    tracks: &BallTracks,
    frame: FrameIdx,
    thresholds: &ThresholdConfig,
    log: &mut EventLog,
    frame_rev: u32,
) {
    if frame < 3 {
        return;
    }
    let ids = tracks.ball_ids();
    let mut pairs: BTreeSet<(ObjId, ObjId)> = BTreeSet::new();
    for &a in &ids {
        let (Some(va), Some(va_prev)) = (tracks.velocity(a, frame), tracks.velocity(a, frame - 1))
        else {
            continue;
        };
        if (va - va_prev).norm() <= thresholds.velocity_change_threshold {
            continue;
        }
        for &b in &ids {
            if b == a {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if pairs.contains(&pair) {
                continue;
            }
            // Same pair judged on one of the two previous frames: the same
            // contact seen through the velocity-estimate lag.
            if recent_pair(log, frame, pair) {
                continue;
            }
            let (Some(vb), Some(vb_prev)) =
                (tracks.velocity(b, frame), tracks.velocity(b, frame - 1))
            else {
                continue;
            };
            let (Some(ca_prev), Some(cb_prev)) = (
                tracks.centroid(a, frame - 1),
                tracks.centroid(b, frame - 1),
            ) else {
                continue;
            };
            if ca_prev.distance(cb_prev) > thresholds.proximity_radius {
                continue;
            }
            // Closing before the event: distance to the partner shrinking.
            if (ca_prev - cb_prev).dot(va_prev - vb_prev) >= 0.0 {
                continue;
            }
            if (vb - vb_prev).norm() <= thresholds.velocity_change_threshold {
                continue;
            }
            let (Some(ca), Some(cb)) = (tracks.centroid(a, frame), tracks.centroid(b, frame))
            else {
                continue;
            };
            let line = (cb - ca).unit();
            let acc_a = va - va_prev;
            let acc_b = vb - vb_prev;
            // Mutual impulse: acceleration components along the line of
            // centers carry opposite signs pointing apart.
            if acc_a.dot(line) < 0.0 && acc_b.dot(line) > 0.0 {
                pairs.insert(pair);
            }
        }
    }
    log.set_collisions(frame, pairs, frame_rev);
}

fn recent_pair(log: &EventLog, frame: FrameIdx, pair: (ObjId, ObjId)) -> bool {
    (1..=2).any(|d| {
        log.collision_pairs_at(frame - d)
            .map(|p| p.contains(&pair))
            .unwrap_or(false)
    })
}

/// Rebound detection, active from frame 3.
///
/// Armed when the ball is inside a rail buffer zone. The regular ruling
/// needs approach then departure with the perpendicular component
/// essentially reversed (or the parallel one consistent). If the approach
/// happened but the departure looks irregular, the pocket-jaw fallback
/// applies: near a pocket, significant velocity change, previous velocity
/// not aimed at another ball, and no collision recorded for the ball on this
/// frame.
pub fn detect_rebound(
    tracks: &BallTracks,
    geometry: &TableGeometry,
    frame: FrameIdx,
    thresholds: &ThresholdConfig,
    log: &mut EventLog,
    frame_rev: u32,
) {
    if frame < 3 {
        return;
    }
    let ids = tracks.ball_ids();
    for &ball in &ids {
        let data = (|| {
            let c_prev = tracks.centroid(ball, frame - 1)?;
            let c_now = tracks.centroid(ball, frame)?;
            let v_prev = tracks.velocity(ball, frame - 1)?;
            let v_now = tracks.velocity(ball, frame)?;
            let boundary = geometry.zone_of(c_prev).or_else(|| geometry.zone_of(c_now))?;
            Some((c_prev, v_prev, v_now, boundary))
        })();
        let Some((c_prev, v_prev, v_now, boundary)) = data else {
            log.clear_rebound(frame, ball);
            continue;
        };
        if (1..=2).any(|d| log.rebound_at(frame - d, ball) == Some(boundary)) {
            log.clear_rebound(frame, ball);
            continue;
        }

        let perp_in = geometry.toward_component(v_prev, boundary);
        let perp_out = geometry.toward_component(v_now, boundary);
        let approached = perp_in > 0.0;
        let departing = perp_out < 0.0;
        let reversed = abs(perp_out + perp_in)
            <= thresholds.perpendicular_reversal_tolerance * abs(perp_in);
        let par_prev = geometry.parallel_component(v_prev, boundary);
        let par_now = geometry.parallel_component(v_now, boundary);
        let parallel_ok =
            abs(par_now - par_prev) <= thresholds.parallel_consistency_tolerance * v_prev.norm();

        if approached && departing && (reversed || parallel_ok) {
            log.set_rebound(frame, ball, boundary, frame_rev);
            continue;
        }

        if approached && jaw_fallback(tracks, geometry, thresholds, log, frame, ball, c_prev, v_prev, v_now, &ids)
        {
            log.set_rebound(frame, ball, boundary, frame_rev);
            continue;
        }

        log.clear_rebound(frame, ball);
    }
}

#[allow(clippy::too_many_arguments)]
fn jaw_fallback(
    tracks: &BallTracks,
    geometry: &TableGeometry,
    thresholds: &ThresholdConfig,
    log: &EventLog,
    frame: FrameIdx,
    ball: ObjId,
    c_prev: crate::math::Vec2,
    v_prev: crate::math::Vec2,
    v_now: crate::math::Vec2,
    ids: &[ObjId],
) -> bool {
    let (_, _, pocket_dist) = geometry.nearest_pocket(c_prev);
    if pocket_dist > geometry.near_pocket_radius {
        return false;
    }
    if (v_now - v_prev).norm() <= thresholds.velocity_change_threshold {
        return false;
    }
    // Previous velocity aimed at another ball would point to a collision
    // rather than a jaw contact.
    let dir = v_prev.unit();
    let aimed_at_ball = ids.iter().any(|&o| {
        o != ball
            && tracks
                .centroid(o, frame - 1)
                .map(|co| dir.dot((co - c_prev).unit()) >= 0.9)
                .unwrap_or(false)
    });
    if aimed_at_ball {
        return false;
    }
    !log.ball_collided_at(frame, ball)
}
