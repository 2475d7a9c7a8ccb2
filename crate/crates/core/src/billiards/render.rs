//! Mask rendering for scene descriptors.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::mask::Mask;
use crate::math::{ceil, floor, Vec2};
use crate::{FrameIdx, ObjId};

/// One ball as visible in a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneBall {
    pub id: ObjId,
    pub pos: Vec2,
    pub vel: Vec2,
    pub radius: f64,
}

/// Immutable scene descriptor: the payload the backend segments. Pocketed
/// and not-yet-appeared balls are absent.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneFrame {
    pub frame_idx: FrameIdx,
    /// Motion-stretch coefficient: the rendered major axis grows by
    /// `1 + stretch * speed` along the velocity direction.
    pub stretch: f64,
    pub balls: Vec<SceneBall>,
}

/// Renders every visible ball as a velocity-aligned ellipse.
pub fn render_masks(scene: &SceneFrame) -> BTreeMap<ObjId, Mask> {
    scene
        .balls
        .iter()
        .map(|b| (b.id, render_ball(b, scene.stretch)))
        .collect()
}

pub fn render_ball(ball: &SceneBall, stretch: f64) -> Mask {
    let speed = ball.vel.norm();
    let major = ball.radius * (1.0 + stretch * speed);
    let minor = ball.radius;
    let axis = ball.vel.unit();
    let ortho = axis.perp();

    let reach = major.max(minor);
    let x0 = floor(ball.pos.x - reach) as i32;
    let y0 = floor(ball.pos.y - reach) as i32;
    let x1 = ceil(ball.pos.x + reach) as i32;
    let y1 = ceil(ball.pos.y + reach) as i32;

    Mask::from_fn(
        x0,
        y0,
        (x1 - x0 + 1) as u32,
        (y1 - y0 + 1) as u32,
        |x, y| {
            let d = Vec2::new(x as f64 - ball.pos.x, y as f64 - ball.pos.y);
            let t = d.dot(axis) / major;
            let s = d.dot(ortho) / minor;
            t * t + s * s <= 1.0
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::abs;

    fn ball(pos: (f64, f64), vel: (f64, f64), radius: f64) -> SceneBall {
        SceneBall {
            id: 1,
            pos: Vec2::new(pos.0, pos.1),
            vel: Vec2::new(vel.0, vel.1),
            radius,
        }
    }

    #[test]
    fn stationary_ball_renders_circle_centered_on_position() {
        let m = render_ball(&ball((50.0, 40.0), (0.0, 0.0), 9.0), 0.1);
        let (cx, cy) = m.centroid().unwrap();
        assert!(abs(cx - 50.0) < 1.0 && abs(cy - 40.0) < 1.0);
        let (x0, y0, x1, y1) = m.bounds().unwrap();
        // Circular: equal extents on both axes.
        assert_eq!(x1 - x0, y1 - y0);
    }

    #[test]
    fn moving_ball_stretches_along_velocity() {
        let speed = 10.0;
        let c = 0.1;
        let m = render_ball(&ball((100.0, 100.0), (speed, 0.0), 10.0), c);
        let (x0, y0, x1, y1) = m.bounds().unwrap();
        let w = (x1 - x0 + 1) as f64;
        let h = (y1 - y0 + 1) as f64;
        // Axis ratio approximates 1 + c*speed (rasterization gives +-1px).
        let ratio = w / h;
        assert!(abs(ratio - (1.0 + c * speed)) < 0.15, "ratio {ratio}");
        // Stretch is symmetric about the center: centroid stays put.
        let (cx, cy) = m.centroid().unwrap();
        assert!(abs(cx - 100.0) < 1.0 && abs(cy - 100.0) < 1.0);
    }

    #[test]
    fn pocketed_ball_absent_from_map() {
        let scene = SceneFrame {
            frame_idx: 3,
            stretch: 0.0,
            balls: alloc::vec![ball((30.0, 30.0), (1.0, 0.0), 8.0)],
        };
        let masks = render_masks(&scene);
        assert_eq!(masks.len(), 1);
        let empty = SceneFrame {
            frame_idx: 4,
            stretch: 0.0,
            balls: alloc::vec![],
        };
        assert!(render_masks(&empty).is_empty());
    }
}
