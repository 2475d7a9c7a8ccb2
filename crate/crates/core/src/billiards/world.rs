//! Physics stepping and the ground-truth event oracle.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::billiards::render::{SceneBall, SceneFrame};
use crate::billiards::scenario::Scenario;
use crate::billiards::{BoundaryName, PocketName, TableSpec};
use crate::math::Vec2;
use crate::{FrameIdx, ObjId};

#[derive(Clone, Debug)]
pub struct Ball {
    pub id: ObjId,
    pub pos: Vec2,
    pub vel: Vec2,
    pub radius: f64,
    pub pocketed: bool,
    /// First frame at which the ball is on the table.
    pub appears_at: FrameIdx,
}

impl Ball {
    fn active(&self, frame: FrameIdx) -> bool {
        !self.pocketed && frame >= self.appears_at
    }
}

/// Oracle events emitted by the physics step, dated at the frame where the
/// post-event state is first visible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroundTruthEvent {
    Goal {
        frame: FrameIdx,
        ball: ObjId,
        pocket: PocketName,
    },
    Collision {
        frame: FrameIdx,
        balls: (ObjId, ObjId),
    },
    Rebound {
        frame: FrameIdx,
        ball: ObjId,
        boundary: BoundaryName,
    },
}

/// The billiards world. Stepping is pure arithmetic over the current state;
/// identical scenarios produce bit-identical histories.
#[derive(Clone, Debug)]
pub struct World {
    pub table: TableSpec,
    balls: Vec<Ball>,
    frame: FrameIdx,
    stretch: f64,
    shots: BTreeMap<FrameIdx, Vec<(ObjId, Vec2)>>,
}

impl World {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let balls = scenario
            .balls
            .iter()
            .map(|b| Ball {
                id: b.id,
                pos: b.pos,
                vel: b.vel,
                radius: b.radius,
                pocketed: false,
                appears_at: b.appears_at,
            })
            .collect();
        let mut shots: BTreeMap<FrameIdx, Vec<(ObjId, Vec2)>> = BTreeMap::new();
        for s in &scenario.shots {
            shots.entry(s.frame).or_default().push((s.ball, s.impulse));
        }
        World {
            table: scenario.table.clone(),
            balls,
            frame: 0,
            stretch: scenario.stretch,
            shots,
        }
    }

    pub fn frame(&self) -> FrameIdx {
        self.frame
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    /// Immutable scene descriptor for the current frame; only balls on the
    /// table appear.
    pub fn snapshot(&self) -> SceneFrame {
        SceneFrame {
            frame_idx: self.frame,
            stretch: self.stretch,
            balls: self
                .balls
                .iter()
                .filter(|b| b.active(self.frame))
                .map(|b| SceneBall {
                    id: b.id,
                    pos: b.pos,
                    vel: b.vel,
                    radius: b.radius,
                })
                .collect(),
        }
    }

    /// Advances one frame and returns the events that occurred during it.
    pub fn step(&mut self) -> Vec<GroundTruthEvent> {
        self.frame += 1;
        let frame = self.frame;
        let mut events = Vec::new();

        if let Some(shots) = self.shots.get(&frame).cloned() {
            for (id, impulse) in shots {
                if let Some(ball) = self.balls.iter_mut().find(|b| b.id == id) {
                    if ball.active(frame) {
                        ball.vel += impulse;
                    }
                }
            }
        }

        for ball in self.balls.iter_mut().filter(|b| b.active(frame)) {
            ball.pos += ball.vel;
        }

        self.resolve_ball_collisions(frame, &mut events);
        self.resolve_pockets(frame, &mut events);
        self.resolve_cushions(frame, &mut events);

        // Friction reduces speed by a fixed decrement per frame.
        let mu = self.table.friction_decel;
        for ball in self.balls.iter_mut().filter(|b| b.active(frame)) {
            let speed = ball.vel.norm();
            if speed > 0.0 {
                let scaled = (speed - mu).max(0.0) / speed;
                ball.vel = ball.vel * scaled;
            }
        }

        events
    }

    /// Equal-mass elastic collisions: the normal velocity components swap,
    /// tangential components are untouched.
    fn resolve_ball_collisions(&mut self, frame: FrameIdx, events: &mut Vec<GroundTruthEvent>) {
        let n = self.balls.len();
        for i in 0..n {
            for j in i + 1..n {
                if !(self.balls[i].active(frame) && self.balls[j].active(frame)) {
                    continue;
                }
                let delta = self.balls[j].pos - self.balls[i].pos;
                let dist = delta.norm();
                let touch = self.balls[i].radius + self.balls[j].radius;
                if dist >= touch || dist == 0.0 {
                    continue;
                }
                let normal = delta.unit();
                let closing = (self.balls[i].vel - self.balls[j].vel).dot(normal);
                if closing <= 0.0 {
                    continue;
                }
                let vi_n = self.balls[i].vel.dot(normal);
                let vj_n = self.balls[j].vel.dot(normal);
                self.balls[i].vel += normal * (vj_n - vi_n);
                self.balls[j].vel += normal * (vi_n - vj_n);
                // Separate to contact so the pair does not re-collide while
                // overlapping on the next step.
                let push = normal * ((touch - dist) / 2.0);
                self.balls[i].pos += -push;
                self.balls[j].pos += push;
                events.push(GroundTruthEvent::Collision {
                    frame,
                    balls: (self.balls[i].id, self.balls[j].id),
                });
            }
        }
    }

    /// Capture: center inside the pocket radius while moving toward the
    /// pocket center. Goals are terminal; the ball never moves again.
    fn resolve_pockets(&mut self, frame: FrameIdx, events: &mut Vec<GroundTruthEvent>) {
        let pockets = self.table.pockets();
        for ball in self.balls.iter_mut().filter(|b| b.active(frame)) {
            for (name, center) in pockets {
                let inward = (center - ball.pos).dot(ball.vel) > 0.0;
                if ball.pos.distance(center) <= self.table.pocket_radius && inward {
                    ball.pocketed = true;
                    ball.vel = Vec2::ZERO;
                    events.push(GroundTruthEvent::Goal {
                        frame,
                        ball: ball.id,
                        pocket: name,
                    });
                    break;
                }
            }
        }
    }

    fn resolve_cushions(&mut self, frame: FrameIdx, events: &mut Vec<GroundTruthEvent>) {
        let table = self.table.clone();
        let pockets = table.pockets();
        let jaw_radius = table.jaw_zone_scale * table.pocket_radius;
        let e = table.cushion_restitution;

        for ball in self.balls.iter_mut().filter(|b| b.active(frame)) {
            let r = ball.radius;
            let walls = [
                (BoundaryName::Left, ball.pos.x - r, ball.vel.x < 0.0),
                (BoundaryName::Right, table.width - r - ball.pos.x, ball.vel.x > 0.0),
                (BoundaryName::Top, ball.pos.y - r, ball.vel.y < 0.0),
                (BoundaryName::Bottom, table.height - r - ball.pos.y, ball.vel.y > 0.0),
            ];
            for (boundary, clearance, moving_out) in walls {
                if clearance >= 0.0 || !moving_out {
                    continue;
                }
                // Mirror the penetration and reflect the normal component.
                match boundary {
                    BoundaryName::Left => {
                        ball.pos.x = 2.0 * r - ball.pos.x;
                        ball.vel.x *= -e;
                    }
                    BoundaryName::Right => {
                        ball.pos.x = 2.0 * (table.width - r) - ball.pos.x;
                        ball.vel.x *= -e;
                    }
                    BoundaryName::Top => {
                        ball.pos.y = 2.0 * r - ball.pos.y;
                        ball.vel.y *= -e;
                    }
                    BoundaryName::Bottom => {
                        ball.pos.y = 2.0 * (table.height - r) - ball.pos.y;
                        ball.vel.y *= -e;
                    }
                }
                // Contact near a pocket mouth deflects off the jaw: the
                // reflected velocity is rotated away from the pocket, which
                // breaks the clean-reflection signature downstream.
                if let Some((_, center)) = pockets
                    .iter()
                    .find(|(_, c)| ball.pos.distance(*c) <= jaw_radius)
                {
                    let toward_pocket = match boundary {
                        BoundaryName::Left | BoundaryName::Right => center.y - ball.pos.y,
                        BoundaryName::Top | BoundaryName::Bottom => center.x - ball.pos.x,
                    };
                    let sign = if toward_pocket > 0.0 { -1.0 } else { 1.0 };
                    let angle = sign * table.jaw_deflection_deg.to_radians();
                    let rotated = ball.vel.rotated(angle);
                    let still_leaving = match boundary {
                        BoundaryName::Left => rotated.x > 0.0,
                        BoundaryName::Right => rotated.x < 0.0,
                        BoundaryName::Top => rotated.y > 0.0,
                        BoundaryName::Bottom => rotated.y < 0.0,
                    };
                    ball.vel = if still_leaving {
                        rotated
                    } else {
                        ball.vel.rotated(-angle)
                    };
                }
                events.push(GroundTruthEvent::Rebound {
                    frame,
                    ball: ball.id,
                    boundary,
                });
            }
        }
    }
}
