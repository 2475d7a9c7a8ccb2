//! Seeded scenario construction and event scoring.
//!
//! The suite stages each event class with margins comfortably inside the
//! detection thresholds: collisions happen mid-table, clean rebounds stay
//! clear of pockets, jaw deflections hit the rail inside a pocket mouth
//! without being captured, and goals approach straight at a pocket center.

use cuestream_core::billiards::{
    BallSpec, GroundTruthEvent, NoiseConfig, PocketName, Scenario, ShotSpec, TableSpec,
};
use cuestream_core::events::{EventLog, ThresholdConfig};
use cuestream_core::math::Vec2;
use cuestream_core::propagation::PropagationConfig;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;

pub const BALL_RADIUS: f64 = 11.0;

pub fn suite_table() -> TableSpec {
    TableSpec {
        width: 800.0,
        height: 400.0,
        pocket_radius: 20.0,
        cushion_restitution: 0.95,
        friction_decel: 0.3,
        jaw_zone_scale: 2.0,
        jaw_deflection_deg: 40.0,
    }
}

/// Thresholds tuned to the suite's speed envelope. The buffer margin must
/// exceed ball radius plus one frame of perpendicular travel so the rail
/// contact frame lands inside the zone.
pub fn suite_thresholds() -> ThresholdConfig {
    let mut t = ThresholdConfig::derived(20.0, BALL_RADIUS, 0.3);
    t.velocity_change_threshold = 2.0;
    t.buffer_margin = 30.0;
    t
}

pub fn suite_pipeline_config() -> PipelineConfig {
    PipelineConfig {
        propagation: PropagationConfig {
            buffer_size: 10,
            max_frames_to_track: Some(20),
            detection_interval: 5,
            retention: Some(60),
            attention_limit: 60,
            update_window: None,
        },
        thresholds: Some(suite_thresholds()),
        ..PipelineConfig::default()
    }
}

fn scenario(balls: Vec<BallSpec>, frames: usize, shots: Vec<ShotSpec>) -> Scenario {
    Scenario {
        table: suite_table(),
        balls,
        shots,
        noise: NoiseConfig::default(),
        seed: 0,
        stretch: 0.0,
        frames,
    }
}

fn ball(id: u32, pos: Vec2, vel: Vec2) -> BallSpec {
    BallSpec {
        id,
        pos,
        vel,
        radius: BALL_RADIUS,
        appears_at: 0,
    }
}

struct Rand(ChaCha8Rng);

impl Rand {
    fn new(seed: u64) -> Self {
        Rand(ChaCha8Rng::seed_from_u64(seed))
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0;
        lo + u * (hi - lo)
    }

    fn sign(&mut self) -> f64 {
        if self.0.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Two balls meeting head-on in open table.
pub fn head_on_collision(seed: u64) -> Scenario {
    let mut r = Rand::new(seed ^ 0x1111);
    let y = r.range(120.0, 280.0);
    let s1 = r.range(6.0, 8.0);
    let s2 = r.range(6.0, 8.0);
    scenario(
        vec![
            ball(1, Vec2::new(r.range(320.0, 350.0), y), Vec2::new(s1, 0.0)),
            ball(2, Vec2::new(r.range(450.0, 480.0), y), Vec2::new(-s2, 0.0)),
        ],
        60,
        vec![],
    )
}

/// A moving ball grazing a stationary one.
pub fn angled_collision(seed: u64) -> Scenario {
    let mut r = Rand::new(seed ^ 0x2222);
    let target = Vec2::new(r.range(380.0, 420.0), r.range(170.0, 230.0));
    let offset = r.sign() * r.range(4.0, 8.0);
    let start = Vec2::new(target.x - r.range(55.0, 80.0), target.y + offset);
    let speed = r.range(8.0, 10.0);
    scenario(
        vec![
            ball(1, start, Vec2::new(speed, 0.0)),
            ball(2, target, Vec2::ZERO),
        ],
        70,
        vec![],
    )
}

/// Clean reflection off one rail, far from every pocket.
pub fn clean_rebound(seed: u64, wall: u8) -> Scenario {
    let mut r = Rand::new(seed ^ 0x3333);
    let perp = r.range(8.0, 12.0);
    let par = r.sign() * r.range(2.0, 4.5);
    // Contact after 4-5 frames, fast enough that friction leaves a crisp
    // reversal.
    let back = perp * r.range(3.4, 4.5);
    // Contact point along the rail, away from pocket mouths.
    let along_long = if r.sign() > 0.0 {
        r.range(140.0, 300.0)
    } else {
        r.range(500.0, 660.0)
    };
    let along_short = r.range(120.0, 280.0);
    let (pos, vel) = match wall {
        0 => (
            Vec2::new(along_long - par * (back / perp), back + BALL_RADIUS),
            Vec2::new(par, -perp),
        ),
        1 => (
            Vec2::new(along_long - par * (back / perp), 400.0 - back - BALL_RADIUS),
            Vec2::new(par, perp),
        ),
        2 => (
            Vec2::new(back + BALL_RADIUS, along_short - par * (back / perp)),
            Vec2::new(-perp, par),
        ),
        _ => (
            Vec2::new(800.0 - back - BALL_RADIUS, along_short - par * (back / perp)),
            Vec2::new(perp, par),
        ),
    };
    scenario(vec![ball(1, pos, vel)], 50, vec![])
}

/// Straight shot into a pocket.
pub fn pocket_goal(seed: u64, pocket: PocketName) -> Scenario {
    let mut r = Rand::new(seed ^ 0x4444);
    let table = suite_table();
    let center = table
        .pockets()
        .iter()
        .find(|(n, _)| *n == pocket)
        .map(|(_, c)| *c)
        .unwrap();
    // Corner pockets are approached along the diagonal, middle pockets
    // perpendicular to their rail: otherwise the ball clips the cushion
    // just before capture. A few degrees of jitter keep the suite varied.
    let base = match pocket {
        PocketName::TL => Vec2::new(1.0, 1.0),
        PocketName::TR => Vec2::new(-1.0, 1.0),
        PocketName::BL => Vec2::new(1.0, -1.0),
        PocketName::BR => Vec2::new(-1.0, -1.0),
        PocketName::TM => Vec2::new(0.0, 1.0),
        PocketName::BM => Vec2::new(0.0, -1.0),
    }
    .unit();
    let inward = base.rotated(r.sign() * r.range(0.0, 5.0f64.to_radians()));
    let dist = r.range(70.0, 110.0);
    let speed = r.range(9.0, 12.0);
    let start = center + inward * dist;
    scenario(vec![ball(1, start, -inward * speed)], 40, vec![])
}

/// Rail contact inside a middle-pocket mouth: deflects off the jaw instead
/// of reflecting cleanly, and is not captured.
pub fn jaw_deflection(seed: u64, top: bool) -> Scenario {
    let mut r = Rand::new(seed ^ 0x5555);
    let side = r.sign();
    let contact_x = 400.0 + side * r.range(24.0, 34.0);
    let perp = r.range(8.0, 12.0);
    // Drift toward the pocket center so the contact lands in the mouth.
    let par = -side * r.range(1.0, 2.5);
    let back = perp * r.range(3.4, 4.5);
    let (pos, vel) = if top {
        (
            Vec2::new(contact_x - par * (back / perp), back + BALL_RADIUS),
            Vec2::new(par, -perp),
        )
    } else {
        (
            Vec2::new(contact_x - par * (back / perp), 400.0 - back - BALL_RADIUS),
            Vec2::new(par, perp),
        )
    };
    scenario(vec![ball(1, pos, vel)], 50, vec![])
}

/// A cue ball drives a resting ball into a rail: one collision, then one
/// rebound.
pub fn collision_then_rebound(seed: u64) -> Scenario {
    let mut r = Rand::new(seed ^ 0x6666);
    let x = r.range(250.0, 550.0);
    // The driven ball's return after the rebound must fall short of where
    // the cue ball stops, or the pair collides a second time at a speed too
    // low to judge.
    let target_y = r.range(100.0, 112.0);
    let cue_y = target_y + r.range(85.0, 105.0);
    let speed = r.range(11.5, 13.0);
    scenario(
        vec![
            ball(1, Vec2::new(x, cue_y), Vec2::new(0.0, -speed)),
            ball(2, Vec2::new(x, target_y), Vec2::ZERO),
        ],
        70,
        vec![],
    )
}

/// The 50-scenario acceptance suite: a labelled mix of all event classes.
pub fn event_suite() -> Vec<(String, Scenario)> {
    let mut suite = Vec::new();
    for seed in 0..10u64 {
        suite.push((format!("head_on_{seed}"), head_on_collision(seed)));
    }
    for seed in 0..7u64 {
        suite.push((format!("angled_{seed}"), angled_collision(seed)));
    }
    for wall in 0..4u8 {
        for seed in 0..3u64 {
            suite.push((
                format!("rebound_w{wall}_{seed}"),
                clean_rebound(seed * 4 + wall as u64, wall),
            ));
        }
    }
    for (i, pocket) in PocketName::ALL.iter().enumerate() {
        for seed in 0..2u64 {
            suite.push((
                format!("goal_{}_{seed}", pocket.as_str()),
                pocket_goal(seed * 6 + i as u64, *pocket),
            ));
        }
    }
    for seed in 0..5u64 {
        suite.push((format!("jaw_{seed}"), jaw_deflection(seed, seed % 2 == 0)));
    }
    for seed in 0..4u64 {
        suite.push((format!("combo_{seed}"), collision_then_rebound(seed)));
    }
    assert_eq!(suite.len(), 50);
    suite
}

/// A busier scenario for long runs and the bench: four balls kept in motion
/// by periodic shots.
pub fn endless_rally(frames: usize) -> Scenario {
    let balls = vec![
        ball(1, Vec2::new(220.0, 140.0), Vec2::new(6.0, 3.0)),
        ball(2, Vec2::new(560.0, 250.0), Vec2::new(-5.0, 2.0)),
        ball(3, Vec2::new(390.0, 110.0), Vec2::new(2.0, 5.0)),
        ball(4, Vec2::new(320.0, 300.0), Vec2::new(4.0, -4.0)),
    ];
    let mut shots = Vec::new();
    let mut r = Rand::new(0xA11);
    let mut f = 25;
    while f < frames as i64 {
        let id = 1 + (r.0.next_u64() % 4) as u32;
        shots.push(ShotSpec {
            frame: f,
            ball: id,
            impulse: Vec2::new(r.sign() * r.range(4.0, 8.0), r.sign() * r.range(4.0, 8.0)),
        });
        f += 25;
    }
    scenario(balls, frames, shots)
}

// --- Event scoring -------------------------------------------------------

#[derive(Clone, Copy, Debug, Default)]
pub struct ClassScore {
    pub tp: usize,
    pub fp: usize,
    pub missed: usize,
}

impl ClassScore {
    pub fn f1(&self) -> f64 {
        if self.tp + self.fp + self.missed == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / (2.0 * self.tp as f64 + self.fp as f64 + self.missed as f64)
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct F1Report {
    pub goals: ClassScore,
    pub collisions: ClassScore,
    pub rebounds: ClassScore,
}

impl F1Report {
    pub fn merge(&mut self, other: &F1Report) {
        for (a, b) in [
            (&mut self.goals, &other.goals),
            (&mut self.collisions, &other.collisions),
            (&mut self.rebounds, &other.rebounds),
        ] {
            a.tp += b.tp;
            a.fp += b.fp;
            a.missed += b.missed;
        }
    }

    pub fn micro_f1(&self) -> f64 {
        let mut all = ClassScore::default();
        for c in [self.goals, self.collisions, self.rebounds] {
            all.tp += c.tp;
            all.fp += c.fp;
            all.missed += c.missed;
        }
        all.f1()
    }
}

/// Greedy matching of detected events against oracle events of the same
/// class and participants within `tol` frames.
pub fn score_events(log: &EventLog, oracle: &[GroundTruthEvent], tol: i64) -> F1Report {
    let mut report = F1Report::default();

    let mut oracle_goals: Vec<(i64, u32, PocketName, bool)> = oracle
        .iter()
        .filter_map(|e| match e {
            GroundTruthEvent::Goal { frame, ball, pocket } => {
                Some((*frame, *ball, *pocket, false))
            }
            _ => None,
        })
        .collect();
    for (&ball, rec) in log.goals() {
        let found = oracle_goals.iter_mut().find(|(f, b, p, used)| {
            !*used && *b == ball && *p == rec.value.pocket && (rec.value.frame - *f).abs() <= tol
        });
        match found {
            Some(slot) => {
                slot.3 = true;
                report.goals.tp += 1;
            }
            None => report.goals.fp += 1,
        }
    }
    report.goals.missed = oracle_goals.iter().filter(|(_, _, _, used)| !used).count();

    let mut oracle_cols: Vec<(i64, (u32, u32), bool)> = oracle
        .iter()
        .filter_map(|e| match e {
            GroundTruthEvent::Collision { frame, balls } => {
                let pair = (balls.0.min(balls.1), balls.0.max(balls.1));
                Some((*frame, pair, false))
            }
            _ => None,
        })
        .collect();
    for (&frame, rec) in log.collisions() {
        for &pair in &rec.value {
            let found = oracle_cols
                .iter_mut()
                .find(|(f, p, used)| !*used && *p == pair && (frame - *f).abs() <= tol);
            match found {
                Some(slot) => {
                    slot.2 = true;
                    report.collisions.tp += 1;
                }
                None => report.collisions.fp += 1,
            }
        }
    }
    report.collisions.missed = oracle_cols.iter().filter(|(_, _, used)| !used).count();

    let mut oracle_rebs: Vec<(i64, u32, cuestream_core::billiards::BoundaryName, bool)> = oracle
        .iter()
        .filter_map(|e| match e {
            GroundTruthEvent::Rebound {
                frame,
                ball,
                boundary,
            } => Some((*frame, *ball, *boundary, false)),
            _ => None,
        })
        .collect();
    for (&(frame, ball), rec) in log.rebounds() {
        let found = oracle_rebs.iter_mut().find(|(f, b, bo, used)| {
            !*used && *b == ball && *bo == rec.value && (frame - *f).abs() <= tol
        });
        match found {
            Some(slot) => {
                slot.3 = true;
                report.rebounds.tp += 1;
            }
            None => report.rebounds.fp += 1,
        }
    }
    report.rebounds.missed = oracle_rebs.iter().filter(|(_, _, _, used)| !used).count();

    report
}
