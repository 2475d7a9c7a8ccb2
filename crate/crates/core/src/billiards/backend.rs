//! Detector and segmenter backed by the synthetic world.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::billiards::render::{render_ball, SceneFrame};
use crate::billiards::{PocketName, TableSpec};
use crate::mask::Mask;
use crate::math::round;
use crate::propagation::{BoxRect, Detector, PromptBox, SegmentRequest, Segmenter};
use crate::{FrameIdx, ObjId};

/// Reserved object-id range for pocket calibration boxes; never enters the
/// tracking registry.
pub const POCKET_ID_BASE: ObjId = 1_000_000;

pub fn pocket_obj_id(name: PocketName) -> ObjId {
    POCKET_ID_BASE
        + PocketName::ALL
            .iter()
            .position(|&p| p == name)
            .unwrap() as ObjId
}

/// Imperfection model for the detector and segmenter.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseConfig {
    /// Std-dev of Gaussian jitter added to each box coordinate, pixels.
    #[cfg_attr(feature = "serde", serde(default))]
    pub box_jitter_px: f64,
    /// Probability that any single detection box is dropped.
    #[cfg_attr(feature = "serde", serde(default))]
    pub dropout_prob: f64,
    /// Erosion applied to produced masks, pixels.
    #[cfg_attr(feature = "serde", serde(default))]
    pub mask_erosion_px: u32,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// Frames at which every ball detection is deterministically dropped
    /// (pocket calibration boxes are exempt).
    #[cfg_attr(feature = "serde", serde(default))]
    pub drop_detections_at: BTreeSet<FrameIdx>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            box_jitter_px: 0.0,
            dropout_prob: 0.0,
            mask_erosion_px: 0,
            seed: 0,
            drop_detections_at: BTreeSet::new(),
        }
    }
}

/// Behavioral stand-in for detector plus segmenter.
///
/// Detection draws axis-aligned boxes around the rendered ellipses, with
/// jitter and dropout per [`NoiseConfig`]. The first detector invocation also
/// produces the six pocket calibration boxes, which the pipeline collects via
/// [`take_pocket_boxes`](Self::take_pocket_boxes) instead of prompting with
/// them.
///
/// Segmentation produces a mask for an object iff it is prompted at the frame
/// or remembered by some attention frame; otherwise the object is absent,
/// which models prompt starvation.
pub struct BilliardsBackend {
    noise: NoiseConfig,
    rng: ChaCha8Rng,
    pockets: [(PocketName, crate::math::Vec2); 6],
    pocket_radius: f64,
    pending_pockets: Option<Vec<PromptBox>>,
    pockets_emitted: bool,
}

impl BilliardsBackend {
    pub fn new(table: &TableSpec, noise: NoiseConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(noise.seed);
        BilliardsBackend {
            noise,
            rng,
            pockets: table.pockets(),
            pocket_radius: table.pocket_radius,
            pending_pockets: None,
            pockets_emitted: false,
        }
    }

    /// Pocket calibration boxes (reserved object ids), available once after
    /// the first detector invocation. They never become tracking prompts.
    pub fn take_pocket_boxes(&mut self) -> Option<Vec<PromptBox>> {
        self.pending_pockets.take()
    }

    fn gauss(&mut self) -> f64 {
        // Box-Muller on two uniform draws.
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 0.5) / 9_007_199_254_740_992.0;
        let u2 = (self.rng.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0;
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0
    }
}

impl Detector for BilliardsBackend {
    type Payload = SceneFrame;

    fn detect(&mut self, frame_idx: FrameIdx, scene: &SceneFrame) -> Vec<PromptBox> {
        if !self.pockets_emitted {
            self.pockets_emitted = true;
            self.pending_pockets = Some(
                self.pockets
                    .iter()
                    .map(|&(name, c)| {
                        let r = self.pocket_radius as f32;
                        let rect = BoxRect {
                            x_min: c.x as f32 - r,
                            y_min: c.y as f32 - r,
                            x_max: c.x as f32 + r,
                            y_max: c.y as f32 + r,
                        };
                        PromptBox::new(pocket_obj_id(name), rect, 1.0)
                            .expect("pocket box is valid")
                    })
                    .collect(),
            );
        }

        let drop_all = self.noise.drop_detections_at.contains(&frame_idx);
        let mut boxes = Vec::new();
        for ball in &scene.balls {
            let mask = render_ball(ball, scene.stretch);
            let Some((x0, y0, x1, y1)) = mask.bounds() else {
                continue;
            };
            let jitter = self.noise.box_jitter_px;
            let mut rect = BoxRect {
                x_min: x0 as f32,
                y_min: y0 as f32,
                x_max: (x1 + 1) as f32,
                y_max: (y1 + 1) as f32,
            };
            if jitter > 0.0 {
                rect.x_min += round(self.gauss() * jitter) as f32;
                rect.y_min += round(self.gauss() * jitter) as f32;
                rect.x_max += round(self.gauss() * jitter) as f32;
                rect.y_max += round(self.gauss() * jitter) as f32;
                if rect.x_max <= rect.x_min {
                    rect.x_max = rect.x_min + 1.0;
                }
                if rect.y_max <= rect.y_min {
                    rect.y_max = rect.y_min + 1.0;
                }
            }
            let dropped = drop_all
                || (self.noise.dropout_prob > 0.0 && self.uniform() < self.noise.dropout_prob);
            if dropped {
                continue;
            }
            boxes.push(PromptBox::new(ball.id, rect, 1.0).expect("detector produced a valid box"));
        }
        boxes
    }
}

impl Segmenter for BilliardsBackend {
    type Payload = SceneFrame;

    fn segment(&mut self, request: &SegmentRequest<'_, SceneFrame>) -> BTreeMap<ObjId, Mask> {
        let prompted: BTreeSet<ObjId> = request.prompts.iter().map(|p| p.obj_id).collect();
        let mut out = BTreeMap::new();
        for ball in &request.payload.balls {
            if !(prompted.contains(&ball.id) || request.remembered.contains(&ball.id)) {
                continue;
            }
            let mut mask = render_ball(ball, request.payload.stretch);
            if self.noise.mask_erosion_px > 0 {
                mask = mask.eroded(self.noise.mask_erosion_px);
            }
            if !mask.is_empty() {
                out.insert(ball.id, mask);
            }
        }
        out
    }
}
