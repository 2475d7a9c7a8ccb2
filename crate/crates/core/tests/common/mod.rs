//! Shared test backend: a minimal detector/segmenter pair over unit payloads.

use std::collections::BTreeMap;

use cuestream_core::mask::Mask;
use cuestream_core::propagation::{
    BoxRect, Detector, FrameSource, PromptBox, SegmentRequest, Segmenter,
};
use cuestream_core::{FrameIdx, FrameRecord, ObjId, Precision, StorageTier};

/// Emits one small box per configured object on every detector call,
/// and segments exactly the prompted-or-remembered objects.
pub struct StubBackend {
    pub objs: Vec<ObjId>,
    /// Objects only reported from a given frame onward.
    pub appearing: Vec<(ObjId, FrameIdx)>,
    /// Frames at which detection output is suppressed entirely.
    pub mute_from: Option<FrameIdx>,
}

#[allow(dead_code)] // not every test target uses every helper
impl StubBackend {
    pub fn new(objs: &[ObjId]) -> Self {
        StubBackend {
            objs: objs.to_vec(),
            appearing: Vec::new(),
            mute_from: None,
        }
    }

    pub fn silent() -> Self {
        StubBackend::new(&[])
    }

    fn tiny_box(obj: ObjId) -> PromptBox {
        let rect = BoxRect {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 2.0,
            y_max: 2.0,
        };
        PromptBox::new(obj, rect, 1.0).unwrap()
    }
}

impl Detector for StubBackend {
    type Payload = ();

    fn detect(&mut self, frame_idx: FrameIdx, _payload: &()) -> Vec<PromptBox> {
        if self.mute_from.map(|f| frame_idx >= f).unwrap_or(false) {
            return Vec::new();
        }
        let mut boxes: Vec<PromptBox> = self.objs.iter().map(|&o| Self::tiny_box(o)).collect();
        for &(obj, from) in &self.appearing {
            if frame_idx >= from {
                boxes.push(Self::tiny_box(obj));
            }
        }
        boxes
    }
}

impl Segmenter for StubBackend {
    type Payload = ();

    fn segment(&mut self, request: &SegmentRequest<'_, ()>) -> BTreeMap<ObjId, Mask> {
        let mut out = BTreeMap::new();
        for p in request.prompts {
            out.insert(p.obj_id, Mask::from_fn(0, 0, 2, 2, |_, _| true));
        }
        for &obj in request.remembered {
            out.entry(obj)
                .or_insert_with(|| Mask::from_fn(0, 0, 2, 2, |_, _| true));
        }
        out
    }
}

/// Produces unit-payload frames with consecutive global indices.
pub struct CountingSource {
    next: FrameIdx,
}

impl CountingSource {
    pub fn new() -> Self {
        CountingSource { next: 0 }
    }
}

impl FrameSource for CountingSource {
    type Payload = ();

    fn next_frame(&mut self) -> Option<FrameRecord<()>> {
        let idx = self.next;
        self.next += 1;
        Some(frame(idx))
    }
}

pub fn frame(idx: FrameIdx) -> FrameRecord<()> {
    FrameRecord {
        global_idx: idx,
        native_width: 64,
        native_height: 48,
        internal_side: 16,
        payload: (),
        precision: Precision::Half,
        tier: StorageTier::Slow,
    }
}
