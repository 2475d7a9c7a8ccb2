//! Producer/consumer transport: the frames queue and the staging map.

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};

use cuestream_core::mask::Mask;
use cuestream_core::propagation::PromptBox;
use cuestream_core::{FrameIdx, ObjId};

pub type FrameMasks = BTreeMap<ObjId, Mask>;

/// Items flowing from the inference worker to the post-processing worker.
/// Frames of one propagation are pushed in ascending order; a re-propagated
/// frame is re-pushed with its revision incremented.
#[derive(Clone, Debug)]
pub enum QueueItem {
    /// Pocket calibration boxes (reserved object ids), once, before any
    /// frame of the first flush.
    Pockets(Vec<PromptBox>),
    Frame {
        frame: FrameIdx,
        revision: u32,
        /// Propagation call this push belongs to; frames within one call
        /// arrive in ascending order.
        call_no: u64,
        masks: Arc<FrameMasks>,
    },
    /// End-of-stream sentinel; the producer always sends it, even on error.
    End,
}

struct SegmentsInner {
    map: BTreeMap<FrameIdx, Arc<FrameMasks>>,
    peak: usize,
    released: u64,
}

/// Staging map of per-frame results awaiting consumption.
///
/// Inserting a frame not yet staged blocks while the map is at capacity, so
/// the steady-state size stays bounded by one propagation window plus one
/// flush of new frames no matter how slow the consumer is. Re-inserting a
/// staged frame (a revision) replaces it without growing the map.
pub struct VideoSegments {
    inner: Mutex<SegmentsInner>,
    drained: Condvar,
    capacity: usize,
}

impl VideoSegments {
    pub fn new(capacity: usize) -> Self {
        VideoSegments {
            inner: Mutex::new(SegmentsInner {
                map: BTreeMap::new(),
                peak: 0,
                released: 0,
            }),
            drained: Condvar::new(),
            capacity,
        }
    }

    /// Stages a frame's masks. Returns true if the call had to wait for the
    /// consumer to drain.
    pub fn insert(&self, frame: FrameIdx, masks: Arc<FrameMasks>) -> bool {
        let mut inner = self.inner.lock().unwrap();
        let mut waited = false;
        while !inner.map.contains_key(&frame) && inner.map.len() >= self.capacity {
            waited = true;
            inner = self.drained.wait(inner).unwrap();
        }
        inner.map.insert(frame, masks);
        inner.peak = inner.peak.max(inner.map.len());
        waited
    }

    /// Releases a consumed frame; releasing an absent frame is a no-op.
    pub fn release(&self, frame: FrameIdx) {
        let mut inner = self.inner.lock().unwrap();
        if inner.map.remove(&frame).is_some() {
            inner.released += 1;
            self.drained.notify_all();
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn peak(&self) -> usize {
        self.inner.lock().unwrap().peak
    }

    pub fn released_count(&self) -> u64 {
        self.inner.lock().unwrap().released
    }
}
