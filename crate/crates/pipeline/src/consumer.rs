//! The post-processing worker.
//!
//! Consumes queue items strictly in arrival order, maintains centroid
//! tracks, and judges events once the table geometry has been collected
//! from the pocket calibration boxes. Re-pushed revisions of a frame are
//! re-processed in place; the event log's overwrite semantics absorb the
//! corrections.

use std::collections::BTreeMap;
use std::sync::mpsc::Receiver;
use std::time::Duration;

use cuestream_core::events::{
    derive_geometry, detect_collision, detect_goal, detect_rebound, BallTracks, EventLog,
    GeometryError, TableGeometry, ThresholdConfig,
};
use cuestream_core::math::Vec2;
use cuestream_core::{FrameIdx, ObjId};

use crate::queue::{QueueItem, VideoSegments};

/// What the consumer hands back after draining the queue.
#[derive(Debug)]
pub struct ConsumerOutput {
    pub events: EventLog,
    pub tracks: BallTracks,
    pub geometry: Option<TableGeometry>,
    pub geometry_error: Option<GeometryError>,
    /// Items processed (frames only).
    pub frames_processed: u64,
    /// Highest revision seen per frame.
    pub max_revision: BTreeMap<FrameIdx, u32>,
    /// Frames out of ascending order within one propagation call.
    pub order_violations: u64,
    /// Revisions that failed to increase monotonically per frame.
    pub revision_violations: u64,
}

pub struct Consumer {
    thresholds: ThresholdConfig,
    delay: Duration,
    geometry: Option<TableGeometry>,
    geometry_error: Option<GeometryError>,
    tracks: BallTracks,
    events: EventLog,
    frames_processed: u64,
    max_revision: BTreeMap<FrameIdx, u32>,
    order_violations: u64,
    revision_violations: u64,
    last_call: u64,
    last_frame_in_call: Option<FrameIdx>,
}

impl Consumer {
    pub fn new(thresholds: ThresholdConfig, delay_ms: u64) -> Self {
        Consumer {
            thresholds,
            delay: Duration::from_millis(delay_ms),
            geometry: None,
            geometry_error: None,
            tracks: BallTracks::new(),
            events: EventLog::new(),
            frames_processed: 0,
            max_revision: BTreeMap::new(),
            order_violations: 0,
            revision_violations: 0,
            last_call: 0,
            last_frame_in_call: None,
        }
    }

    /// Drains the queue until the end sentinel (or a disconnected producer),
    /// releasing each staged frame after processing it.
    pub fn run(mut self, rx: Receiver<QueueItem>, segments: &VideoSegments) -> ConsumerOutput {
        // A disconnected producer counts as end of stream.
        while let Ok(item) = rx.recv() {
            match item {
                QueueItem::Pockets(boxes) => {
                    let rects: Vec<_> = boxes.iter().map(|b| b.rect).collect();
                    match derive_geometry(
                        &rects,
                        self.thresholds.buffer_margin,
                        self.thresholds.near_pocket_radius,
                    ) {
                        Ok(g) => self.geometry = Some(g),
                        Err(e) => self.geometry_error = Some(e),
                    }
                }
                QueueItem::Frame {
                    frame,
                    revision,
                    call_no,
                    masks,
                } => {
                    if !self.delay.is_zero() {
                        std::thread::sleep(self.delay);
                    }
                    self.check_ordering(frame, revision, call_no);
                    self.process_frame(frame, revision, &masks);
                    segments.release(frame);
                    self.frames_processed += 1;
                }
                QueueItem::End => break,
            }
        }
        ConsumerOutput {
            events: self.events,
            tracks: self.tracks,
            geometry: self.geometry,
            geometry_error: self.geometry_error,
            frames_processed: self.frames_processed,
            max_revision: self.max_revision,
            order_violations: self.order_violations,
            revision_violations: self.revision_violations,
        }
    }

    fn check_ordering(&mut self, frame: FrameIdx, revision: u32, call_no: u64) {
        if call_no == self.last_call {
            if let Some(last) = self.last_frame_in_call {
                if frame <= last {
                    self.order_violations += 1;
                }
            }
        } else {
            self.last_call = call_no;
        }
        self.last_frame_in_call = Some(frame);

        let prev = self.max_revision.get(&frame).copied().unwrap_or(0);
        if revision <= prev {
            self.revision_violations += 1;
        }
        self.max_revision.insert(frame, revision.max(prev));
    }

    fn process_frame(
        &mut self,
        frame: FrameIdx,
        revision: u32,
        masks: &BTreeMap<ObjId, cuestream_core::mask::Mask>,
    ) {
        let centroids: BTreeMap<ObjId, Vec2> = masks
            .iter()
            .filter_map(|(&id, m)| m.centroid().map(|(x, y)| (id, Vec2::new(x, y))))
            .collect();
        self.tracks.observe_frame(frame, &centroids);

        // Post-processing proper starts once the table layout is known.
        let Some(geometry) = &self.geometry else {
            return;
        };
        detect_goal(&self.tracks, geometry, frame, &mut self.events, revision);
        detect_collision(
            &self.tracks,
            frame,
            &self.thresholds,
            &mut self.events,
            revision,
        );
        detect_rebound(
            &self.tracks,
            geometry,
            frame,
            &self.thresholds,
            &mut self.events,
            revision,
        );
    }
}
