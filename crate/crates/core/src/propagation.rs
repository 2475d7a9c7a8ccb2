//! Streaming propagation schedule.
//!
//! Frames accumulate in a buffer of size `K`; each flush appends them to the
//! frame store, prompts the detector on condition frames (every `D`-th global
//! index), then re-evaluates frames newest-first over a window capped at `M`
//! frames. After every propagation, frames older than the retention horizon
//! are released. Counters record exactly how many frames each propagation
//! touched, which is what the cost-law checks measure.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::frame_store::{FrameRecord, FrameStore, FrameStoreError};
use crate::mask::Mask;
use crate::memory_bank::{BankError, MemoryBank, MemoryRow, PreloadBank, PreloadFormatError};
use crate::{FrameIdx, ObjId};

/// Axis-aligned box in native pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxRect {
    pub x_min: f32,
    pub y_min: f32,
    pub x_max: f32,
    pub y_max: f32,
}

impl BoxRect {
    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min as f64 + self.x_max as f64) / 2.0,
            (self.y_min as f64 + self.y_max as f64) / 2.0,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("degenerate box: min must be strictly below max on both axes")]
    DegenerateBox,
    #[error("score must lie in [0, 1]")]
    ScoreOutOfRange,
}

/// One detection used as a prompt: an object id, its box and a confidence.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PromptBox {
    pub obj_id: ObjId,
    pub rect: BoxRect,
    pub score: f32,
}

impl PromptBox {
    pub fn new(obj_id: ObjId, rect: BoxRect, score: f32) -> Result<Self, PromptError> {
        if !(rect.x_min < rect.x_max && rect.y_min < rect.y_max) {
            return Err(PromptError::DegenerateBox);
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(PromptError::ScoreOutOfRange);
        }
        Ok(PromptBox {
            obj_id,
            rect,
            score,
        })
    }
}

/// Knobs of the streaming schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PropagationConfig {
    /// Frames accumulated before one flush/propagation cycle (`K`).
    pub buffer_size: usize,
    /// Cap on frames visited per propagation (`M`); `None` is unbounded.
    pub max_frames_to_track: Option<usize>,
    /// Spacing between condition frames (`D`).
    pub detection_interval: usize,
    /// Resident-frame cap handed to the memory bank; `None` keeps everything.
    pub retention: Option<usize>,
    /// Cap on frames used per memory-attention selection.
    pub attention_limit: usize,
    /// Back-update window when new objects register; defaults to `retention`.
    pub update_window: Option<usize>,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            buffer_size: 10,
            max_frames_to_track: Some(20),
            detection_interval: 5,
            retention: Some(60),
            attention_limit: 60,
            update_window: None,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.buffer_size < 1 {
            return Err(ConfigError::BufferSize);
        }
        if self.detection_interval < 1 {
            return Err(ConfigError::DetectionInterval);
        }
        if self.attention_limit < 1 {
            return Err(ConfigError::AttentionLimit);
        }
        if let Some(m) = self.max_frames_to_track {
            if m < self.buffer_size {
                return Err(ConfigError::TrackShorterThanBuffer {
                    max_frames_to_track: m,
                    buffer_size: self.buffer_size,
                });
            }
        }
        match (self.retention, self.max_frames_to_track) {
            (Some(r), Some(m)) if r <= m => Err(ConfigError::RetentionNotAboveTrack {
                retention: r,
                max_frames_to_track: m,
            }),
            (Some(_), None) => Err(ConfigError::RetentionRequiresBoundedTrack),
            _ => Ok(()),
        }
    }

    fn effective_update_window(&self) -> usize {
        self.update_window
            .or(self.retention)
            .unwrap_or(usize::MAX)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("buffer size must be at least 1")]
    BufferSize,
    #[error("detection interval must be at least 1")]
    DetectionInterval,
    #[error("attention limit must be at least 1")]
    AttentionLimit,
    #[error("max frames to track ({max_frames_to_track}) must cover the buffer ({buffer_size})")]
    TrackShorterThanBuffer {
        max_frames_to_track: usize,
        buffer_size: usize,
    },
    #[error("retention ({retention}) must exceed max frames to track ({max_frames_to_track})")]
    RetentionNotAboveTrack {
        retention: usize,
        max_frames_to_track: usize,
    },
    #[error("bounded retention requires a bounded propagation window")]
    RetentionRequiresBoundedTrack,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("frame arrived out of order: expected {expected}, got {got}")]
    OutOfOrder { expected: FrameIdx, got: FrameIdx },
    #[error(transparent)]
    Store(#[from] FrameStoreError),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Preload(#[from] PreloadFormatError),
    #[error("frame {frame}: two prompts share object id {obj_id}")]
    DuplicatePrompt { frame: FrameIdx, obj_id: ObjId },
    #[error("no condition entry anywhere in the bank; cannot propagate without a prompt")]
    NoPrompt,
}

/// One propagation call, as recorded for the stats export.
#[derive(Clone, Debug)]
pub struct PropagationRow {
    pub call_no: u64,
    pub head: FrameIdx,
    pub span: usize,
    /// Frame indices in visit order (newest first).
    pub visited: Vec<FrameIdx>,
    /// Frames released right after this call.
    pub released: Vec<FrameIdx>,
    /// Cumulative counter after this call.
    pub frames_propagated_total: u64,
    /// Resident frames at propagation time (the step's peak, before the
    /// post-call release).
    pub resident_at_propagation: usize,
    /// Resident frames and bytes after the post-call release.
    pub resident_frames: usize,
    pub fast_bytes: u64,
    pub slow_bytes: u64,
    pub num_frames_total: u64,
}

/// Work counters for the whole stream.
#[derive(Clone, Debug, Default)]
pub struct PropagationStats {
    pub frames_propagated_total: u64,
    pub propagation_calls: u64,
    pub detector_calls: u64,
    /// Times a propagation window wanted a frame that had been evicted.
    /// Always zero under a validated configuration.
    pub eviction_violations: u64,
    pub rows: Vec<PropagationRow>,
}

impl PropagationStats {
    /// Highest resident frame count over all recorded calls, measured at
    /// propagation time before the post-call release.
    pub fn peak_resident_frames(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.resident_at_propagation)
            .max()
            .unwrap_or(0)
    }

    pub fn peak_bytes(&self) -> u64 {
        self.rows
            .iter()
            .map(|r| r.fast_bytes + r.slow_bytes)
            .max()
            .unwrap_or(0)
    }

    /// Lowest post-release resident count over calls where a release ran.
    pub fn floor_resident_frames(&self) -> usize {
        self.rows.iter().map(|r| r.resident_frames).min().unwrap_or(0)
    }
}

/// Detection side of a backend: boxes for the given frame payload.
pub trait Detector {
    type Payload;
    fn detect(&mut self, frame_idx: FrameIdx, payload: &Self::Payload) -> Vec<PromptBox>;
}

/// Segmentation side of a backend.
///
/// The behavioral contract: an object can be segmented at a frame iff it is
/// prompted there or some attention frame remembers it (non-null memory row).
/// `remembered` is precomputed from the bank for exactly that rule.
pub struct SegmentRequest<'a, P> {
    pub frame_idx: FrameIdx,
    pub payload: &'a P,
    /// Prompts for this frame; empty on non-condition frames.
    pub prompts: &'a [PromptBox],
    /// Output of attention-frame selection, ascending.
    pub attention_frames: &'a [FrameIdx],
    /// Objects with non-null memory on some attention frame.
    pub remembered: &'a BTreeSet<ObjId>,
}

pub trait Segmenter {
    type Payload;
    fn segment(&mut self, request: &SegmentRequest<'_, Self::Payload>) -> BTreeMap<ObjId, Mask>;
}

/// Anything that yields the next frame of a stream.
pub trait FrameSource {
    type Payload;
    fn next_frame(&mut self) -> Option<FrameRecord<Self::Payload>>;
}

/// Result of one flush: the refreshed masks for every visited frame.
#[derive(Clone, Debug)]
pub struct FlushResult {
    pub head: FrameIdx,
    pub span: usize,
    pub masks: BTreeMap<FrameIdx, BTreeMap<ObjId, Mask>>,
}

/// The streaming engine: frame store, memory bank and schedule state.
pub struct StreamEngine<P> {
    config: PropagationConfig,
    store: FrameStore<P>,
    bank: MemoryBank,
    pending: Vec<FrameRecord<P>>,
    prompt_cache: BTreeMap<FrameIdx, Vec<PromptBox>>,
    stats: PropagationStats,
}

impl<P> StreamEngine<P> {
    pub fn new(config: PropagationConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self::new_unchecked(config))
    }

    pub fn with_preload(
        config: PropagationConfig,
        preload: &PreloadBank,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let mut engine = Self::new_unchecked(config);
        engine.bank = MemoryBank::with_preload(preload)?;
        Ok(engine)
    }

    /// Builds an engine without validating the configuration. Exists so the
    /// eviction-safety guard can be exercised with configurations the
    /// validator refuses.
    pub fn new_unchecked(config: PropagationConfig) -> Self {
        StreamEngine {
            config,
            store: FrameStore::new(),
            bank: MemoryBank::new(),
            pending: Vec::new(),
            prompt_cache: BTreeMap::new(),
            stats: PropagationStats::default(),
        }
    }

    pub fn config(&self) -> &PropagationConfig {
        &self.config
    }

    pub fn stats(&self) -> &PropagationStats {
        &self.stats
    }

    pub fn store(&self) -> &FrameStore<P> {
        &self.store
    }

    pub fn bank(&self) -> &MemoryBank {
        &self.bank
    }

    /// Consumes the engine, handing out the final bank and store (used for
    /// preload export after a run).
    pub fn into_parts(self) -> (MemoryBank, FrameStore<P>, PropagationStats) {
        (self.bank, self.store, self.stats)
    }

    /// Accepts the next stream frame. Returns the flush result once the
    /// pending buffer reaches `K` frames.
    pub fn ingest_frame<B>(
        &mut self,
        frame: FrameRecord<P>,
        backend: &mut B,
    ) -> Result<Option<FlushResult>, EngineError>
    where
        B: Detector<Payload = P> + Segmenter<Payload = P>,
    {
        let expected = self.store.num_frames_total() as FrameIdx + self.pending.len() as FrameIdx;
        if frame.global_idx != expected {
            return Err(EngineError::OutOfOrder {
                expected,
                got: frame.global_idx,
            });
        }
        self.pending.push(frame);
        if self.pending.len() == self.config.buffer_size {
            return Ok(Some(self.flush_pending(backend)?));
        }
        Ok(None)
    }

    /// Flushes a partial buffer at end of stream.
    pub fn finish<B>(&mut self, backend: &mut B) -> Result<Option<FlushResult>, EngineError>
    where
        B: Detector<Payload = P> + Segmenter<Payload = P>,
    {
        if self.pending.is_empty() {
            return Ok(None);
        }
        Ok(Some(self.flush_pending(backend)?))
    }

    /// Drives a full ingest/flush/propagate loop over up to `n` frames.
    pub fn run_stream<S, B>(
        &mut self,
        source: &mut S,
        backend: &mut B,
        n: usize,
    ) -> Result<&PropagationStats, EngineError>
    where
        S: FrameSource<Payload = P>,
        B: Detector<Payload = P> + Segmenter<Payload = P>,
    {
        for _ in 0..n {
            match source.next_frame() {
                Some(frame) => {
                    self.ingest_frame(frame, backend)?;
                }
                None => break,
            }
        }
        self.finish(backend)?;
        Ok(&self.stats)
    }

    fn flush_pending<B>(&mut self, backend: &mut B) -> Result<FlushResult, EngineError>
    where
        B: Detector<Payload = P> + Segmenter<Payload = P>,
    {
        let flushed: Vec<FrameIdx> = self.pending.iter().map(|f| f.global_idx).collect();
        let frames = core::mem::take(&mut self.pending);
        self.store.append_frames(frames)?;

        let condition = designate_condition_frames(&flushed, self.config.detection_interval, 0);
        let mut detections: Vec<(FrameIdx, Vec<PromptBox>)> = Vec::new();
        for &f in &condition {
            let rec = self.store.get_frame(f)?;
            let boxes = backend.detect(f, &rec.payload);
            self.stats.detector_calls += 1;
            if !boxes.is_empty() {
                detections.push((f, boxes));
            }
        }
        for (f, boxes) in detections {
            self.apply_prompts(f, boxes)?;
            // Prompt-time single-frame inference: the condition frame gets
            // real memory before propagation starts, so the rest of the
            // flush can already attend to it.
            self.infer_frame(backend, f)?;
        }

        let head = *flushed.last().expect("flush of an empty buffer");
        let masks = self.propagate(backend, head)?;
        let span = masks.len();

        let released = match self.config.retention {
            Some(retention) => {
                // The release anchor is the count of frames loaded so far
                // (head + 1): with retention R it keeps exactly the last R
                // frames, and any future window of up to M <= R frames stays
                // resident.
                let current = self.store.num_frames_total() as FrameIdx;
                let released = self.bank.release_old_frames(current, retention, &mut self.store);
                let cutoff = current - retention as FrameIdx;
                self.prompt_cache.retain(|&f, _| f >= cutoff);
                released
            }
            None => Vec::new(),
        };

        if let Some(row) = self.stats.rows.last_mut() {
            row.released = released;
            row.resident_frames = self.store.resident_count();
            let bytes = self.store.footprint_by_tier();
            row.fast_bytes = bytes.fast;
            row.slow_bytes = bytes.slow;
        }

        Ok(FlushResult { head, span, masks })
    }

    /// Routes prompt boxes into the bank: unknown ids are registered and a
    /// windowed back-update reshapes recent entries, then the frame is marked
    /// as a condition frame. Prompts are cached so re-propagation reuses the
    /// original boxes.
    pub fn apply_prompts(
        &mut self,
        frame_idx: FrameIdx,
        boxes: Vec<PromptBox>,
    ) -> Result<(), EngineError> {
        let mut seen = BTreeSet::new();
        for b in &boxes {
            if !seen.insert(b.obj_id) {
                return Err(EngineError::DuplicatePrompt {
                    frame: frame_idx,
                    obj_id: b.obj_id,
                });
            }
        }
        let mut registered_new = false;
        for b in &boxes {
            if !self.bank.registry().contains(b.obj_id) {
                self.bank.register_object(b.obj_id)?;
                registered_new = true;
            }
        }
        if registered_new {
            self.bank
                .update_memory_for_new_ids(frame_idx, self.config.effective_update_window());
        }
        let mut rows = self
            .bank
            .entry(frame_idx)
            .map(|e| e.rows.clone())
            .unwrap_or_default();
        rows.resize(self.bank.registry().len(), MemoryRow::NULL);
        self.bank.write_frame_output(frame_idx, true, rows)?;
        self.prompt_cache.insert(frame_idx, boxes);
        Ok(())
    }

    /// Re-evaluates frames from `head` down to
    /// `max(head - M + 1, oldest resident)`, newest first, and returns the
    /// refreshed masks for the span.
    pub fn propagate<B>(
        &mut self,
        backend: &mut B,
        head: FrameIdx,
    ) -> Result<BTreeMap<FrameIdx, BTreeMap<ObjId, Mask>>, EngineError>
    where
        B: Segmenter<Payload = P>,
    {
        if !self.bank.has_condition_entries() {
            return Err(EngineError::NoPrompt);
        }

        // Violation detector: every frame within M of the head that was ever
        // loaded must still be resident. Fires only when eviction outpaced
        // the propagation window, i.e. when the retention guard was bypassed.
        let check_lo = match self.config.max_frames_to_track {
            Some(m) => (head - m as FrameIdx).max(0),
            None => 0,
        };
        for f in check_lo..=head {
            if (f as u64) < self.store.num_frames_total() && !self.store.contains(f) {
                self.stats.eviction_violations += 1;
            }
        }

        let oldest = self
            .store
            .oldest_resident()
            .ok_or(FrameStoreError::MissingFrame(head))?;
        let mut lo = oldest;
        if let Some(m) = self.config.max_frames_to_track {
            lo = lo.max(head - m as FrameIdx + 1);
        }

        let mut results: BTreeMap<FrameIdx, BTreeMap<ObjId, Mask>> = BTreeMap::new();
        let mut visited = Vec::with_capacity((head - lo + 1) as usize);
        let mut f = head;
        while f >= lo {
            let masks = self.infer_frame(backend, f)?;
            visited.push(f);
            results.insert(f, masks);
            self.stats.frames_propagated_total += 1;
            f -= 1;
        }

        self.stats.propagation_calls += 1;
        let bytes = self.store.footprint_by_tier();
        self.stats.rows.push(PropagationRow {
            call_no: self.stats.propagation_calls,
            head,
            span: visited.len(),
            visited,
            released: Vec::new(),
            frames_propagated_total: self.stats.frames_propagated_total,
            resident_at_propagation: self.store.resident_count(),
            resident_frames: self.store.resident_count(),
            fast_bytes: bytes.fast,
            slow_bytes: bytes.slow,
            num_frames_total: self.store.num_frames_total(),
        });

        Ok(results)
    }

    /// Runs single-frame inference: segments `frame_idx` against the current
    /// memory and stores the resulting rows. Shared by the reverse
    /// propagation loop and the prompt-time refresh.
    fn infer_frame<B>(
        &mut self,
        backend: &mut B,
        frame_idx: FrameIdx,
    ) -> Result<BTreeMap<ObjId, Mask>, EngineError>
    where
        B: Segmenter<Payload = P>,
    {
        let attention = self
            .bank
            .select_attention_frames(frame_idx, self.config.attention_limit);
        let remembered = self.bank.remembered_objects(&attention);
        let prompts: &[PromptBox] = self
            .prompt_cache
            .get(&frame_idx)
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        let payload = &self.store.get_frame(frame_idx)?.payload;
        let request = SegmentRequest {
            frame_idx,
            payload,
            prompts,
            attention_frames: &attention,
            remembered: &remembered,
        };
        let masks = backend.segment(&request);

        let rows: Vec<MemoryRow> = self
            .bank
            .registry()
            .obj_ids()
            .iter()
            .map(|id| match masks.get(id).and_then(|m| m.centroid()) {
                Some((cx, cy)) => {
                    MemoryRow([cx as f32, cy as f32, masks[id].area() as f32, 1.0])
                }
                None => MemoryRow::NULL,
            })
            .collect();
        let is_condition = self.prompt_cache.contains_key(&frame_idx);
        self.bank.write_frame_output(frame_idx, is_condition, rows)?;
        Ok(masks)
    }
}

/// Indices designated as condition frames: those congruent to `phase`
/// modulo `interval`. The anchor lives in the global index space, so the
/// spacing is stable across flush boundaries.
pub fn designate_condition_frames(
    flushed: &[FrameIdx],
    interval: usize,
    phase: usize,
) -> Vec<FrameIdx> {
    flushed
        .iter()
        .copied()
        .filter(|&i| i.rem_euclid(interval as FrameIdx) == phase as FrameIdx)
        .collect()
}
