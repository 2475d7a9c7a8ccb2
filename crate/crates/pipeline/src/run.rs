//! Two-worker pipeline assembly.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, SyncSender, TrySendError};
use std::sync::Arc;
use std::thread;

use cuestream_core::billiards::{
    BilliardsBackend, GroundTruthEvent, Scenario, SceneFrame, World,
};
use cuestream_core::events::{BallTracks, EventLog, TableGeometry};
use cuestream_core::math::ceil;
use cuestream_core::propagation::{
    ConfigError, Detector, EngineError, FlushResult, PromptBox, PropagationStats, Segmenter,
    StreamEngine,
};
use cuestream_core::{FrameIdx, FrameRecord, MemoryBank, PreloadBank};

use crate::config::PipelineConfig;
use crate::consumer::{Consumer, ConsumerOutput};
use crate::queue::{QueueItem, VideoSegments};

/// Backends that can surface pocket calibration boxes beside their
/// detections.
pub trait PocketSource {
    fn take_pocket_boxes(&mut self) -> Option<Vec<PromptBox>>;
}

impl PocketSource for BilliardsBackend {
    fn take_pocket_boxes(&mut self) -> Option<Vec<PromptBox>> {
        BilliardsBackend::take_pocket_boxes(self)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("worker panicked: {0}")]
    WorkerPanic(String),
}

impl PipelineError {
    /// Errors the operator can fix before a run ever starts.
    pub fn is_config_error(&self) -> bool {
        matches!(self, PipelineError::Config(_) | PipelineError::Scenario(_))
    }
}

/// Everything a completed run produces.
pub struct RunOutput {
    pub events: EventLog,
    pub stats: PropagationStats,
    pub oracle_events: Vec<GroundTruthEvent>,
    /// Final memory bank, retained for preload export.
    pub bank: MemoryBank,
    pub tracks: BallTracks,
    pub geometry: Option<TableGeometry>,
    pub peak_segments: usize,
    pub final_segments: usize,
    pub frames_pushed: u64,
    pub frames_processed: u64,
    pub backpressure_engagements: u64,
    pub max_revision: BTreeMap<FrameIdx, u32>,
    pub order_violations: u64,
    pub revision_violations: u64,
}

/// Runs a scenario through the standard billiards backend.
pub fn run(config: &PipelineConfig, scenario: &Scenario) -> Result<RunOutput, PipelineError> {
    let backend = BilliardsBackend::new(&scenario.table, scenario.noise.clone());
    run_with_backend(config, scenario, backend, None)
}

pub fn run_with_preload(
    config: &PipelineConfig,
    scenario: &Scenario,
    preload: Option<&PreloadBank>,
) -> Result<RunOutput, PipelineError> {
    let backend = BilliardsBackend::new(&scenario.table, scenario.noise.clone());
    run_with_backend(config, scenario, backend, preload)
}

struct ProducerOutput {
    stats: PropagationStats,
    bank: MemoryBank,
    oracle_events: Vec<GroundTruthEvent>,
    frames_pushed: u64,
    backpressure: u64,
}

/// Runs a scenario with a caller-supplied backend (tests wrap the standard
/// one to inject faults). Exactly two workers run concurrently: the
/// inference producer and the post-processing consumer, joined at the end.
pub fn run_with_backend<B>(
    config: &PipelineConfig,
    scenario: &Scenario,
    mut backend: B,
    preload: Option<&PreloadBank>,
) -> Result<RunOutput, PipelineError>
where
    B: Detector<Payload = SceneFrame> + Segmenter<Payload = SceneFrame> + PocketSource + Send,
{
    config.propagation.validate()?;
    crate::config::validate_scenario(scenario).map_err(PipelineError::Scenario)?;
    let thresholds = config.thresholds_for(scenario);
    crate::config::validate_thresholds(&thresholds).map_err(PipelineError::Scenario)?;

    let (queue_cap, segments_cap) = match config.propagation.max_frames_to_track {
        Some(m) => (4 * m, m + config.propagation.buffer_size),
        None => (4 * 1024, usize::MAX),
    };
    let segments = VideoSegments::new(segments_cap);
    let (tx, rx) = sync_channel::<QueueItem>(queue_cap.max(1));
    let backpressure = AtomicU64::new(0);

    let mut engine = match preload {
        Some(p) => StreamEngine::with_preload(config.propagation, p)?,
        None => StreamEngine::new(config.propagation)?,
    };

    let (producer_result, consumer_output) = thread::scope(|scope| {
        let segments_ref = &segments;
        let backpressure_ref = &backpressure;
        let producer = scope.spawn(move || {
            let result = produce(
                config,
                scenario,
                &mut engine,
                &mut backend,
                &tx,
                segments_ref,
                backpressure_ref,
            );
            // The consumer must always see the sentinel, even on error.
            let _ = tx.send(QueueItem::End);
            let (bank, _, stats) = engine.into_parts();
            result.map(|(oracle_events, frames_pushed)| ProducerOutput {
                stats,
                bank,
                oracle_events,
                frames_pushed,
                backpressure: backpressure_ref.load(Ordering::Relaxed),
            })
        });
        let consumer = scope.spawn(move || {
            Consumer::new(thresholds, config.consumer_delay_ms).run(rx, segments_ref)
        });

        let producer_result = producer
            .join()
            .map_err(|_| PipelineError::WorkerPanic("inference worker".into()));
        let consumer_output = consumer
            .join()
            .map_err(|_| PipelineError::WorkerPanic("post-processing worker".into()));
        (producer_result, consumer_output)
    });

    let producer: ProducerOutput = producer_result??;
    let consumer: ConsumerOutput = consumer_output?;

    Ok(RunOutput {
        events: consumer.events,
        stats: producer.stats,
        oracle_events: producer.oracle_events,
        bank: producer.bank,
        tracks: consumer.tracks,
        geometry: consumer.geometry,
        peak_segments: segments.peak(),
        final_segments: segments.len(),
        frames_pushed: producer.frames_pushed,
        frames_processed: consumer.frames_processed,
        backpressure_engagements: producer.backpressure,
        max_revision: consumer.max_revision,
        order_violations: consumer.order_violations,
        revision_violations: consumer.revision_violations,
    })
}

fn produce<B>(
    config: &PipelineConfig,
    scenario: &Scenario,
    engine: &mut StreamEngine<SceneFrame>,
    backend: &mut B,
    tx: &SyncSender<QueueItem>,
    segments: &VideoSegments,
    backpressure: &AtomicU64,
) -> Result<(Vec<GroundTruthEvent>, u64), EngineError>
where
    B: Detector<Payload = SceneFrame> + Segmenter<Payload = SceneFrame> + PocketSource,
{
    let mut world = World::from_scenario(scenario);
    let mut oracle_events = Vec::new();
    let mut revisions: BTreeMap<FrameIdx, u32> = BTreeMap::new();
    let mut frames_pushed = 0u64;
    let n = scenario.frames;

    let emit = |flush: FlushResult,
                    backend: &mut B,
                    engine: &StreamEngine<SceneFrame>,
                    revisions: &mut BTreeMap<FrameIdx, u32>,
                    frames_pushed: &mut u64| {
        if let Some(pockets) = backend.take_pocket_boxes() {
            send(tx, QueueItem::Pockets(pockets), backpressure);
        }
        let call_no = engine.stats().propagation_calls;
        for (frame, masks) in flush.masks {
            let revision = revisions.entry(frame).or_insert(0);
            *revision += 1;
            let masks = Arc::new(masks);
            if segments.insert(frame, Arc::clone(&masks)) {
                backpressure.fetch_add(1, Ordering::Relaxed);
            }
            send(
                tx,
                QueueItem::Frame {
                    frame,
                    revision: *revision,
                    call_no,
                    masks,
                },
                backpressure,
            );
            *frames_pushed += 1;
        }
    };

    // A scenario with no balls at all can never produce a prompt; its
    // flushes are benign no-ops rather than failures.
    let expect_prompts = !scenario.balls.is_empty();
    for i in 0..n {
        debug_assert_eq!(world.frame(), i as FrameIdx);
        let scene = world.snapshot();
        let record = FrameRecord {
            global_idx: i as FrameIdx,
            native_width: ceil(scenario.table.width) as u32,
            native_height: ceil(scenario.table.height) as u32,
            internal_side: config.internal_side,
            payload: scene,
            precision: config.precision,
            tier: config.tier,
        };
        match engine.ingest_frame(record, backend) {
            Ok(Some(flush)) => emit(flush, backend, engine, &mut revisions, &mut frames_pushed),
            Ok(None) => {}
            Err(EngineError::NoPrompt) if !expect_prompts => {}
            Err(e) => return Err(e),
        }
        if i + 1 < n {
            oracle_events.extend(world.step());
        }
    }
    match engine.finish(backend) {
        Ok(Some(flush)) => emit(flush, backend, engine, &mut revisions, &mut frames_pushed),
        Ok(None) => {}
        Err(EngineError::NoPrompt) if !expect_prompts => {}
        Err(e) => return Err(e),
    }
    Ok((oracle_events, frames_pushed))
}

fn send(tx: &SyncSender<QueueItem>, item: QueueItem, backpressure: &AtomicU64) {
    match tx.try_send(item) {
        Ok(()) => {}
        Err(TrySendError::Full(item)) => {
            backpressure.fetch_add(1, Ordering::Relaxed);
            let _ = tx.send(item);
        }
        Err(TrySendError::Disconnected(_)) => {}
    }
}
