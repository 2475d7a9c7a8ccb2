//! Engine scheduling behavior: buffering, prompting, preload and eviction.

mod common;

use common::{frame, CountingSource, StubBackend};
use cuestream_core::propagation::{
    BoxRect, EngineError, PromptBox, PropagationConfig, StreamEngine,
};
use cuestream_core::MemoryBank;

fn config(k: usize, m: Option<usize>, d: usize, retention: Option<usize>) -> PropagationConfig {
    PropagationConfig {
        buffer_size: k,
        max_frames_to_track: m,
        detection_interval: d,
        retention,
        attention_limit: 8,
        update_window: None,
    }
}

fn tiny_box(obj: u32) -> PromptBox {
    PromptBox::new(
        obj,
        BoxRect {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 2.0,
            y_max: 2.0,
        },
        1.0,
    )
    .unwrap()
}

#[test]
fn buffer_accumulates_k_frames_before_flushing() {
    let mut engine = StreamEngine::new(config(4, None, 1, None)).unwrap();
    let mut backend = StubBackend::new(&[1]);
    for i in 0..3 {
        assert!(engine.ingest_frame(frame(i), &mut backend).unwrap().is_none());
    }
    let flush = engine.ingest_frame(frame(3), &mut backend).unwrap().unwrap();
    assert_eq!(flush.head, 3);
    assert_eq!(flush.span, 4);
    assert_eq!(
        flush.masks.keys().copied().collect::<Vec<_>>(),
        vec![0, 1, 2, 3]
    );
}

#[test]
fn k_of_one_flushes_every_frame() {
    let mut engine = StreamEngine::new(config(1, None, 1, None)).unwrap();
    let mut backend = StubBackend::new(&[1]);
    for i in 0..5 {
        assert!(engine.ingest_frame(frame(i), &mut backend).unwrap().is_some());
    }
    assert_eq!(engine.stats().propagation_calls, 5);
}

#[test]
fn finish_flushes_partial_buffer() {
    let mut engine = StreamEngine::new(config(4, None, 1, None)).unwrap();
    let mut backend = StubBackend::new(&[1]);
    for i in 0..6 {
        engine.ingest_frame(frame(i), &mut backend).unwrap();
    }
    let last = engine.finish(&mut backend).unwrap().unwrap();
    assert_eq!(last.head, 5);
    assert!(engine.finish(&mut backend).unwrap().is_none());
}

#[test]
fn out_of_order_frame_is_rejected() {
    let mut engine = StreamEngine::new(config(4, None, 1, None)).unwrap();
    let mut backend = StubBackend::new(&[1]);
    engine.ingest_frame(frame(0), &mut backend).unwrap();
    let err = engine.ingest_frame(frame(2), &mut backend).unwrap_err();
    assert_eq!(err, EngineError::OutOfOrder { expected: 1, got: 2 });
}

#[test]
fn propagation_window_matches_head_minus_m() {
    let mut engine = StreamEngine::new(config(10, Some(20), 5, None)).unwrap();
    let mut source = CountingSource::new();
    let mut backend = StubBackend::new(&[1]);
    engine.run_stream(&mut source, &mut backend, 40).unwrap();
    let last = engine.stats().rows.last().unwrap();
    assert_eq!(last.head, 39);
    assert_eq!(last.span, 20);
    assert_eq!(last.visited.first().copied(), Some(39));
    assert_eq!(last.visited.last().copied(), Some(20));
}

#[test]
fn no_prompt_anywhere_is_an_error() {
    let mut engine = StreamEngine::new(config(4, None, 1, None)).unwrap();
    let mut backend = StubBackend::silent();
    for i in 0..3 {
        engine.ingest_frame(frame(i), &mut backend).unwrap();
    }
    let err = engine.ingest_frame(frame(3), &mut backend).unwrap_err();
    assert_eq!(err, EngineError::NoPrompt);
}

#[test]
fn duplicate_prompt_in_one_frame_is_rejected() {
    let mut engine: StreamEngine<()> = StreamEngine::new(config(4, None, 1, None)).unwrap();
    let err = engine
        .apply_prompts(0, vec![tiny_box(9), tiny_box(9)])
        .unwrap_err();
    assert_eq!(
        err,
        EngineError::DuplicatePrompt {
            frame: 0,
            obj_id: 9
        }
    );
}

#[test]
fn new_object_mid_stream_grows_registry_without_reset() {
    let mut engine = StreamEngine::new(config(10, Some(20), 5, None)).unwrap();
    let mut source = CountingSource::new();
    let mut backend = StubBackend::new(&[1, 2]);
    backend.appearing.push((5, 50));
    engine.run_stream(&mut source, &mut backend, 100).unwrap();

    let bank = engine.bank();
    assert_eq!(bank.registry().obj_ids(), &[1, 2, 5]);
    assert_eq!(bank.registry().slot_of(1), Some(0));
    assert_eq!(bank.registry().slot_of(5), Some(2));
    // Entries from before the registration survive (no reset), and within
    // the update window they are reshaped while old ones stay stale.
    assert!(bank.contains_frame(0));
    // Attention selection after the update only returns current-shaped
    // frames.
    for f in [60, 80, 99] {
        for a in bank.select_attention_frames(f, 8) {
            assert_eq!(
                bank.entry(a).unwrap().registry_size_at_update(),
                bank.registry().len(),
                "stale frame {a} selected at {f}"
            );
        }
    }
    // The new object is segmented from its first condition frame onward.
    let rows = engine.stats().rows.last().unwrap();
    assert!(rows.visited.iter().all(|f| *f >= 50));
}

#[test]
fn eviction_guard_violations_fire_only_when_bypassed() {
    // Validated configuration: zero violations.
    let mut engine = StreamEngine::new(config(1, Some(10), 1, Some(11))).unwrap();
    let mut source = CountingSource::new();
    let mut backend = StubBackend::new(&[1]);
    engine.run_stream(&mut source, &mut backend, 60).unwrap();
    assert_eq!(engine.stats().eviction_violations, 0);

    // Retention == M - 1 refused by validation...
    assert!(StreamEngine::<()>::new(config(1, Some(10), 1, Some(9))).is_err());

    // ...and, with the guard bypassed, the violation detector fires.
    let mut engine = StreamEngine::new_unchecked(config(1, Some(10), 1, Some(9)));
    let mut source = CountingSource::new();
    let mut backend = StubBackend::new(&[1]);
    engine.run_stream(&mut source, &mut backend, 60).unwrap();
    assert!(engine.stats().eviction_violations > 0);
}

#[test]
fn run_stream_of_zero_frames_leaves_counters_zero() {
    let mut engine = StreamEngine::new(config(4, None, 1, None)).unwrap();
    let mut source = CountingSource::new();
    let mut backend = StubBackend::new(&[1]);
    let stats = engine.run_stream(&mut source, &mut backend, 0).unwrap();
    assert_eq!(stats.frames_propagated_total, 0);
    assert_eq!(stats.propagation_calls, 0);
    assert_eq!(stats.detector_calls, 0);
}

#[test]
fn known_ids_leave_registry_untouched() {
    let mut engine: StreamEngine<()> = StreamEngine::new(config(4, None, 1, None)).unwrap();
    engine.apply_prompts(0, vec![tiny_box(3), tiny_box(1)]).unwrap();
    let before: Vec<u32> = engine.bank().registry().obj_ids().to_vec();
    engine.apply_prompts(1, vec![tiny_box(1), tiny_box(3)]).unwrap();
    assert_eq!(engine.bank().registry().obj_ids(), before.as_slice());
    assert!(engine.bank().entry(1).unwrap().is_condition);
}

#[test]
fn resident_bank_entries_bounded_between_propagations() {
    let (k, retention) = (5usize, 25usize);
    let mut engine = StreamEngine::new(config(k, Some(15), 5, Some(retention))).unwrap();
    let mut backend = StubBackend::new(&[1]);
    for i in 0..200 {
        let flushed = engine.ingest_frame(frame(i), &mut backend).unwrap().is_some();
        if flushed {
            assert!(
                engine.bank().resident_non_preload() <= retention + k,
                "bank held {} entries after the flush at frame {i}",
                engine.bank().resident_non_preload()
            );
        }
    }
}

#[test]
fn preload_seeds_inference_without_any_prompt() {
    // Run A: short stream over objects 1 and 2, export three frames.
    let mut engine = StreamEngine::new(config(5, None, 1, None)).unwrap();
    let mut source = CountingSource::new();
    let mut backend = StubBackend::new(&[1, 2]);
    engine.run_stream(&mut source, &mut backend, 20).unwrap();
    let (bank, _, _) = engine.into_parts();
    let preload = bank.export_preload(&[17, 18, 19]).unwrap();

    // Run B: mute detector entirely; preload alone carries the memory.
    let mut engine = StreamEngine::with_preload(config(5, None, 1, None), &preload).unwrap();
    let mut backend = StubBackend::silent();
    let mut next = 0;
    let flush = loop {
        let result = engine.ingest_frame(frame(next), &mut backend).unwrap();
        next += 1;
        if let Some(flush) = result {
            break flush;
        }
    };
    for masks in flush.masks.values() {
        assert!(masks.contains_key(&1) && masks.contains_key(&2));
    }

    // Control: same muted detector without preload raises the no-prompt
    // error.
    let mut engine = StreamEngine::new(config(5, None, 1, None)).unwrap();
    let mut backend = StubBackend::silent();
    let mut err = None;
    for i in 0..5 {
        match engine.ingest_frame(frame(i), &mut backend) {
            Ok(_) => {}
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    assert_eq!(err, Some(EngineError::NoPrompt));
}

#[test]
fn preload_with_empty_bank_still_errors_without_prompts() {
    let preload = MemoryBank::new().export_preload(&[]).unwrap();
    let mut engine = StreamEngine::with_preload(config(5, None, 1, None), &preload).unwrap();
    let mut backend = StubBackend::silent();
    let mut err = None;
    for i in 0..5 {
        if let Err(e) = engine.ingest_frame(frame(i), &mut backend) {
            err = Some(e);
            break;
        }
    }
    assert_eq!(err, Some(EngineError::NoPrompt));
}
