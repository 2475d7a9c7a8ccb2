//! Core engine for bounded-memory streaming video segmentation.
//!
//! The crate models the systems layer of a self-prompting segmentation
//! pipeline: frames stream in, a detector supplies box prompts on selected
//! condition frames, and a segmenter re-evaluates a limited window of recent
//! frames on every flush so late prompts can correct earlier outputs. Memory
//! stays bounded by evicting frames older than a retention horizon while a
//! preload memory bank imported from a previous video is never evicted.
//!
//! Everything here is IO-free and `no_std` (with `alloc`); file formats,
//! threading and the CLI live in the companion `cuestream-pipeline` crate.

#![no_std]

extern crate alloc;

pub mod billiards;
pub mod events;
pub mod frame_store;
pub mod mask;
pub mod math;
pub mod memory_bank;
pub mod propagation;

/// Global frame index within a video stream.
///
/// Signed so that preload memory imported from a previous video can live in
/// a reserved range below zero, where it can never collide with indices of
/// the video currently being streamed.
pub type FrameIdx = i64;

/// Identifier of a tracked object.
pub type ObjId = u32;

pub use frame_store::{FrameRecord, FrameStore, Precision, StorageTier};
pub use mask::Mask;
pub use memory_bank::{MemoryBank, MemoryRow, ObjectRegistry, PreloadBank, MEMORY_ROW_DIM};
pub use propagation::{
    Detector, PromptBox, PropagationConfig, PropagationStats, Segmenter, StreamEngine,
};
