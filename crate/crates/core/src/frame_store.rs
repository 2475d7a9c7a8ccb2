//! Index-mapped, evictable store of frame payloads with byte accounting.
//!
//! Eviction makes storage non-contiguous, so every lookup goes through an
//! independent index mapping list (`images_idx`) rather than positional
//! indexing. `num_frames_total` counts frames loaded historically and never
//! decreases, even as old frames are released.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::FrameIdx;

/// Precision of the internal-resolution tensor representation of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Precision {
    Single,
    Half,
}

/// Which accounting bucket a resident frame is charged to.
///
/// `Slow` models frame data offloaded to host memory; the label changes
/// nothing but the bucket its bytes are reported under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StorageTier {
    Fast,
    Slow,
}

/// One buffered frame: an opaque payload plus the metadata the byte model
/// needs. Payloads are whatever the backend works on (scene descriptors in
/// the synthetic backend), not necessarily pixels.
#[derive(Clone, Debug)]
pub struct FrameRecord<P> {
    pub global_idx: FrameIdx,
    pub native_width: u32,
    pub native_height: u32,
    /// Side of the square model-input resolution.
    pub internal_side: u32,
    pub payload: P,
    pub precision: Precision,
    pub tier: StorageTier,
}

impl<P> FrameRecord<P> {
    /// Bytes of the native-resolution buffer (3 channels, float32).
    pub fn native_bytes(&self) -> u64 {
        self.native_width as u64 * self.native_height as u64 * 3 * 4
    }

    /// Bytes of the internal-resolution tensor (3 channels, precision-sized).
    pub fn internal_bytes(&self) -> u64 {
        let per_elem = match self.precision {
            Precision::Single => 4,
            Precision::Half => 2,
        };
        self.internal_side as u64 * self.internal_side as u64 * 3 * per_elem
    }
}

/// Per-tier byte totals for the memory report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TierBytes {
    pub fast: u64,
    pub slow: u64,
}

impl TierBytes {
    pub fn total(&self) -> u64 {
        self.fast + self.slow
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FrameStoreError {
    #[error("frame index gap: expected {expected}, got {got}")]
    IndexGap { expected: FrameIdx, got: FrameIdx },
    #[error("frame {0} is not resident (evicted or never loaded)")]
    MissingFrame(FrameIdx),
}

/// Holds resident frames under the global-index mapping.
#[derive(Clone, Debug, Default)]
pub struct FrameStore<P> {
    records: Vec<FrameRecord<P>>,
    images_idx: Vec<FrameIdx>,
    num_frames_total: u64,
}

impl<P> FrameStore<P> {
    pub fn new() -> Self {
        FrameStore {
            records: Vec::new(),
            images_idx: Vec::new(),
            num_frames_total: 0,
        }
    }

    /// Appends frames whose global indices must be consecutive and start at
    /// `num_frames_total`.
    pub fn append_frames(
        &mut self,
        frames: impl IntoIterator<Item = FrameRecord<P>>,
    ) -> Result<(), FrameStoreError> {
        for frame in frames {
            let expected = self.num_frames_total as FrameIdx;
            if frame.global_idx != expected {
                return Err(FrameStoreError::IndexGap {
                    expected,
                    got: frame.global_idx,
                });
            }
            self.images_idx.push(frame.global_idx);
            self.records.push(frame);
            self.num_frames_total += 1;
        }
        Ok(())
    }

    /// Looks a frame up by its global index via the index mapping list.
    pub fn get_frame(&self, frame_idx: FrameIdx) -> Result<&FrameRecord<P>, FrameStoreError> {
        let pos = self
            .images_idx
            .iter()
            .position(|&i| i == frame_idx)
            .ok_or(FrameStoreError::MissingFrame(frame_idx))?;
        Ok(&self.records[pos])
    }

    pub fn contains(&self, frame_idx: FrameIdx) -> bool {
        self.images_idx.contains(&frame_idx)
    }

    /// Releases every resident frame with `global_idx < cutoff` that is not
    /// protected. Idempotent; `num_frames_total` is unaffected.
    pub fn release_frames_before(&mut self, cutoff: FrameIdx, protected: &BTreeSet<FrameIdx>) {
        let mut keep = self
            .images_idx
            .iter()
            .map(|&i| i >= cutoff || protected.contains(&i));
        self.records.retain(|_| keep.next().unwrap());
        self.images_idx
            .retain(|&i| i >= cutoff || protected.contains(&i));
    }

    /// Total bytes of resident frames (native buffers plus internal tensors).
    pub fn footprint_bytes(&self) -> u64 {
        self.footprint_by_tier().total()
    }

    pub fn footprint_by_tier(&self) -> TierBytes {
        let mut bytes = TierBytes::default();
        for rec in &self.records {
            let b = rec.native_bytes() + rec.internal_bytes();
            match rec.tier {
                StorageTier::Fast => bytes.fast += b,
                StorageTier::Slow => bytes.slow += b,
            }
        }
        bytes
    }

    pub fn resident_count(&self) -> usize {
        self.records.len()
    }

    /// Count of all frames ever appended, regardless of releases.
    pub fn num_frames_total(&self) -> u64 {
        self.num_frames_total
    }

    pub fn images_idx(&self) -> &[FrameIdx] {
        &self.images_idx
    }

    /// Oldest resident global index, if any frame is resident.
    pub fn oldest_resident(&self) -> Option<FrameIdx> {
        self.images_idx.first().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(idx: FrameIdx) -> FrameRecord<()> {
        FrameRecord {
            global_idx: idx,
            native_width: 1920,
            native_height: 1080,
            internal_side: 1024,
            payload: (),
            precision: Precision::Single,
            tier: StorageTier::Fast,
        }
    }

    #[test]
    fn append_assigns_identity_mapping() {
        let mut s = FrameStore::new();
        s.append_frames((0..3).map(rec)).unwrap();
        assert_eq!(s.images_idx(), &[0, 1, 2]);
        assert_eq!(s.num_frames_total(), 3);
    }

    #[test]
    fn append_extends_after_eviction_history() {
        // Replay: load 0..=4, evict 0..=2, then append 5 and 6.
        let mut s = FrameStore::new();
        s.append_frames((0..5).map(rec)).unwrap();
        s.release_frames_before(3, &BTreeSet::new());
        assert_eq!(s.images_idx(), &[3, 4]);
        s.append_frames((5..7).map(rec)).unwrap();
        assert_eq!(s.images_idx(), &[3, 4, 5, 6]);
        assert_eq!(s.num_frames_total(), 7);
    }

    #[test]
    fn append_rejects_index_gap() {
        let mut s = FrameStore::new();
        s.append_frames((0..5).map(rec)).unwrap();
        let err = s.append_frames([rec(7)]).unwrap_err();
        assert_eq!(err, FrameStoreError::IndexGap { expected: 5, got: 7 });
    }

    #[test]
    fn get_frame_uses_index_mapping() {
        // Hand-simulated non-contiguous mapping [4, 7, 9].
        let mut s = FrameStore::new();
        s.append_frames((0..10).map(rec)).unwrap();
        s.release_frames_before(10, &BTreeSet::from([4, 7, 9]));
        assert_eq!(s.images_idx(), &[4, 7, 9]);
        // Frame 7 lives at storage position 1, found via the mapping.
        assert_eq!(s.get_frame(7).unwrap().global_idx, 7);
        assert_eq!(s.get_frame(5).unwrap_err(), FrameStoreError::MissingFrame(5));
    }

    #[test]
    fn get_sole_frame() {
        let mut s = FrameStore::new();
        s.append_frames([rec(0)]).unwrap();
        assert_eq!(s.get_frame(0).unwrap().global_idx, 0);
    }

    #[test]
    fn release_respects_cutoff_and_protection() {
        let mut s = FrameStore::new();
        s.append_frames((0..10).map(rec)).unwrap();
        let mut t = s.clone();

        s.release_frames_before(6, &BTreeSet::new());
        assert_eq!(s.images_idx(), &[6, 7, 8, 9]);
        assert_eq!(s.num_frames_total(), 10);

        t.release_frames_before(6, &BTreeSet::from([2]));
        assert_eq!(t.images_idx(), &[2, 6, 7, 8, 9]);
    }

    #[test]
    fn release_below_zero_is_noop() {
        let mut s = FrameStore::new();
        s.append_frames((0..4).map(rec)).unwrap();
        s.release_frames_before(0, &BTreeSet::new());
        assert_eq!(s.resident_count(), 4);
    }

    #[test]
    fn footprint_native_component_matches_hd_frame() {
        // 1920*1080*3*4 bytes = 24_883_200, about 0.0249 GB per frame.
        let r = rec(0);
        assert_eq!(r.native_bytes(), 24_883_200);
        let mut s = FrameStore::new();
        s.append_frames([r]).unwrap();
        assert_eq!(
            s.footprint_bytes(),
            24_883_200 + 1024 * 1024 * 3 * 4
        );
        assert_eq!(FrameStore::<()>::new().footprint_bytes(), 0);
    }

    #[test]
    fn half_precision_halves_internal_component() {
        let single = rec(0);
        let half = FrameRecord {
            precision: Precision::Half,
            ..rec(0)
        };
        assert_eq!(single.internal_bytes(), 12_582_912);
        assert_eq!(half.internal_bytes(), 6_291_456);
        assert_eq!(single.internal_bytes(), 2 * half.internal_bytes());
        // Native component is unaffected by precision.
        assert_eq!(single.native_bytes(), half.native_bytes());
    }

    #[test]
    fn tier_splits_accounting_buckets() {
        let mut s = FrameStore::new();
        s.append_frames([rec(0)]).unwrap();
        s.append_frames([FrameRecord {
            tier: StorageTier::Slow,
            ..rec(1)
        }])
        .unwrap();
        let t = s.footprint_by_tier();
        assert_eq!(t.fast, t.slow);
        assert_eq!(t.total(), s.footprint_bytes());
    }
}
