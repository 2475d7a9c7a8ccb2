//! Per-frame, per-object memory bookkeeping.
//!
//! The bank mirrors the inference-state layout of a video predictor:
//! condition and non-condition outputs per frame, a per-object mirror of the
//! same data, a consolidated set of condition frame indices, and an
//! append-only object registry. Entries written before an object was
//! registered keep their old row count ("stale shape") until a bounded
//! back-update reshapes them; attention selection never returns a
//! stale-shaped entry, so shape mismatches cannot reach the segmenter.
//!
//! Preload entries imported from a previous video are remapped into a
//! reserved index range below zero and survive every eviction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::frame_store::FrameStore;
use crate::{FrameIdx, ObjId};

/// Width of a memory feature row.
pub const MEMORY_ROW_DIM: usize = 4;

/// Feature row for one object at one frame. All-zero rows mean "no prior
/// memory for this object here".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MemoryRow(pub [f32; MEMORY_ROW_DIM]);

impl MemoryRow {
    pub const NULL: MemoryRow = MemoryRow([0.0; MEMORY_ROW_DIM]);

    pub fn is_null(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

/// Append-only object registry; an object's row slot never changes.
#[derive(Clone, Debug, Default)]
pub struct ObjectRegistry {
    obj_ids: Vec<ObjId>,
    slot_of: BTreeMap<ObjId, usize>,
}

impl ObjectRegistry {
    pub fn len(&self) -> usize {
        self.obj_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obj_ids.is_empty()
    }

    pub fn obj_ids(&self) -> &[ObjId] {
        &self.obj_ids
    }

    pub fn slot_of(&self, obj_id: ObjId) -> Option<usize> {
        self.slot_of.get(&obj_id).copied()
    }

    pub fn contains(&self, obj_id: ObjId) -> bool {
        self.slot_of.contains_key(&obj_id)
    }

    fn push(&mut self, obj_id: ObjId) -> Result<usize, BankError> {
        if self.contains(obj_id) {
            return Err(BankError::AlreadyRegistered(obj_id));
        }
        let slot = self.obj_ids.len();
        self.obj_ids.push(obj_id);
        self.slot_of.insert(obj_id, slot);
        Ok(slot)
    }
}

/// Memory entry for one frame: one row per registry slot as of the last
/// time this entry was updated.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryEntry {
    pub frame_idx: FrameIdx,
    pub is_condition: bool,
    pub rows: Vec<MemoryRow>,
}

impl MemoryEntry {
    /// Registry size this entry was last shaped for.
    pub fn registry_size_at_update(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Clone, Debug, Default)]
struct PerObjOutputs {
    cond: BTreeMap<FrameIdx, MemoryRow>,
    non_cond: BTreeMap<FrameIdx, MemoryRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BankError {
    #[error("object {0} is already registered")]
    AlreadyRegistered(ObjId),
    #[error("row count {got} does not match registry size {expected}")]
    RowCountMismatch { expected: usize, got: usize },
    #[error("frame {0} has no entry in the bank")]
    MissingFrame(FrameIdx),
}

/// The memory bank.
#[derive(Clone, Debug, Default)]
pub struct MemoryBank {
    cond_frame_outputs: BTreeMap<FrameIdx, MemoryEntry>,
    non_cond_frame_outputs: BTreeMap<FrameIdx, MemoryEntry>,
    per_obj_outputs: BTreeMap<ObjId, PerObjOutputs>,
    consolidated_frame_inds: BTreeSet<FrameIdx>,
    preload_frame_inds: BTreeSet<FrameIdx>,
    registry: ObjectRegistry,
}

impl MemoryBank {
    /// Empty bank: no preload, no objects.
    pub fn new() -> Self {
        MemoryBank::default()
    }

    /// Bank pre-populated from a serialized preload payload.
    ///
    /// Preload frame indices are remapped, order preserving, into
    /// `-n..=-1` so they can never collide with indices of the new video
    /// and are trivially excluded from recency windows.
    pub fn with_preload(preload: &PreloadBank) -> Result<Self, PreloadFormatError> {
        preload.validate()?;
        let mut bank = MemoryBank::new();
        for &id in &preload.obj_ids {
            // validate() already rejected duplicates
            bank.registry.push(id).expect("duplicate object id");
            bank.per_obj_outputs.insert(id, PerObjOutputs::default());
        }
        let mut sorted: Vec<&PreloadEntry> = preload.entries.iter().collect();
        sorted.sort_by_key(|e| e.frame_idx);
        let n = sorted.len() as FrameIdx;
        for (k, entry) in sorted.iter().enumerate() {
            let idx = -n + k as FrameIdx;
            bank.preload_frame_inds.insert(idx);
            bank.insert_entry(idx, entry.is_condition, entry.rows.clone());
        }
        Ok(bank)
    }

    pub fn registry(&self) -> &ObjectRegistry {
        &self.registry
    }

    pub fn preload_frame_inds(&self) -> &BTreeSet<FrameIdx> {
        &self.preload_frame_inds
    }

    pub fn consolidated_frame_inds(&self) -> &BTreeSet<FrameIdx> {
        &self.consolidated_frame_inds
    }

    pub fn entry(&self, frame_idx: FrameIdx) -> Option<&MemoryEntry> {
        self.cond_frame_outputs
            .get(&frame_idx)
            .or_else(|| self.non_cond_frame_outputs.get(&frame_idx))
    }

    pub fn contains_frame(&self, frame_idx: FrameIdx) -> bool {
        self.entry(frame_idx).is_some()
    }

    /// True if any condition entry exists (preload included). Propagation
    /// cannot start without one.
    pub fn has_condition_entries(&self) -> bool {
        !self.cond_frame_outputs.is_empty()
    }

    /// Count of resident non-preload entries.
    pub fn resident_non_preload(&self) -> usize {
        self.cond_frame_outputs
            .keys()
            .chain(self.non_cond_frame_outputs.keys())
            .filter(|i| !self.preload_frame_inds.contains(i))
            .count()
    }

    /// Registers a new object id, extending the registry by one slot.
    /// No frame entries are touched; a subsequent
    /// [`update_memory_for_new_ids`](Self::update_memory_for_new_ids)
    /// reshapes recent entries.
    pub fn register_object(&mut self, obj_id: ObjId) -> Result<usize, BankError> {
        let slot = self.registry.push(obj_id)?;
        self.per_obj_outputs.insert(obj_id, PerObjOutputs::default());
        Ok(slot)
    }

    /// Reshapes entries close to `current_idx` (and every preload entry) to
    /// the current registry size, filling new slots with null rows. Entries
    /// outside the window are left stale.
    pub fn update_memory_for_new_ids(&mut self, current_idx: FrameIdx, max_update_frames: usize) {
        let in_window = |f: FrameIdx| current_idx - f < max_update_frames as FrameIdx;
        let targets: Vec<FrameIdx> = self
            .cond_frame_outputs
            .keys()
            .chain(self.non_cond_frame_outputs.keys())
            .copied()
            .filter(|&f| self.preload_frame_inds.contains(&f) || in_window(f))
            .collect();
        for f in targets {
            self.reshape_entry(f);
        }
    }

    fn reshape_entry(&mut self, frame_idx: FrameIdx) {
        let size = self.registry.len();
        let (old, is_cond) = {
            let (entry, is_cond) = match self.cond_frame_outputs.get_mut(&frame_idx) {
                Some(e) => (e, true),
                None => match self.non_cond_frame_outputs.get_mut(&frame_idx) {
                    Some(e) => (e, false),
                    None => return,
                },
            };
            let old = entry.rows.len();
            if old >= size {
                return;
            }
            entry.rows.resize(size, MemoryRow::NULL);
            (old, is_cond)
        };
        for slot in old..size {
            let id = self.registry.obj_ids[slot];
            let per = self.per_obj_outputs.entry(id).or_default();
            if is_cond {
                per.cond.insert(frame_idx, MemoryRow::NULL);
            } else {
                per.non_cond.insert(frame_idx, MemoryRow::NULL);
            }
        }
    }

    /// Frames whose memory participates in attention at `current_idx`: up to
    /// `limit` most recent current-shaped entries below `current_idx`, plus
    /// every condition frame (preload included) wherever it sits. Condition
    /// frames after `current_idx` are what let a late prompt correct
    /// already-inferred frames during reverse propagation. Returned
    /// ascending; stale-shaped entries are never returned.
    pub fn select_attention_frames(&self, current_idx: FrameIdx, limit: usize) -> Vec<FrameIdx> {
        let size = self.registry.len();
        let mut picked: Vec<FrameIdx> = Vec::new();
        for (&f, entry) in self
            .non_cond_frame_outputs
            .iter()
            .filter(|(f, _)| !self.preload_frame_inds.contains(f) && **f < current_idx)
        {
            if entry.rows.len() == size {
                picked.push(f);
            }
        }
        picked.sort_unstable();
        if picked.len() > limit {
            picked.drain(..picked.len() - limit);
        }
        for (&f, entry) in &self.cond_frame_outputs {
            if f != current_idx && entry.rows.len() == size {
                picked.push(f);
            }
        }
        picked.sort_unstable();
        picked.dedup();
        picked
    }

    /// Objects that have a non-null memory row on any of the given frames.
    pub fn remembered_objects(&self, frames: &[FrameIdx]) -> BTreeSet<ObjId> {
        let mut out = BTreeSet::new();
        for &f in frames {
            if let Some(entry) = self.entry(f) {
                for (slot, row) in entry.rows.iter().enumerate() {
                    if !row.is_null() {
                        out.insert(self.registry.obj_ids[slot]);
                    }
                }
            }
        }
        out
    }

    /// Stores the rows produced for one frame. Condition status is sticky: a
    /// non-condition write to a frame that already holds a condition entry
    /// refreshes that entry in place, keeping the maps disjoint on keys.
    pub fn write_frame_output(
        &mut self,
        frame_idx: FrameIdx,
        is_condition: bool,
        rows: Vec<MemoryRow>,
    ) -> Result<(), BankError> {
        if rows.len() != self.registry.len() {
            return Err(BankError::RowCountMismatch {
                expected: self.registry.len(),
                got: rows.len(),
            });
        }
        let promote = is_condition || self.cond_frame_outputs.contains_key(&frame_idx);
        self.insert_entry(frame_idx, promote, rows);
        Ok(())
    }

    fn insert_entry(&mut self, frame_idx: FrameIdx, is_condition: bool, rows: Vec<MemoryRow>) {
        for (slot, row) in rows.iter().enumerate() {
            let id = self.registry.obj_ids[slot];
            let per = self.per_obj_outputs.entry(id).or_default();
            if is_condition {
                per.cond.insert(frame_idx, *row);
                per.non_cond.remove(&frame_idx);
            } else {
                per.non_cond.insert(frame_idx, *row);
            }
        }
        let entry = MemoryEntry {
            frame_idx,
            is_condition,
            rows,
        };
        if is_condition {
            self.non_cond_frame_outputs.remove(&frame_idx);
            self.consolidated_frame_inds.insert(frame_idx);
            self.cond_frame_outputs.insert(frame_idx, entry);
        } else {
            self.non_cond_frame_outputs.insert(frame_idx, entry);
        }
    }

    /// Releases every frame older than `current_idx - retention` from the
    /// bank (condition and non-condition outputs, the per-object mirror and
    /// the consolidated set) and from the paired frame store. Preload frames
    /// are never released. Returns the released indices.
    pub fn release_old_frames<P>(
        &mut self,
        current_idx: FrameIdx,
        retention: usize,
        store: &mut FrameStore<P>,
    ) -> Vec<FrameIdx> {
        let cutoff = current_idx - retention as FrameIdx;
        let released: Vec<FrameIdx> = self
            .cond_frame_outputs
            .keys()
            .chain(self.non_cond_frame_outputs.keys())
            .copied()
            .chain(store.images_idx().iter().copied())
            .filter(|&f| f < cutoff && !self.preload_frame_inds.contains(&f))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for &f in &released {
            self.cond_frame_outputs.remove(&f);
            self.non_cond_frame_outputs.remove(&f);
            self.consolidated_frame_inds.remove(&f);
            for per in self.per_obj_outputs.values_mut() {
                per.cond.remove(&f);
                per.non_cond.remove(&f);
            }
        }
        store.release_frames_before(cutoff, &self.preload_frame_inds);
        released
    }

    /// Packages the requested frames (marked condition) together with the
    /// registry into a self-contained preload payload. Stale entries are
    /// padded to the current registry size with null rows.
    pub fn export_preload(&self, frames: &[FrameIdx]) -> Result<PreloadBank, BankError> {
        let mut sorted = frames.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut entries = Vec::with_capacity(sorted.len());
        for f in sorted {
            let entry = self.entry(f).ok_or(BankError::MissingFrame(f))?;
            let mut rows = entry.rows.clone();
            rows.resize(self.registry.len(), MemoryRow::NULL);
            entries.push(PreloadEntry {
                frame_idx: f,
                is_condition: true,
                rows,
            });
        }
        Ok(PreloadBank {
            version: PRELOAD_FORMAT_VERSION,
            obj_ids: self.registry.obj_ids.clone(),
            entries,
        })
    }
}

pub const PRELOAD_FORMAT_VERSION: u32 = 1;
const PRELOAD_MAGIC: &[u8; 4] = b"CSPB";

/// Serialized memory bank: registry plus selected condition entries.
#[derive(Clone, Debug, PartialEq)]
pub struct PreloadBank {
    pub version: u32,
    pub obj_ids: Vec<ObjId>,
    pub entries: Vec<PreloadEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreloadEntry {
    pub frame_idx: FrameIdx,
    pub is_condition: bool,
    pub rows: Vec<MemoryRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PreloadFormatError {
    #[error("bad magic, not a preload bank payload")]
    BadMagic,
    #[error("unsupported preload format version {0}")]
    UnsupportedVersion(u32),
    #[error("payload truncated")]
    Truncated,
    #[error("unexpected trailing bytes")]
    TrailingBytes,
    #[error("unsupported memory row width {0}")]
    BadRowDim(u32),
    #[error("duplicate object id {0}")]
    DuplicateObjectId(ObjId),
    #[error("entry for frame {frame} has {got} rows, registry has {expected}")]
    RowCountMismatch {
        frame: FrameIdx,
        expected: usize,
        got: usize,
    },
}

impl PreloadBank {
    pub fn validate(&self) -> Result<(), PreloadFormatError> {
        if self.version != PRELOAD_FORMAT_VERSION {
            return Err(PreloadFormatError::UnsupportedVersion(self.version));
        }
        let mut seen = BTreeSet::new();
        for &id in &self.obj_ids {
            if !seen.insert(id) {
                return Err(PreloadFormatError::DuplicateObjectId(id));
            }
        }
        for e in &self.entries {
            if e.rows.len() != self.obj_ids.len() {
                return Err(PreloadFormatError::RowCountMismatch {
                    frame: e.frame_idx,
                    expected: self.obj_ids.len(),
                    got: e.rows.len(),
                });
            }
        }
        Ok(())
    }

    /// Encodes the payload. Integers and floats are little-endian; the
    /// encoding is canonical, so encode/decode round-trips are bit-exact.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(PRELOAD_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(MEMORY_ROW_DIM as u32).to_le_bytes());
        out.extend_from_slice(&(self.obj_ids.len() as u32).to_le_bytes());
        for &id in &self.obj_ids {
            out.extend_from_slice(&id.to_le_bytes());
        }
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&e.frame_idx.to_le_bytes());
            out.push(e.is_condition as u8);
            for row in &e.rows {
                for v in row.0 {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PreloadFormatError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != PRELOAD_MAGIC {
            return Err(PreloadFormatError::BadMagic);
        }
        let version = r.u32()?;
        if version != PRELOAD_FORMAT_VERSION {
            return Err(PreloadFormatError::UnsupportedVersion(version));
        }
        let row_dim = r.u32()?;
        if row_dim as usize != MEMORY_ROW_DIM {
            return Err(PreloadFormatError::BadRowDim(row_dim));
        }
        let n_objs = r.u32()? as usize;
        let mut obj_ids = Vec::with_capacity(n_objs);
        for _ in 0..n_objs {
            obj_ids.push(r.u32()?);
        }
        let n_entries = r.u32()? as usize;
        let mut entries = Vec::with_capacity(n_entries);
        for _ in 0..n_entries {
            let frame_idx = r.i64()?;
            let is_condition = r.u8()? != 0;
            let mut rows = Vec::with_capacity(n_objs);
            for _ in 0..n_objs {
                let mut row = [0.0f32; MEMORY_ROW_DIM];
                for v in &mut row {
                    *v = r.f32()?;
                }
                rows.push(MemoryRow(row));
            }
            entries.push(PreloadEntry {
                frame_idx,
                is_condition,
                rows,
            });
        }
        if r.pos != bytes.len() {
            return Err(PreloadFormatError::TrailingBytes);
        }
        let bank = PreloadBank {
            version,
            obj_ids,
            entries,
        };
        bank.validate()?;
        Ok(bank)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PreloadFormatError> {
        if self.pos + n > self.bytes.len() {
            return Err(PreloadFormatError::Truncated);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PreloadFormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, PreloadFormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64, PreloadFormatError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, PreloadFormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn row(v: f32) -> MemoryRow {
        MemoryRow([v, v, v, 1.0])
    }

    fn bank_with_objs(ids: &[ObjId]) -> MemoryBank {
        let mut b = MemoryBank::new();
        for &id in ids {
            b.register_object(id).unwrap();
        }
        b
    }

    #[test]
    fn empty_init() {
        let b = MemoryBank::new();
        assert!(b.registry().is_empty());
        assert!(!b.has_condition_entries());
        assert!(b.preload_frame_inds().is_empty());
    }

    #[test]
    fn register_appends_slots() {
        let mut b = bank_with_objs(&[9, 17]);
        assert_eq!(b.registry().slot_of(9), Some(0));
        assert_eq!(b.registry().slot_of(17), Some(1));
        b.register_object(3).unwrap();
        assert_eq!(b.registry().obj_ids(), &[9, 17, 3]);
        assert_eq!(b.registry().slot_of(9), Some(0));
        assert_eq!(b.registry().slot_of(17), Some(1));
        assert_eq!(b.register_object(9), Err(BankError::AlreadyRegistered(9)));
    }

    #[test]
    fn write_checks_shape_and_promotes() {
        let mut b = bank_with_objs(&[1, 2, 3]);
        let err = b.write_frame_output(5, false, vec![row(1.0); 2]).unwrap_err();
        assert_eq!(err, BankError::RowCountMismatch { expected: 3, got: 2 });

        b.write_frame_output(5, false, vec![row(1.0); 3]).unwrap();
        assert!(!b.entry(5).unwrap().is_condition);
        b.write_frame_output(5, true, vec![row(2.0); 3]).unwrap();
        let e = b.entry(5).unwrap();
        assert!(e.is_condition);
        assert_eq!(e.rows[0], row(2.0));
        assert!(b.consolidated_frame_inds().contains(&5));
        // Disjointness: a later non-condition write refreshes in place.
        b.write_frame_output(5, false, vec![row(3.0); 3]).unwrap();
        assert!(b.entry(5).unwrap().is_condition);
        assert_eq!(b.entry(5).unwrap().rows[0], row(3.0));
    }

    #[test]
    fn write_at_evicted_index_is_accepted() {
        let mut b = bank_with_objs(&[1]);
        let mut store = FrameStore::<()>::new();
        b.write_frame_output(0, true, vec![row(1.0)]).unwrap();
        b.release_old_frames(100, 20, &mut store);
        assert!(!b.contains_frame(0));
        b.write_frame_output(0, false, vec![row(1.0)]).unwrap();
        assert!(b.contains_frame(0));
    }

    #[test]
    fn back_update_is_windowed() {
        let mut b = bank_with_objs(&[1]);
        for f in 0..20 {
            b.write_frame_output(f, f % 5 == 0, vec![row(1.0)]).unwrap();
        }
        b.register_object(2).unwrap();
        b.update_memory_for_new_ids(19, 4);
        for f in 0..20 {
            let e = b.entry(f).unwrap();
            if f >= 16 {
                assert_eq!(e.registry_size_at_update(), 2, "frame {f} updated");
                assert!(e.rows[1].is_null());
            } else {
                assert_eq!(e.registry_size_at_update(), 1, "frame {f} stale");
            }
        }
    }

    #[test]
    fn back_update_always_covers_preload() {
        let base = {
            let mut b = bank_with_objs(&[1]);
            for f in 0..3 {
                b.write_frame_output(f, true, vec![row(1.0)]).unwrap();
            }
            b.export_preload(&[0, 1, 2]).unwrap()
        };
        let mut b = MemoryBank::with_preload(&base).unwrap();
        for f in 0..20 {
            b.write_frame_output(f, f == 0, vec![row(1.0)]).unwrap();
        }
        b.register_object(2).unwrap();
        b.update_memory_for_new_ids(19, 4);
        for &p in &[-3, -2, -1] {
            assert_eq!(b.entry(p).unwrap().registry_size_at_update(), 2);
        }
        assert_eq!(b.entry(0).unwrap().registry_size_at_update(), 1);
    }

    #[test]
    fn degenerate_window_updates_everything() {
        let mut b = bank_with_objs(&[1]);
        for f in 0..10 {
            b.write_frame_output(f, false, vec![row(1.0)]).unwrap();
        }
        b.register_object(2).unwrap();
        b.update_memory_for_new_ids(9, 1000);
        for f in 0..10 {
            assert_eq!(b.entry(f).unwrap().registry_size_at_update(), 2);
        }
    }

    #[test]
    fn attention_selects_recent_current_shaped() {
        let mut b = bank_with_objs(&[1]);
        for f in 0..20 {
            b.write_frame_output(f, false, vec![row(1.0)]).unwrap();
        }
        assert_eq!(b.select_attention_frames(20, 5), vec![15, 16, 17, 18, 19]);
    }

    #[test]
    fn attention_excludes_stale() {
        let mut b = bank_with_objs(&[1]);
        for f in 0..20 {
            b.write_frame_output(f, false, vec![row(1.0)]).unwrap();
        }
        b.register_object(2).unwrap();
        b.update_memory_for_new_ids(19, 4); // 16..=19 current, rest stale
        assert_eq!(b.select_attention_frames(20, 8), vec![16, 17, 18, 19]);
    }

    #[test]
    fn attention_always_includes_preload_condition_frames() {
        let base = {
            let mut b = bank_with_objs(&[1]);
            b.write_frame_output(0, true, vec![row(1.0)]).unwrap();
            b.export_preload(&[0]).unwrap()
        };
        let mut b = MemoryBank::with_preload(&base).unwrap();
        for f in 0..10 {
            b.write_frame_output(f, false, vec![row(1.0)]).unwrap();
        }
        let sel = b.select_attention_frames(10, 2);
        assert_eq!(sel, vec![-1, 8, 9]);
    }

    #[test]
    fn release_respects_cutoff_and_preload() {
        let base = {
            let mut b = bank_with_objs(&[1]);
            b.write_frame_output(0, true, vec![row(1.0)]).unwrap();
            b.write_frame_output(1, true, vec![row(2.0)]).unwrap();
            b.export_preload(&[0, 1]).unwrap()
        };
        let mut b = MemoryBank::with_preload(&base).unwrap();
        let mut store = FrameStore::<()>::new();
        for f in 0..100 {
            b.write_frame_output(f, f % 10 == 0, vec![row(1.0)]).unwrap();
        }
        let released = b.release_old_frames(100, 20, &mut store);
        assert_eq!(released, (0..80).collect::<Vec<_>>());
        assert!(!b.contains_frame(79));
        assert!(b.contains_frame(80));
        assert!(b.contains_frame(-1) && b.contains_frame(-2));
        assert!(!b.consolidated_frame_inds().contains(&70));

        // Far below the horizon nothing happens.
        let mut b2 = bank_with_objs(&[1]);
        b2.write_frame_output(0, true, vec![row(1.0)]).unwrap();
        let released = b2.release_old_frames(5, 20, &mut store);
        assert!(released.is_empty());
        assert!(b2.contains_frame(0));
    }

    #[test]
    fn preload_roundtrip_through_init() {
        let exported = {
            let mut b = bank_with_objs(&[7, 8]);
            for f in [3, 5, 9] {
                b.write_frame_output(f, true, vec![row(f as f32), row(-1.0)])
                    .unwrap();
            }
            b.export_preload(&[3, 5, 9]).unwrap()
        };
        let b = MemoryBank::with_preload(&exported).unwrap();
        assert_eq!(b.preload_frame_inds().len(), 3);
        assert_eq!(b.registry().len(), 2);
        assert_eq!(
            b.preload_frame_inds().iter().copied().collect::<Vec<_>>(),
            vec![-3, -2, -1]
        );
        // Entries remapped order preserving: original 3 -> -3, 9 -> -1.
        assert_eq!(b.entry(-3).unwrap().rows[0], row(3.0));
        assert_eq!(b.entry(-1).unwrap().rows[0], row(9.0));

        // Exporting the imported set round-trips to an identical preload set.
        let re = b
            .export_preload(&b.preload_frame_inds().iter().copied().collect::<Vec<_>>())
            .unwrap();
        assert_eq!(re.obj_ids, exported.obj_ids);
        let rows_of = |p: &PreloadBank| p.entries.iter().map(|e| e.rows.clone()).collect::<Vec<_>>();
        assert_eq!(rows_of(&re), rows_of(&exported));
    }

    #[test]
    fn export_missing_frame_errors() {
        let b = bank_with_objs(&[1]);
        assert_eq!(b.export_preload(&[4]), Err(BankError::MissingFrame(4)));
        let empty = b.export_preload(&[]).unwrap();
        assert!(empty.entries.is_empty());
        MemoryBank::with_preload(&empty).unwrap();
    }

    #[test]
    fn preload_duplicate_ids_rejected() {
        let p = PreloadBank {
            version: PRELOAD_FORMAT_VERSION,
            obj_ids: vec![1, 1],
            entries: vec![],
        };
        assert_eq!(
            MemoryBank::with_preload(&p).unwrap_err(),
            PreloadFormatError::DuplicateObjectId(1)
        );
    }

    #[test]
    fn preload_bytes_roundtrip_bit_exact() {
        let p = PreloadBank {
            version: PRELOAD_FORMAT_VERSION,
            obj_ids: vec![4, 2],
            entries: vec![PreloadEntry {
                frame_idx: 17,
                is_condition: true,
                rows: vec![row(0.25), row(-3.5)],
            }],
        };
        let bytes = p.to_bytes();
        let q = PreloadBank::from_bytes(&bytes).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_bytes(), bytes);

        assert_eq!(
            PreloadBank::from_bytes(b"nope"),
            Err(PreloadFormatError::BadMagic)
        );
        assert_eq!(
            PreloadBank::from_bytes(&bytes[..bytes.len() - 2]),
            Err(PreloadFormatError::Truncated)
        );
    }
}
