//! Event log with overwrite-correction semantics.

use alloc::collections::{BTreeMap, BTreeSet};

use crate::billiards::{BoundaryName, PocketName};
use crate::{FrameIdx, ObjId};

/// A recorded judgment plus its correction history. `revision_counter`
/// starts at 1 and increments only when the value actually changes, so
/// re-processing a frame with identical evidence leaves the log identical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recorded<T> {
    pub value: T,
    pub revision_counter: u32,
    /// Frame revision (queue revision tag) at which the value last changed.
    pub last_changed_rev: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoalInfo {
    pub frame: FrameIdx,
    pub pocket: PocketName,
}

/// Goals keyed by ball, collisions keyed by frame, rebounds keyed by
/// (frame, ball). Re-evaluation replaces prior entries for the same key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    goals: BTreeMap<ObjId, Recorded<GoalInfo>>,
    collisions: BTreeMap<FrameIdx, Recorded<BTreeSet<(ObjId, ObjId)>>>,
    rebounds: BTreeMap<(FrameIdx, ObjId), Recorded<BoundaryName>>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog::default()
    }

    pub fn goal(&self, ball: ObjId) -> Option<&Recorded<GoalInfo>> {
        self.goals.get(&ball)
    }

    pub fn goals(&self) -> &BTreeMap<ObjId, Recorded<GoalInfo>> {
        &self.goals
    }

    pub fn collisions(&self) -> &BTreeMap<FrameIdx, Recorded<BTreeSet<(ObjId, ObjId)>>> {
        &self.collisions
    }

    pub fn rebounds(&self) -> &BTreeMap<(FrameIdx, ObjId), Recorded<BoundaryName>> {
        &self.rebounds
    }

    pub fn set_goal(&mut self, ball: ObjId, info: GoalInfo, frame_rev: u32) {
        set(&mut self.goals, ball, info, frame_rev);
    }

    pub fn remove_goal(&mut self, ball: ObjId) {
        self.goals.remove(&ball);
    }

    /// Replaces the collision judgment for a frame. An empty set removes the
    /// entry.
    pub fn set_collisions(
        &mut self,
        frame: FrameIdx,
        pairs: BTreeSet<(ObjId, ObjId)>,
        frame_rev: u32,
    ) {
        if pairs.is_empty() {
            self.collisions.remove(&frame);
        } else {
            set(&mut self.collisions, frame, pairs, frame_rev);
        }
    }

    pub fn collision_pairs_at(&self, frame: FrameIdx) -> Option<&BTreeSet<(ObjId, ObjId)>> {
        self.collisions.get(&frame).map(|r| &r.value)
    }

    pub fn ball_collided_at(&self, frame: FrameIdx, ball: ObjId) -> bool {
        self.collision_pairs_at(frame)
            .map(|pairs| pairs.iter().any(|&(a, b)| a == ball || b == ball))
            .unwrap_or(false)
    }

    pub fn set_rebound(&mut self, frame: FrameIdx, ball: ObjId, boundary: BoundaryName, rev: u32) {
        set(&mut self.rebounds, (frame, ball), boundary, rev);
    }

    pub fn clear_rebound(&mut self, frame: FrameIdx, ball: ObjId) {
        self.rebounds.remove(&(frame, ball));
    }

    pub fn rebound_at(&self, frame: FrameIdx, ball: ObjId) -> Option<BoundaryName> {
        self.rebounds.get(&(frame, ball)).map(|r| r.value)
    }

    /// Value-level equality, ignoring revision counters. Two runs that agree
    /// on every judgment compare equal even if their correction histories
    /// differ.
    pub fn same_events(&self, other: &EventLog) -> bool {
        let goals = |log: &EventLog| {
            log.goals
                .iter()
                .map(|(k, r)| (*k, r.value))
                .collect::<BTreeMap<_, _>>()
        };
        let collisions = |log: &EventLog| {
            log.collisions
                .iter()
                .map(|(k, r)| (*k, r.value.clone()))
                .collect::<BTreeMap<_, _>>()
        };
        let rebounds = |log: &EventLog| {
            log.rebounds
                .iter()
                .map(|(k, r)| (*k, r.value))
                .collect::<BTreeMap<_, _>>()
        };
        goals(self) == goals(other)
            && collisions(self) == collisions(other)
            && rebounds(self) == rebounds(other)
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty() && self.collisions.is_empty() && self.rebounds.is_empty()
    }

    pub fn total_events(&self) -> usize {
        self.goals.len()
            + self
                .collisions
                .values()
                .map(|r| r.value.len())
                .sum::<usize>()
            + self.rebounds.len()
    }
}

fn set<K: Ord, T: PartialEq>(map: &mut BTreeMap<K, Recorded<T>>, key: K, value: T, rev: u32) {
    match map.get_mut(&key) {
        Some(existing) => {
            if existing.value != value {
                existing.value = value;
                existing.revision_counter += 1;
                existing.last_changed_rev = rev;
            }
        }
        None => {
            map.insert(
                key,
                Recorded {
                    value,
                    revision_counter: 1,
                    last_changed_rev: rev,
                },
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overwrite_bumps_counter_only_on_change() {
        let mut log = EventLog::new();
        let info = GoalInfo {
            frame: 10,
            pocket: PocketName::TL,
        };
        log.set_goal(1, info, 1);
        assert_eq!(log.goal(1).unwrap().revision_counter, 1);
        log.set_goal(1, info, 2);
        assert_eq!(log.goal(1).unwrap().revision_counter, 1);
        log.set_goal(
            1,
            GoalInfo {
                frame: 12,
                pocket: PocketName::TL,
            },
            3,
        );
        let r = log.goal(1).unwrap();
        assert_eq!(r.revision_counter, 2);
        assert_eq!(r.last_changed_rev, 3);
    }

    #[test]
    fn same_events_ignores_history() {
        let mut a = EventLog::new();
        let mut b = EventLog::new();
        let info = GoalInfo {
            frame: 5,
            pocket: PocketName::BR,
        };
        a.set_goal(1, GoalInfo { frame: 4, ..info }, 1);
        a.set_goal(1, info, 2);
        b.set_goal(1, info, 1);
        assert!(a.same_events(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn empty_collision_set_removes_entry() {
        let mut log = EventLog::new();
        log.set_collisions(7, BTreeSet::from([(1, 2)]), 1);
        assert!(log.ball_collided_at(7, 2));
        log.set_collisions(7, BTreeSet::new(), 2);
        assert!(log.collision_pairs_at(7).is_none());
    }
}
