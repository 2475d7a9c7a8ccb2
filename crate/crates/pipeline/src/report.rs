//! Report writers: memory/stats CSV and the event JSONL export.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cuestream_core::events::EventLog;
use cuestream_core::propagation::PropagationStats;
use serde::Serialize;

/// One CSV row per propagation call.
pub fn memory_report_csv(stats: &PropagationStats) -> String {
    let mut out = String::from(
        "call_no,head_idx,span,frames_propagated_total,resident_frames,fast_bytes,slow_bytes,num_frames_total\n",
    );
    for row in &stats.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.call_no,
            row.head,
            row.span,
            row.frames_propagated_total,
            row.resident_frames,
            row.fast_bytes,
            row.slow_bytes,
            row.num_frames_total
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct EventRecord {
    pub kind: String,
    pub frame: i64,
    pub balls: Vec<u32>,
    pub location: Option<String>,
    pub revision_counter: u32,
}

/// Flattens the log into records sorted by (frame, kind, balls); one line
/// per event.
pub fn event_records(log: &EventLog) -> Vec<EventRecord> {
    let mut records = Vec::new();
    for (&ball, rec) in log.goals() {
        records.push(EventRecord {
            kind: "goal".into(),
            frame: rec.value.frame,
            balls: vec![ball],
            location: Some(rec.value.pocket.as_str().into()),
            revision_counter: rec.revision_counter,
        });
    }
    for (&frame, rec) in log.collisions() {
        for &(a, b) in &rec.value {
            records.push(EventRecord {
                kind: "collision".into(),
                frame,
                balls: vec![a, b],
                location: None,
                revision_counter: rec.revision_counter,
            });
        }
    }
    for (&(frame, ball), rec) in log.rebounds() {
        records.push(EventRecord {
            kind: "rebound".into(),
            frame,
            balls: vec![ball],
            location: Some(rec.value.as_str().into()),
            revision_counter: rec.revision_counter,
        });
    }
    records.sort_by(|a, b| {
        (a.frame, &a.kind, &a.balls).cmp(&(b.frame, &b.kind, &b.balls))
    });
    records
}

pub fn events_jsonl(log: &EventLog) -> String {
    let mut out = String::new();
    for record in event_records(log) {
        out.push_str(&serde_json::to_string(&record).unwrap());
        out.push('\n');
    }
    out
}

pub fn parse_events_jsonl(text: &str) -> Result<Vec<EventRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Writes a report atomically: content lands at `path` only when complete.
pub fn write_report(path: &Path, content: &str) -> std::io::Result<()> {
    let tmp = tmp_path(path);
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)
}

/// Flags an aborted run: whatever partial content exists is written to
/// `<path>.partial` instead of the requested path.
pub fn write_partial(path: &Path, content: &str) -> std::io::Result<()> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    let mut file = fs::File::create(&partial)?;
    writeln!(file, "# run aborted; partial report")?;
    file.write_all(content.as_bytes())
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    PathBuf::from(tmp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cuestream_core::billiards::{BoundaryName, PocketName};
    use cuestream_core::events::GoalInfo;
    use std::collections::BTreeSet;

    #[test]
    fn jsonl_roundtrip_and_ordering() {
        let mut log = EventLog::new();
        log.set_rebound(9, 4, BoundaryName::Left, 1);
        log.set_goal(
            2,
            GoalInfo {
                frame: 5,
                pocket: PocketName::BM,
            },
            1,
        );
        log.set_collisions(5, BTreeSet::from([(1, 2)]), 1);
        let text = events_jsonl(&log);
        let parsed = parse_events_jsonl(&text).unwrap();
        assert_eq!(parsed.len(), 3);
        assert!(parsed[0].frame <= parsed[1].frame && parsed[1].frame <= parsed[2].frame);
        assert_eq!(parsed[0].kind, "collision");
        assert_eq!(parsed[1].kind, "goal");
        assert_eq!(parsed[2].kind, "rebound");
    }
}
