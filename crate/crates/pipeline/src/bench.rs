//! Parameter-sweep bench: runs a (K, M, D, retention) grid on one seeded
//! scenario and reports cost, memory peaks and event accuracy per cell.

use std::path::PathBuf;

use cuestream_core::billiards::Scenario;
use serde::Deserialize;

use crate::config::PipelineConfig;
use crate::run::run;
use crate::scenarios::score_events;

/// Grid file: a scenario path plus the axis values. `null` entries mean
/// unbounded.
#[derive(Debug, Deserialize)]
pub struct BenchGrid {
    pub scenario: PathBuf,
    pub k: Vec<usize>,
    pub m: Vec<Option<usize>>,
    pub d: Vec<usize>,
    pub retention: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub k: usize,
    pub m: Option<usize>,
    pub d: usize,
    pub retention: Option<usize>,
    pub status: String,
    pub reason: String,
    pub frames_propagated_total: u64,
    pub peak_resident_frames: usize,
    pub peak_bytes: u64,
    pub event_f1: f64,
}

fn fmt_bound(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "inf".into())
}

/// Runs every cell of the grid; invalid cells are kept as skipped rows with
/// the validation failure as the reason.
pub fn run_grid(grid: &BenchGrid, scenario: &Scenario, base: &PipelineConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &k in &grid.k {
        for &m in &grid.m {
            for &d in &grid.d {
                for &retention in &grid.retention {
                    let mut config = base.clone();
                    config.propagation.buffer_size = k;
                    config.propagation.max_frames_to_track = m;
                    config.propagation.detection_interval = d;
                    config.propagation.retention = retention;
                    config.propagation.attention_limit = retention.unwrap_or(64).max(1);
                    config.propagation.update_window = None;

                    let mut row = BenchRow {
                        k,
                        m,
                        d,
                        retention,
                        status: "ok".into(),
                        reason: String::new(),
                        frames_propagated_total: 0,
                        peak_resident_frames: 0,
                        peak_bytes: 0,
                        event_f1: 0.0,
                    };
                    if let Err(e) = config.propagation.validate() {
                        row.status = "skipped".into();
                        row.reason = e.to_string();
                        rows.push(row);
                        continue;
                    }
                    match run(&config, scenario) {
                        Ok(out) => {
                            row.frames_propagated_total = out.stats.frames_propagated_total;
                            row.peak_resident_frames = out.stats.peak_resident_frames();
                            row.peak_bytes = out.stats.peak_bytes();
                            row.event_f1 =
                                score_events(&out.events, &out.oracle_events, 1).micro_f1();
                        }
                        Err(e) => {
                            row.status = "failed".into();
                            row.reason = e.to_string();
                        }
                    }
                    rows.push(row);
                }
            }
        }
    }
    rows
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "k,m,d,retention,status,reason,frames_propagated_total,peak_resident_frames,peak_bytes,event_f1\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.4}\n",
            r.k,
            fmt_bound(r.m),
            r.d,
            fmt_bound(r.retention),
            r.status,
            r.reason.replace(',', ";"),
            r.frames_propagated_total,
            r.peak_resident_frames,
            r.peak_bytes,
            r.event_f1
        ));
    }
    out
}
