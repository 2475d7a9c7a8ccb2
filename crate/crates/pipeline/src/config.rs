//! Pipeline configuration and its JSON file format.

use std::fs;
use std::path::Path;

use cuestream_core::billiards::Scenario;
use cuestream_core::events::ThresholdConfig;
use cuestream_core::propagation::PropagationConfig;
use cuestream_core::{Precision, StorageTier};
use serde::{Deserialize, Serialize};

/// Everything a run needs besides the scenario itself. Every field has a
/// default, so a config file may override any subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub propagation: PropagationConfig,
    /// Event-detection thresholds; derived from the scenario scale when
    /// absent.
    pub thresholds: Option<ThresholdConfig>,
    /// Square model-input resolution used by the byte accounting.
    pub internal_side: u32,
    pub precision: Precision,
    pub tier: StorageTier,
    /// Artificial per-frame delay in the post-processing worker, used to
    /// exercise backpressure.
    pub consumer_delay_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            propagation: PropagationConfig::default(),
            thresholds: None,
            internal_side: 1024,
            precision: Precision::Half,
            tier: StorageTier::Slow,
            consumer_delay_ms: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigFileError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigFileError::Parse {
        path: path.display().to_string(),
        source,
    })
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigFileError> {
        read(path)
    }

    /// Thresholds to use for a given scenario: explicit ones win, otherwise
    /// they are derived from pocket size, the largest ball and friction.
    pub fn thresholds_for(&self, scenario: &Scenario) -> ThresholdConfig {
        self.thresholds.unwrap_or_else(|| {
            let ball_radius = scenario
                .balls
                .iter()
                .map(|b| b.radius)
                .fold(10.0f64, f64::max);
            ThresholdConfig::derived(
                scenario.table.pocket_radius,
                ball_radius,
                scenario.table.friction_decel,
            )
        })
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigFileError> {
    read(path)
}

/// Structural checks on a scenario before any worker starts.
pub fn validate_scenario(scenario: &Scenario) -> Result<(), String> {
    let t = &scenario.table;
    if !(t.width > 0.0 && t.height > 0.0) {
        return Err("table dimensions must be positive".into());
    }
    if !(t.pocket_radius > 0.0 && t.pocket_radius < t.width.min(t.height) / 4.0) {
        return Err(format!(
            "pocket radius {} must be positive and below a quarter of the short side",
            t.pocket_radius
        ));
    }
    if !(0.0..=1.0).contains(&t.cushion_restitution) {
        return Err("cushion restitution must lie in [0, 1]".into());
    }
    if t.friction_decel < 0.0 {
        return Err("friction deceleration cannot be negative".into());
    }
    if !(0.0..=1.0).contains(&scenario.noise.dropout_prob) {
        return Err("dropout probability must lie in [0, 1]".into());
    }
    let mut seen = std::collections::BTreeSet::new();
    for ball in &scenario.balls {
        if !seen.insert(ball.id) {
            return Err(format!("duplicate ball id {}", ball.id));
        }
        if ball.radius <= 0.0 {
            return Err(format!("ball {} needs a positive radius", ball.id));
        }
        let inside = ball.pos.x >= ball.radius
            && ball.pos.y >= ball.radius
            && ball.pos.x <= t.width - ball.radius
            && ball.pos.y <= t.height - ball.radius;
        if !inside {
            return Err(format!("ball {} starts outside the playing field", ball.id));
        }
        if ball.appears_at < 0 {
            return Err(format!("ball {} has a negative entry frame", ball.id));
        }
    }
    Ok(())
}

/// Positivity checks on explicit thresholds.
pub fn validate_thresholds(t: &ThresholdConfig) -> Result<(), String> {
    let fields = [
        ("near_pocket_radius", t.near_pocket_radius),
        ("velocity_change_threshold", t.velocity_change_threshold),
        ("proximity_radius", t.proximity_radius),
        (
            "perpendicular_reversal_tolerance",
            t.perpendicular_reversal_tolerance,
        ),
        (
            "parallel_consistency_tolerance",
            t.parallel_consistency_tolerance,
        ),
        ("buffer_margin", t.buffer_margin),
    ];
    for (name, value) in fields {
        if value <= 0.0 {
            return Err(format!("threshold {name} must be positive"));
        }
    }
    Ok(())
}

pub fn save_scenario(path: &Path, scenario: &Scenario) -> std::io::Result<()> {
    fs::write(path, serde_json::to_string_pretty(scenario).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_file_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        fs::write(
            &path,
            r#"{"propagation": {"buffer_size": 4, "detection_interval": 2}, "consumer_delay_ms": 7}"#,
        )
        .unwrap();
        let cfg = PipelineConfig::from_file(&path).unwrap();
        assert_eq!(cfg.propagation.buffer_size, 4);
        assert_eq!(cfg.propagation.detection_interval, 2);
        assert_eq!(
            cfg.propagation.max_frames_to_track,
            PropagationConfig::default().max_frames_to_track
        );
        assert_eq!(cfg.consumer_delay_ms, 7);
        assert_eq!(cfg.internal_side, 1024);
    }

    #[test]
    fn bad_json_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        fs::write(&path, "{nope").unwrap();
        assert!(matches!(
            PipelineConfig::from_file(&path),
            Err(ConfigFileError::Parse { .. })
        ));
    }
}
