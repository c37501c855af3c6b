//! Weighted fusion of vigilance cues into a fatigue level and stage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{join, Issues, Validate};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct VigilanceMetrics {
    pub perclos: f64,
    /// Mean closure duration, seconds.
    pub aecs: Option<f64>,
    /// Head-tilt excursions per minute.
    pub tilt_rate: f64,
    pub off_frontal_fraction: f64,
    /// RMS gaze dispersion in degrees; absent until two gaze samples exist.
    pub gaze_dispersion: Option<f64>,
}

/// Per-channel values in the order perclos, aecs, tilt, off-frontal, gaze.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Channels {
    pub perclos: f64,
    pub aecs: f64,
    pub tilt: f64,
    pub off_frontal: f64,
    pub gaze: f64,
}

impl Default for Channels {
    fn default() -> Self {
        Self::zero()
    }
}

impl Channels {
    pub const fn zero() -> Self {
        Self {
            perclos: 0.0,
            aecs: 0.0,
            tilt: 0.0,
            off_frontal: 0.0,
            gaze: 0.0,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.perclos, self.aecs, self.tilt, self.off_frontal, self.gaze]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            perclos: a[0],
            aecs: a[1],
            tilt: a[2],
            off_frontal: a[3],
            gaze: a[4],
        }
    }

    fn dot(self, other: Channels) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| a * b)
            .sum()
    }
}

const CHANNEL_NAMES: [&str; 5] = ["perclos", "aecs", "tilt", "off_frontal", "gaze"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Alert,
    Warning,
    Critical,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Alert => "Alert",
            Stage::Warning => "Warning",
            Stage::Critical => "Critical",
        }
    }

    fn lower(self) -> Option<Stage> {
        match self {
            Stage::Alert => None,
            Stage::Warning => Some(Stage::Alert),
            Stage::Critical => Some(Stage::Warning),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub warn: f64,
    pub crit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Nonnegative, summing to 1.
    pub weights: Channels,
    /// Raw value at which each channel's score saturates at 1. For gaze this
    /// is the dispersion at or above which the gaze counts as fully wide
    /// (score 0).
    pub saturation: Channels,
    pub warn_threshold: f64,
    pub crit_threshold: f64,
    pub hysteresis: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            weights: Channels {
                perclos: 0.5,
                aecs: 0.15,
                tilt: 0.15,
                off_frontal: 0.1,
                gaze: 0.1,
            },
            saturation: Channels {
                perclos: 0.4,
                aecs: 0.5,
                tilt: 8.0,
                off_frontal: 0.5,
                gaze: 5.0,
            },
            warn_threshold: 0.35,
            crit_threshold: 0.6,
            hysteresis: 0.05,
        }
    }
}

impl FusionConfig {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            warn: self.warn_threshold,
            crit: self.crit_threshold,
        }
    }
}

impl Validate for FusionConfig {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let w = self.weights.to_array();
        let s = self.saturation.to_array();
        for (i, name) in CHANNEL_NAMES.iter().enumerate() {
            issues.check(
                w[i] >= 0.0 && w[i].is_finite(),
                join(prefix, &format!("weights.{name}")),
                "must be >= 0",
            );
            issues.check(
                s[i] > 0.0 && s[i].is_finite(),
                join(prefix, &format!("saturation.{name}")),
                "must be > 0",
            );
        }
        issues.check(
            (w.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
            join(prefix, "weights"),
            "must sum to 1",
        );
        let warn = join(prefix, "warn_threshold");
        let crit = join(prefix, "crit_threshold");
        issues.check(
            self.warn_threshold > 0.0 && self.warn_threshold <= 1.0,
            warn.clone(),
            "must be within (0, 1]",
        );
        issues.check(
            self.crit_threshold > 0.0 && self.crit_threshold <= 1.0,
            crit.clone(),
            "must be within (0, 1]",
        );
        if self.warn_threshold >= self.crit_threshold {
            issues.push(warn, "must be below crit_threshold");
            issues.push(crit, "must be above warn_threshold");
        }
        let gap = self.crit_threshold - self.warn_threshold;
        issues.check(
            self.hysteresis >= 0.0 && (self.hysteresis == 0.0 || self.hysteresis < gap),
            join(prefix, "hysteresis"),
            "must be >= 0 and below the gap between thresholds",
        );
    }
}

/// Maps raw cues to `[0, 1]` scores. PERCLOS, AECS, tilt rate and
/// off-frontal time score `min(1, raw / saturation)`. Gaze scores its
/// narrowness, `1 - min(1, dispersion / saturation)`. Missing AECS or gaze
/// scores 0.
pub fn normalize_metrics(m: &VigilanceMetrics, cfg: &FusionConfig) -> Channels {
    let s = &cfg.saturation;
    let ratio = |raw: f64, sat: f64| (raw.max(0.0) / sat).min(1.0);
    Channels {
        perclos: ratio(m.perclos, s.perclos),
        aecs: m.aecs.map_or(0.0, |a| ratio(a, s.aecs)),
        tilt: ratio(m.tilt_rate, s.tilt),
        off_frontal: ratio(m.off_frontal_fraction, s.off_frontal),
        gaze: m.gaze_dispersion.map_or(0.0, |d| 1.0 - ratio(d, s.gaze)),
    }
}

/// Stage implied by `level` alone.
pub fn stage_for(level: f64, th: Thresholds) -> Stage {
    if level >= th.crit {
        Stage::Critical
    } else if level >= th.warn {
        Stage::Warning
    } else {
        Stage::Alert
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FatigueAssessment {
    pub t: f64,
    pub level: f64,
    pub stage: Stage,
    pub scores: Channels,
}

/// Weighted sum of normalized scores, staged without hysteresis.
pub fn fatigue_level(t: f64, m: &VigilanceMetrics, cfg: &FusionConfig) -> FatigueAssessment {
    let scores = normalize_metrics(m, cfg);
    let level = cfg.weights.dot(scores).clamp(0.0, 1.0);
    FatigueAssessment {
        t,
        level,
        stage: stage_for(level, cfg.thresholds()),
        scores,
    }
}

/// Upgrades as soon as a threshold is reached; steps down only once the level
/// falls `hysteresis` below the threshold of the current stage.
pub fn stage_hysteresis(previous: Stage, level: f64, th: Thresholds, hysteresis: f64) -> Stage {
    let raw = stage_for(level, th);
    if raw >= previous {
        return raw;
    }
    let entry = |s: Stage| match s {
        Stage::Alert => f64::NEG_INFINITY,
        Stage::Warning => th.warn,
        Stage::Critical => th.crit,
    };
    let mut stage = previous;
    while stage > raw && level < entry(stage) - hysteresis {
        stage = stage.lower().expect("stage above raw has a lower stage");
    }
    stage
}

/// Single-owner hysteresis cell.
#[derive(Debug, Clone)]
pub struct StageTracker {
    stage: Stage,
    thresholds: Thresholds,
    hysteresis: f64,
}

impl StageTracker {
    pub fn new(cfg: &FusionConfig) -> Self {
        Self {
            stage: Stage::Alert,
            thresholds: cfg.thresholds(),
            hysteresis: cfg.hysteresis,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn update(&mut self, level: f64) -> Stage {
        self.stage = stage_hysteresis(self.stage, level, self.thresholds, self.hysteresis);
        self.stage
    }
}
