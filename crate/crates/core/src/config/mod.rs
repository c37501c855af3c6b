//! Scenario configuration: one JSON document describing the scene, the
//! scripted driver, every estimator and controller setting, and the run.

mod issues;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use issues::{join, ConfigError, FieldError, Issues, Validate};

use crate::fusion::FusionConfig;
use crate::pose_gaze::PoseConfig;
use crate::pupil::{PupilConstraints, DEFAULT_THRESHOLD};
use crate::synth::{DriverScript, SceneConfig};
use crate::throttle::{PlantParams, SmcParams};
use crate::vehicle::{GovernorConfig, VehicleParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub threshold: u8,
    pub constraints: PupilConstraints,
    /// Fully-open pupil area in pixels; measured from a calibration frame
    /// when absent.
    pub calibrated_open_area: Option<f64>,
    /// Minimum bright-field level that counts as glint.
    pub glint_level: u8,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            constraints: PupilConstraints::default(),
            calibrated_open_area: None,
            glint_level: 250,
        }
    }
}

impl Validate for DetectionConfig {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        self.constraints
            .validate_into(&join(prefix, "constraints"), issues);
        issues.check(
            self.calibrated_open_area.is_none_or(|a| a > 0.0),
            join(prefix, "calibrated_open_area"),
            "must be > 0",
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcularConfig {
    /// PERCLOS/AECS window, seconds.
    pub window: f64,
}

impl Default for OcularConfig {
    fn default() -> Self {
        Self { window: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThrottleConfig {
    pub plant: PlantParams,
    pub smc: SmcParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Throttle servo and plant step, seconds.
    pub throttle_dt: f64,
    /// Vehicle and speed-governor step; a whole multiple of `throttle_dt`.
    pub vehicle_dt: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            throttle_dt: 0.001,
            vehicle_dt: 0.01,
        }
    }
}

impl TimingConfig {
    /// Throttle steps per vehicle step.
    pub fn vehicle_every(&self) -> usize {
        (self.vehicle_dt / self.throttle_dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scene: SceneConfig,
    pub driver: DriverScript,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub ocular: OcularConfig,
    #[serde(default)]
    pub pose: PoseConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub throttle: ThrottleConfig,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub governor: GovernorConfig,
    #[serde(default)]
    pub timing: TimingConfig,
    /// m/s; the governor starts engaged at the matching steady throttle.
    #[serde(default)]
    pub initial_speed: f64,
    /// seconds
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Scene with the scenario seed applied.
    pub fn scene(&self) -> SceneConfig {
        SceneConfig {
            seed: self.seed,
            ..self.scene.clone()
        }
    }

    pub fn outer_dt(&self) -> f64 {
        1.0 / self.scene.frame_rate
    }

    /// Number of camera ticks after t = 0.
    pub fn tick_count(&self) -> usize {
        (self.duration * self.scene.frame_rate).round() as usize
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

impl Validate for ScenarioConfig {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        self.scene.validate_into(&p("scene"), issues);
        self.driver.validate_into(&p("driver"), issues);
        self.detection.validate_into(&p("detection"), issues);
        issues.check(self.ocular.window > 0.0, p("ocular.window"), "must be > 0");
        self.pose.validate_into(&p("pose"), issues);
        self.fusion.validate_into(&p("fusion"), issues);
        self.throttle.plant.validate_into(&p("throttle.plant"), issues);
        self.throttle.smc.validate_into(&p("throttle.smc"), issues);
        self.vehicle.validate_into(&p("vehicle"), issues);
        self.governor.validate_into(&p("governor"), issues);

        issues.check(
            self.duration > 0.0 && self.duration.is_finite(),
            p("duration"),
            "must be > 0",
        );
        issues.check(
            self.driver.end >= self.duration,
            p("driver.end"),
            "script must cover the whole run",
        );
        issues.check(self.initial_speed >= 0.0, p("initial_speed"), "must be >= 0");
        issues.check(
            self.vehicle.wot_angle <= self.throttle.plant.theta_max,
            p("vehicle.wot_angle"),
            "must not exceed throttle.plant.theta_max",
        );

        let t = &self.timing;
        issues.check(t.throttle_dt > 0.0, p("timing.throttle_dt"), "must be > 0");
        if t.throttle_dt > 0.0 {
            let ratio = t.vehicle_dt / t.throttle_dt;
            issues.check(
                t.vehicle_dt >= t.throttle_dt && (ratio - ratio.round()).abs() < 1e-6,
                p("timing.vehicle_dt"),
                "must be a whole multiple of timing.throttle_dt",
            );
        }
        if self.scene.frame_rate > 0.0 && t.throttle_dt > 0.0 {
            issues.check(
                t.throttle_dt <= 1.0 / self.scene.frame_rate,
                p("timing.throttle_dt"),
                "must not exceed the camera period",
            );
        }
    }
}

/// Parses and checks a JSON scenario, filling documented defaults for
/// omitted sections. Only `driver` and `duration` are required.
pub fn validate_config(raw: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig =
        serde_json::from_str(raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
