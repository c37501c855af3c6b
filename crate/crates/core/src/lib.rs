//! Deterministic closed-loop simulator of a driver vigilance monitor that
//! regulates vehicle speed through an electronic throttle.
//!
//! The pipeline, one camera tick at a time:
//!
//! - [`synth`] renders bright-/dark-pupil IR field pairs from a scripted driver
//! - [`pupil`] recovers pupils by field differencing and blob analysis
//! - [`ocular`] turns pupil observations into PERCLOS and AECS
//! - [`pose_gaze`] tracks head pose with a Kalman filter fused with eye motion
//!   and derives head-tilt, off-frontal and gaze-narrowness cues
//! - [`fusion`] folds the cues into a fatigue level and stage
//! - [`vehicle`] maps the stage to a speed target and a throttle reference
//! - [`throttle`] positions the valve with a sliding-mode servo
//!
//! [`runner::run_scenario`] wires everything together from a
//! [`config::ScenarioConfig`].

pub mod config;
pub mod frame;
pub mod fusion;
pub mod geometry;
pub mod ocular;
pub mod pose_gaze;
pub mod pupil;
pub mod runner;
pub mod scenarios;
pub mod synth;
pub mod throttle;
pub mod vehicle;

pub use config::{validate_config, ConfigError, ScenarioConfig};
pub use frame::{BinaryImage, FramePair, GrayImage};
pub use fusion::{FatigueAssessment, Stage, VigilanceMetrics};
pub use geometry::{GazeAngles, Point, PoseAngles};
pub use pupil::PupilObservation;
pub use runner::{run_scenario, RunLog};

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("time {t} s outside script timeline [0, {end}]")]
    OutOfRange { t: f64, end: f64 },

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("empty window: {0}")]
    EmptyWindow(&'static str),

    #[error("samples are not time-ordered at index {index}")]
    Unordered { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular innovation covariance")]
    SingularInnovation,

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
