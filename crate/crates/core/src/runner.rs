//! Closed-loop scenario runner.
//!
//! One outer tick per camera frame: render, detect, update metrics, fuse,
//! then advance the governor, servo and vehicle to the next frame time in
//! fixed inner substeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::fusion::{fatigue_level, FatigueAssessment, Stage, StageTracker, VigilanceMetrics};
use crate::geometry::PoseAngles;
use crate::ocular::{ocular_metrics, openness_from_observation, EyeSample, OcularMetrics};
use crate::pose_gaze::{
    find_glint, gaze_narrowness, local_gaze, overall_gaze, pose_metrics, pose_window, GazeSample,
    PoseMeasurement, PoseMetrics, PoseSample, PoseState, PoseTracker,
};
use crate::pupil::{detect, PupilObservation};
use crate::synth::{evaluate_script, render_frame_pair, DriverScript, GroundTruth, Renderer, SceneConfig};
use crate::throttle::{plant_step, smc_control, Reference, ThrottleState};
use crate::vehicle::{longitudinal_step, speed_governor, speed_target, VehicleState};
use crate::{invalid, Result};

/// Stream id for pose-measurement noise, disjoint from the frame streams.
const POSE_NOISE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write every frame pair as PGM into this directory.
    pub frame_dir: Option<PathBuf>,
    /// Worker threads for rendering and detection; all available cores when
    /// absent. Results do not depend on this.
    pub threads: Option<usize>,
}

/// Frames handed to each worker per batch.
const FRAMES_PER_WORKER: usize = 32;

/// What the camera side yields for one tick. Nothing here depends on the
/// vehicle loop, so ticks can be computed ahead and out of order.
struct Percept {
    truth: GroundTruth,
    observation: PupilObservation,
    local_gaze: Option<crate::GazeAngles>,
}

struct Camera<'a> {
    cfg: &'a ScenarioConfig,
    scene: SceneConfig,
    renderer: Renderer,
    gaze_gain: f64,
    frame_dir: Option<&'a Path>,
}

impl Camera<'_> {
    fn perceive(&self, k: usize) -> Result<Percept> {
        let cfg = self.cfg;
        let t = k as f64 * cfg.outer_dt();
        let truth = evaluate_script(&cfg.driver, &self.scene, t)?;
        let pair = self.renderer.render(&truth, k as u64);
        if let Some(dir) = self.frame_dir {
            pair.write_pgm_pair(dir, k as u64)?;
        }
        let observation = detect(&pair, cfg.detection.threshold, &cfg.detection.constraints)?;
        let local_gaze = gaze_for(
            &observation,
            &pair.even,
            &self.scene,
            cfg.detection.glint_level,
            self.gaze_gain,
        );
        Ok(Percept {
            truth,
            observation,
            local_gaze,
        })
    }

    /// Ticks `range`, split across `threads` workers, in tick order.
    fn batch(&self, range: std::ops::Range<usize>, threads: usize) -> Result<Vec<Percept>> {
        if threads <= 1 {
            return range.map(|k| self.perceive(k)).collect();
        }
        let len = range.len();
        let chunk = len.div_ceil(threads);
        let parts: Vec<Result<Vec<Percept>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|i| {
                    let lo = range.start + (i * chunk).min(len);
                    let hi = range.start + ((i + 1) * chunk).min(len);
                    scope.spawn(move || (lo..hi).map(|k| self.perceive(k)).collect())
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("camera worker panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(len);
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickRecord {
    pub t: f64,
    pub truth: GroundTruth,
    pub observation: PupilObservation,
    pub openness: f64,
    pub ocular: OcularMetrics,
    pub pose: PoseAngles,
    pub pose_metrics: PoseMetrics,
    pub gaze: Option<GazeSample>,
    pub metrics: VigilanceMetrics,
    pub fatigue: FatigueAssessment,
    pub v_target: f64,
    pub theta_ref: f64,
    pub throttle: ThrottleState,
    pub vehicle: VehicleState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageChange {
    pub t: f64,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub ticks: usize,
    pub duration: f64,
    pub seed: u64,
    pub calibrated_open_area: f64,
    pub final_speed: f64,
    pub final_theta: f64,
    pub distance: f64,
    pub max_perclos: f64,
    pub max_level: f64,
    pub first_warning: Option<f64>,
    pub first_critical: Option<f64>,
    pub stage_timeline: Vec<StageChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub records: Vec<TickRecord>,
    pub summary: RunSummary,
}

pub const RUN_CSV_HEADER: &str = "t,truth_openness,truth_pan,truth_tilt,truth_roll,\
left_x,left_y,right_x,right_y,confidence,openness,perclos,aecs,\
pose_pan,pose_tilt,pose_roll,tilt_rate,off_frontal,gaze_pan,gaze_tilt,gaze_dispersion,\
level,stage,v_target,theta_ref,theta,omega,v,x";

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

impl TickRecord {
    pub fn csv_row(&self) -> String {
        let o = &self.observation;
        let coords = |m: &Option<crate::pupil::PupilMeasurement>| {
            (
                opt(m.map(|m| m.centroid.x), 4),
                opt(m.map(|m| m.centroid.y), 4),
            )
        };
        let (lx, ly) = coords(&o.left);
        let (rx, ry) = coords(&o.right);
        let mut s = String::new();
        write!(
            s,
            "{:.6},{:.6},{:.6},{:.6},{:.6},",
            self.t, self.truth.openness, self.truth.pose.pan, self.truth.pose.tilt, self.truth.pose.roll
        )
        .unwrap();
        write!(s, "{lx},{ly},{rx},{ry},{:.1},", o.confidence).unwrap();
        write!(
            s,
            "{:.6},{:.6},{},",
            self.openness,
            self.metrics.perclos,
            opt(self.metrics.aecs, 6)
        )
        .unwrap();
        write!(
            s,
            "{:.6},{:.6},{:.6},{:.6},{:.6},",
            self.pose.pan,
            self.pose.tilt,
            self.pose.roll,
            self.metrics.tilt_rate,
            self.metrics.off_frontal_fraction
        )
        .unwrap();
        write!(
            s,
            "{},{},{},",
            opt(self.gaze.map(|g| g.pan), 6),
            opt(self.gaze.map(|g| g.tilt), 6),
            opt(self.metrics.gaze_dispersion, 6)
        )
        .unwrap();
        write!(
            s,
            "{:.6},{},{:.6},{:.9},{:.9},{:.9},{:.9},{:.6}",
            self.fatigue.level,
            self.fatigue.stage,
            self.v_target,
            self.theta_ref,
            self.throttle.theta,
            self.throttle.omega,
            self.vehicle.v,
            self.vehicle.x
        )
        .unwrap();
        s
    }
}

impl RunLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 256);
        out.push_str(RUN_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes `run.csv` and `summary.json` into `dir`, creating it.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("run.csv"), self.to_csv())?;
        fs::write(dir.join("summary.json"), self.summary_json())?;
        Ok(())
    }
}

/// Mean pupil area with the eyes fully open, head frontal and no noise.
pub fn calibrate_open_area(scene: &SceneConfig, cfg: &ScenarioConfig) -> Result<f64> {
    let quiet = SceneConfig {
        noise_sigma: 0.0,
        ..scene.clone()
    };
    let gt = evaluate_script(&DriverScript::steady(1.0), &quiet, 0.0)?;
    let pair = render_frame_pair(&gt, &quiet, 0);
    let obs = detect(&pair, cfg.detection.threshold, &cfg.detection.constraints)?;
    let areas: Vec<f64> = obs.present().map(|m| m.area as f64).collect();
    if areas.is_empty() {
        return Err(invalid(
            "calibration frame shows no pupils; set detection.calibrated_open_area",
        ));
    }
    Ok(areas.iter().sum::<f64>() / areas.len() as f64)
}

fn gaze_for(obs: &PupilObservation, pair_even: &crate::GrayImage, scene: &SceneConfig, level: u8, gain: f64) -> Option<crate::GazeAngles> {
    let radius = scene.glint_offset.norm() + scene.pupil_radius + 2.0;
    let looks: Vec<_> = obs
        .present()
        .filter_map(|m| {
            let glint = find_glint(pair_even, m.centroid + scene.glint_offset, radius, level)?;
            local_gaze(Some(m.centroid + scene.glint_offset), Some(glint), gain)
        })
        .collect();
    if looks.is_empty() {
        return None;
    }
    let n = looks.len() as f64;
    Some(crate::GazeAngles::new(
        looks.iter().map(|g| g.pan).sum::<f64>() / n,
        looks.iter().map(|g| g.tilt).sum::<f64>() / n,
    ))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunLog> {
    run_scenario_with(cfg, &RunOptions::default())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunLog> {
    use crate::config::Validate;
    cfg.validate()?;
    let scene = cfg.scene();
    let n = cfg.tick_count();
    let dt_frame = cfg.outer_dt();
    let th_dt = cfg.timing.throttle_dt;
    let every = cfg.timing.vehicle_every();
    let veh_dt = th_dt * every as f64;

    let open_area = match cfg.detection.calibrated_open_area {
        Some(a) => a,
        None => calibrate_open_area(&scene, cfg)?,
    };
    let eye_gain = cfg.pose.eye_gain.unwrap_or(1.0 / scene.head_px_per_deg());
    let gaze_gain = cfg.pose.gaze_gain.unwrap_or(1.0 / scene.eye_px_per_deg);
    if let Some(dir) = &opts.frame_dir {
        fs::create_dir_all(dir)?;
    }

    let mut pose_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    pose_rng.set_stream(POSE_NOISE_STREAM);
    let pose_noise = Normal::new(0.0, cfg.pose.measurement_noise).map_err(|e| invalid(e.to_string()))?;

    let mut eye_samples: Vec<EyeSample> = Vec::with_capacity(n + 1);
    let mut pose_samples: Vec<PoseSample> = Vec::with_capacity(n + 1);
    let mut gaze_samples: Vec<GazeSample> = Vec::with_capacity(n + 1);
    let mut records = Vec::with_capacity(n + 1);
    let mut tracker: Option<PoseTracker> = None;
    let mut stages = StageTracker::new(&cfg.fusion);
    let mut timeline = vec![StageChange {
        t: 0.0,
        stage: Stage::Alert,
    }];
    let mut stage_entry = (0.0, cfg.initial_speed);

    let mut vehicle = VehicleState {
        v: cfg.initial_speed,
        x: 0.0,
    };
    let theta0 = if cfg.initial_speed > 0.0 {
        cfg.vehicle.steady_throttle(cfg.initial_speed)
    } else {
        0.0
    };
    let mut throttle = ThrottleState::at_rest(theta0);
    let mut theta_ref = theta0;
    let mut integral = if cfg.governor.ki > 0.0 {
        theta0 / cfg.governor.ki
    } else {
        0.0
    };
    let mut substeps: u64 = 0;

    let threads = opts
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |c| c.get()))
        .max(1);
    let camera = Camera {
        cfg,
        scene: scene.clone(),
        renderer: Renderer::new(&scene),
        gaze_gain,
        frame_dir: opts.frame_dir.as_deref(),
    };
    let mut pending = std::collections::VecDeque::new();

    for k in 0..=n {
        let t = k as f64 * dt_frame;
        if pending.is_empty() {
            let hi = (k + threads * FRAMES_PER_WORKER).min(n + 1);
            pending.extend(camera.batch(k..hi, threads)?);
        }
        let Percept {
            truth,
            observation,
            local_gaze,
        } = pending.pop_front().expect("batch covers tick");

        let openness = openness_from_observation(&observation, open_area)?;
        eye_samples.push(EyeSample::new(t, openness));
        let ocular = ocular_metrics(&eye_samples, cfg.ocular.window, t)?;

        let measured = PoseAngles::new(
            truth.pose.pan + pose_noise.sample(&mut pose_rng),
            truth.pose.tilt + pose_noise.sample(&mut pose_rng),
            truth.pose.roll + pose_noise.sample(&mut pose_rng),
        );
        let meas = PoseMeasurement {
            t,
            angles: measured,
            noise: cfg.pose.measurement_noise,
        };
        let eyes = observation.midpoint();
        let pose = match tracker.as_mut() {
            None => {
                let mut tr = PoseTracker::new(
                    PoseState::new(measured, cfg.pose.initial_angle_var, cfg.pose.initial_rate_var),
                    &cfg.pose,
                    eye_gain,
                );
                tr.observe_eyes(eyes);
                tracker = Some(tr);
                measured
            }
            Some(tr) => tr.step(dt_frame, eyes, Some(&meas))?.posterior.angles,
        };
        pose_samples.push(PoseSample { t, angles: pose });
        let pm = pose_metrics(
            pose_window(&pose_samples, cfg.pose.window, t),
            cfg.pose.window,
            cfg.pose.frontal_cone,
            cfg.pose.tilt_threshold,
        )?;

        let gaze = local_gaze.map(|local| overall_gaze(t, pose, local));
        if let Some(g) = gaze {
            gaze_samples.push(g);
        }
        let lo = gaze_samples.partition_point(|g| g.t <= t - cfg.pose.window);
        let gaze_dispersion = gaze_narrowness(&gaze_samples[lo..]).ok();

        let metrics = VigilanceMetrics {
            perclos: ocular.perclos,
            aecs: ocular.aecs,
            tilt_rate: pm.tilt_rate,
            off_frontal_fraction: pm.off_frontal / pm.window_span,
            gaze_dispersion,
        };
        let mut fatigue = fatigue_level(t, &metrics, &cfg.fusion);
        let previous = stages.stage();
        fatigue.stage = stages.update(fatigue.level);
        if fatigue.stage != previous {
            timeline.push(StageChange {
                t,
                stage: fatigue.stage,
            });
            stage_entry = (t, vehicle.v);
        }
        let v_target = speed_target(fatigue.stage, t - stage_entry.0, &cfg.governor, stage_entry.1);

        records.push(TickRecord {
            t,
            truth,
            observation,
            openness,
            ocular,
            pose,
            pose_metrics: pm,
            gaze,
            metrics,
            fatigue,
            v_target,
            theta_ref,
            throttle,
            vehicle,
        });

        if k == n {
            break;
        }
        let goal = ((k + 1) as f64 * dt_frame / th_dt).round() as u64;
        while substeps < goal {
            if substeps.is_multiple_of(every as u64) {
                vehicle = longitudinal_step(&vehicle, throttle.theta, &cfg.vehicle, veh_dt)?;
                let out = speed_governor(
                    integral,
                    vehicle.v,
                    v_target,
                    &cfg.governor,
                    cfg.vehicle.wot_angle,
                    veh_dt,
                );
                integral = out.integral;
                theta_ref = out.theta_ref;
            }
            let u = smc_control(
                &throttle,
                &Reference::fixed(theta_ref),
                &cfg.throttle.smc,
                &cfg.throttle.plant,
            )
            .torque;
            throttle = plant_step(&throttle, u, &cfg.throttle.plant, th_dt)?;
            substeps += 1;
        }
    }

    let last = records.last().expect("at least one tick");
    let first = |s: Stage| timeline.iter().find(|c| c.stage >= s).map(|c| c.t).filter(|_| s != Stage::Alert);
    let summary = RunSummary {
        ticks: records.len(),
        duration: cfg.duration,
        seed: cfg.seed,
        calibrated_open_area: open_area,
        final_speed: last.vehicle.v,
        final_theta: last.throttle.theta,
        distance: last.vehicle.x,
        max_perclos: records.iter().map(|r| r.metrics.perclos).fold(0.0, f64::max),
        max_level: records.iter().map(|r| r.fatigue.level).fold(0.0, f64::max),
        first_warning: first(Stage::Warning),
        first_critical: first(Stage::Critical),
        stage_timeline: timeline,
    };
    Ok(RunLog { records, summary })
}
