//! Head pose tracking and gaze cues.
//!
//! Pose is three angles (pan, tilt, roll) tracked with a constant-velocity
//! Kalman filter. The filter's prediction assumes smooth motion, so each
//! prediction is blended with one extrapolated from the frame-to-frame pupil
//! shift; the blend leans on the eyes when the filter has recently been
//! surprised.

use nalgebra::{Matrix3, Matrix3x6, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::config::{join, Issues, Validate};
use crate::frame::GrayImage;
use crate::geometry::{GazeAngles, Point, PoseAngles};
use crate::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseConfig {
    /// White-acceleration spectral density, deg²/s³.
    pub process_noise: f64,
    /// Measurement noise std of the pose estimator, degrees.
    pub measurement_noise: f64,
    pub initial_angle_var: f64,
    pub initial_rate_var: f64,
    /// Degrees of head rotation per pixel of pupil-midpoint shift. Derived
    /// from the scene geometry when absent.
    pub eye_gain: Option<f64>,
    /// Innovation magnitude (degrees) at which the eye prediction takes over.
    pub switch_threshold: f64,
    pub fuse_eye_motion: bool,
    /// Degrees of eye-in-head gaze per pixel of pupil-glint offset. Derived
    /// from the scene geometry when absent.
    pub gaze_gain: Option<f64>,
    pub window: f64,
    pub frontal_cone: f64,
    pub tilt_threshold: f64,
}

impl Default for PoseConfig {
    fn default() -> Self {
        Self {
            process_noise: 50.0,
            measurement_noise: 1.0,
            initial_angle_var: 1.0,
            initial_rate_var: 100.0,
            eye_gain: None,
            switch_threshold: 5.0,
            fuse_eye_motion: true,
            gaze_gain: None,
            window: 60.0,
            frontal_cone: 15.0,
            tilt_threshold: 20.0,
        }
    }
}

impl Validate for PoseConfig {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        issues.check(self.process_noise >= 0.0, p("process_noise"), "must be >= 0");
        issues.check(self.measurement_noise > 0.0, p("measurement_noise"), "must be > 0");
        issues.check(self.initial_angle_var >= 0.0, p("initial_angle_var"), "must be >= 0");
        issues.check(self.initial_rate_var >= 0.0, p("initial_rate_var"), "must be >= 0");
        issues.check(
            self.eye_gain.is_none_or(|g| g > 0.0),
            p("eye_gain"),
            "must be > 0",
        );
        issues.check(
            self.gaze_gain.is_none_or(|g| g > 0.0),
            p("gaze_gain"),
            "must be > 0",
        );
        issues.check(self.switch_threshold > 0.0, p("switch_threshold"), "must be > 0");
        issues.check(self.window > 0.0, p("window"), "must be > 0");
        issues.check(self.frontal_cone > 0.0, p("frontal_cone"), "must be > 0");
        issues.check(self.tilt_threshold > 0.0, p("tilt_threshold"), "must be > 0");
    }
}

/// Angles, angular rates (deg/s) and their joint covariance, ordered
/// `[pan, tilt, roll, pan_rate, tilt_rate, roll_rate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseState {
    pub angles: PoseAngles,
    pub rates: PoseAngles,
    pub covariance: Matrix6<f64>,
}

impl PoseState {
    pub fn new(angles: PoseAngles, angle_var: f64, rate_var: f64) -> Self {
        let diag = Vector6::new(angle_var, angle_var, angle_var, rate_var, rate_var, rate_var);
        Self {
            angles,
            rates: PoseAngles::default(),
            covariance: Matrix6::from_diagonal(&diag),
        }
    }

    fn mean(&self) -> Vector6<f64> {
        let [a, b, c] = self.angles.to_array();
        let [d, e, f] = self.rates.to_array();
        Vector6::new(a, b, c, d, e, f)
    }

    fn from_mean(x: &Vector6<f64>, covariance: Matrix6<f64>) -> Self {
        Self {
            angles: PoseAngles::new(x[0], x[1], x[2]),
            rates: PoseAngles::new(x[3], x[4], x[5]),
            covariance,
        }
    }

    /// Largest absolute asymmetry `|P - Pᵀ|`.
    pub fn symmetry_residual(&self) -> f64 {
        (self.covariance - self.covariance.transpose()).abs().max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = 0.5 * (self.covariance + self.covariance.transpose());
        SymmetricEigen::new(sym).eigenvalues.min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoseMeasurement {
    pub t: f64,
    pub angles: PoseAngles,
    /// Standard deviation, degrees.
    pub noise: f64,
}

fn transition(dt: f64) -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    for i in 0..3 {
        f[(i, i + 3)] = dt;
    }
    f
}

fn process_covariance(dt: f64, q: f64) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for i in 0..3 {
        m[(i, i)] = q * dt.powi(3) / 3.0;
        m[(i, i + 3)] = q * dt.powi(2) / 2.0;
        m[(i + 3, i)] = q * dt.powi(2) / 2.0;
        m[(i + 3, i + 3)] = q * dt;
    }
    m
}

fn symmetrize(p: Matrix6<f64>) -> Matrix6<f64> {
    0.5 * (p + p.transpose())
}

/// Constant-velocity propagation over `dt` with white-acceleration process
/// noise of spectral density `process_noise`.
pub fn kf_predict(state: &PoseState, dt: f64, process_noise: f64) -> Result<PoseState> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(invalid(format!("prediction step must be positive, got {dt}")));
    }
    let f = transition(dt);
    let x = f * state.mean();
    let p = f * state.covariance * f.transpose() + process_covariance(dt, process_noise);
    Ok(PoseState::from_mean(&x, symmetrize(p)))
}

/// Extrapolates pan and tilt from the pupil-midpoint image shift; roll is
/// carried over.
pub fn eye_motion_predict(prev: &PoseState, pupil_shift: Point, gain: f64) -> PoseAngles {
    PoseAngles::new(
        prev.angles.pan + gain * pupil_shift.x,
        prev.angles.tilt + gain * pupil_shift.y,
        prev.angles.roll,
    )
}

/// Convex blend `(1 - w)·kf + w·eye` with `w = min(1, innovation / switch)`.
pub fn fuse_predictions(
    kf: PoseAngles,
    eye: PoseAngles,
    innovation: f64,
    switch_threshold: f64,
) -> PoseAngles {
    let w = (innovation.abs() / switch_threshold).min(1.0);
    let mix = |a: f64, b: f64| (1.0 - w) * a + w * b;
    PoseAngles::new(mix(kf.pan, eye.pan), mix(kf.tilt, eye.tilt), mix(kf.roll, eye.roll))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KfUpdate {
    pub state: PoseState,
    /// Measurement minus predicted angles.
    pub innovation: PoseAngles,
}

/// Linear measurement update on the three angles (Joseph form).
pub fn kf_update(predicted: &PoseState, meas: &PoseMeasurement) -> Result<KfUpdate> {
    if meas.noise <= 0.0 || !meas.noise.is_finite() {
        return Err(invalid(format!(
            "measurement noise must be positive, got {}",
            meas.noise
        )));
    }
    let h = Matrix3x6::from_fn(|r, c| if r == c { 1.0 } else { 0.0 });
    let r = Matrix3::identity() * meas.noise * meas.noise;
    let p = &predicted.covariance;
    let [zp, zt, zr] = meas.angles.to_array();
    let y = Vector3::new(zp, zt, zr) - h * predicted.mean();
    let s = h * p * h.transpose() + r;
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    let k = p * h.transpose() * s_inv;
    let x = predicted.mean() + k * y;
    let i_kh = Matrix6::identity() - k * h;
    let p_new = i_kh * p * i_kh.transpose() + k * r * k.transpose();
    Ok(KfUpdate {
        state: PoseState::from_mean(&x, symmetrize(p_new)),
        innovation: PoseAngles::new(y[0], y[1], y[2]),
    })
}

/// What one tracker step predicted and concluded.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackStep {
    pub kf_prediction: PoseAngles,
    pub eye_prediction: Option<PoseAngles>,
    pub prediction: PoseAngles,
    pub posterior: PoseState,
}

/// Single-owner pose tracker.
#[derive(Debug, Clone)]
pub struct PoseTracker {
    state: PoseState,
    process_noise: f64,
    eye_gain: f64,
    switch_threshold: f64,
    fuse: bool,
    /// Magnitude of the last measurement's departure from the pure
    /// constant-velocity prediction.
    surprise: f64,
    prev_eyes: Option<Point>,
}

impl PoseTracker {
    pub fn new(initial: PoseState, cfg: &PoseConfig, eye_gain: f64) -> Self {
        Self {
            state: initial,
            process_noise: cfg.process_noise,
            eye_gain,
            switch_threshold: cfg.switch_threshold,
            fuse: cfg.fuse_eye_motion,
            surprise: 0.0,
            prev_eyes: None,
        }
    }

    pub fn state(&self) -> &PoseState {
        &self.state
    }

    /// Seeds the eye-motion reference without advancing the filter.
    pub fn observe_eyes(&mut self, eyes: Option<Point>) {
        self.prev_eyes = eyes;
    }

    /// Predicts `dt` ahead, blending in the eye-motion prediction when both
    /// this and the previous frame located both pupils, then corrects with
    /// `meas` if one is available.
    pub fn step(&mut self, dt: f64, eyes: Option<Point>, meas: Option<&PoseMeasurement>) -> Result<TrackStep> {
        let mut predicted = kf_predict(&self.state, dt, self.process_noise)?;
        let kf_prediction = predicted.angles;
        let eye_prediction = match (self.prev_eyes, eyes) {
            (Some(prev), Some(now)) => {
                let mut e = eye_motion_predict(&self.state, now - prev, self.eye_gain);
                e.roll = kf_prediction.roll;
                Some(e)
            }
            _ => None,
        };
        if self.fuse {
            if let Some(eye) = eye_prediction {
                predicted.angles =
                    fuse_predictions(kf_prediction, eye, self.surprise, self.switch_threshold);
            }
        }
        let prediction = predicted.angles;
        self.prev_eyes = eyes;

        self.state = match meas {
            Some(m) => {
                let d = [
                    m.angles.pan - kf_prediction.pan,
                    m.angles.tilt - kf_prediction.tilt,
                    m.angles.roll - kf_prediction.roll,
                ];
                self.surprise = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                kf_update(&predicted, m)?.state
            }
            None => predicted,
        };
        Ok(TrackStep {
            kf_prediction,
            eye_prediction,
            prediction,
            posterior: self.state.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoseSample {
    pub t: f64,
    pub angles: PoseAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoseMetrics {
    /// Head-tilt excursions per minute.
    pub tilt_rate: f64,
    /// Seconds spent outside the frontal cone.
    pub off_frontal: f64,
    pub window_span: f64,
}

/// Off-frontal time and tilt-excursion rate over a time-ordered window.
///
/// Each sample stands for the interval up to the next sample (the last one
/// reuses the preceding interval). An excursion starts when `max(|tilt|,
/// |roll|)` leaves the tilt threshold and ends when it returns inside.
pub fn pose_metrics(
    window: &[PoseSample],
    window_span: f64,
    frontal_cone: f64,
    tilt_threshold: f64,
) -> Result<PoseMetrics> {
    if window.is_empty() {
        return Err(Error::EmptyWindow("pose metrics need at least one sample"));
    }
    if window_span <= 0.0 {
        return Err(invalid(format!("window span must be positive, got {window_span}")));
    }
    let n = window.len();
    let interval = |i: usize| {
        if i + 1 < n {
            window[i + 1].t - window[i].t
        } else if n > 1 {
            window[n - 1].t - window[n - 2].t
        } else {
            0.0
        }
    };
    let mut off_frontal = 0.0;
    let mut excursions = 0usize;
    let mut tilted = false;
    for (i, s) in window.iter().enumerate() {
        let a = s.angles;
        if a.pan.abs().max(a.tilt.abs()) > frontal_cone {
            off_frontal += interval(i);
        }
        let now_tilted = a.tilt.abs().max(a.roll.abs()) > tilt_threshold;
        if now_tilted && !tilted {
            excursions += 1;
        }
        tilted = now_tilted;
    }
    Ok(PoseMetrics {
        tilt_rate: excursions as f64 * 60.0 / window_span,
        off_frontal: off_frontal.min(window_span),
        window_span,
    })
}

/// Samples with `t` in `(t_now - span, t_now]` of a time-ordered series.
pub fn pose_window(samples: &[PoseSample], span: f64, t_now: f64) -> &[PoseSample] {
    let lo = samples.partition_point(|s| s.t <= t_now - span);
    let hi = samples.partition_point(|s| s.t <= t_now);
    &samples[lo..hi.max(lo)]
}

/// Eye-in-head gaze from the pupil-glint vector.
pub fn local_gaze(pupil: Option<Point>, glint: Option<Point>, gain: f64) -> Option<GazeAngles> {
    let d = pupil? - glint?;
    Some(GazeAngles::new(gain * d.x, gain * d.y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GazeSample {
    pub t: f64,
    pub pan: f64,
    pub tilt: f64,
}

/// Face pose gives the global direction, eye gaze the local one.
pub fn overall_gaze(t: f64, pose: PoseAngles, local: GazeAngles) -> GazeSample {
    GazeSample {
        t,
        pan: pose.pan + local.pan,
        tilt: pose.tilt + local.tilt,
    }
}

/// RMS deviation of overall gaze from its window mean, pan and tilt
/// combined. Small values mean a narrow gaze.
pub fn gaze_narrowness(window: &[GazeSample]) -> Result<f64> {
    if window.len() < 2 {
        return Err(Error::EmptyWindow("gaze dispersion needs at least two samples"));
    }
    let n = window.len() as f64;
    let mp = window.iter().map(|g| g.pan).sum::<f64>() / n;
    let mt = window.iter().map(|g| g.tilt).sum::<f64>() / n;
    let ss: f64 = window
        .iter()
        .map(|g| (g.pan - mp).powi(2) + (g.tilt - mt).powi(2))
        .sum();
    Ok((ss / n).sqrt())
}

/// Centroid of near-saturated pixels within `radius` of `near` in the
/// bright-pupil field.
pub fn find_glint(even: &GrayImage, near: Point, radius: f64, min_level: u8) -> Option<Point> {
    let x0 = (near.x - radius).floor().max(0.0) as usize;
    let y0 = (near.y - radius).floor().max(0.0) as usize;
    let x1 = ((near.x + radius).ceil().max(0.0) as usize).min(even.width() - 1);
    let y1 = ((near.y + radius).ceil().max(0.0) as usize).min(even.height() - 1);
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if even.get(x, y) >= min_level {
                n += 1;
                sx += x as f64;
                sy += y as f64;
            }
        }
    }
    (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(pan: f64, pan_rate: f64) -> PoseState {
        let mut s = PoseState::new(PoseAngles::new(pan, 0.0, 0.0), 1.0, 1.0);
        s.rates.pan = pan_rate;
        s
    }

    #[test]
    fn predict_constant_velocity() {
        let p = kf_predict(&state(10.0, 5.0), 0.1, 1.0).unwrap();
        assert!((p.angles.pan - 10.5).abs() < 1e-12);
        let still = kf_predict(&state(10.0, 0.0), 0.1, 1.0).unwrap();
        assert_eq!(still.angles, PoseAngles::new(10.0, 0.0, 0.0));
        assert!(p.covariance.trace() >= state(10.0, 5.0).covariance.trace());
        assert!(kf_predict(&state(0.0, 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn predict_without_noise_is_exact_linear_motion() {
        let mut s = state(-20.0, 3.0);
        s.rates.tilt = -1.5;
        for _ in 0..100 {
            s = kf_predict(&s, 0.05, 0.0).unwrap();
        }
        assert!((s.angles.pan - (-20.0 + 3.0 * 5.0)).abs() < 1e-9);
        assert!((s.angles.tilt - (-1.5 * 5.0)).abs() < 1e-9);
    }

    #[test]
    fn eye_motion_cases() {
        let s = state(0.0, 0.0);
        assert_eq!(eye_motion_predict(&s, Point::new(0.0, 0.0), 0.5), s.angles);
        assert_eq!(eye_motion_predict(&s, Point::new(10.0, 0.0), 0.5).pan, 5.0);
        let e = eye_motion_predict(&state(10.0, 0.0), Point::new(-4.0, 2.0), 0.5);
        assert_eq!((e.pan, e.tilt), (8.0, 1.0));
    }

    #[test]
    fn fusion_cases() {
        let kf = PoseAngles::new(1.0, 2.0, 3.0);
        let eye = PoseAngles::new(5.0, -2.0, 0.0);
        assert_eq!(fuse_predictions(kf, eye, 0.0, 5.0), kf);
        assert_eq!(fuse_predictions(kf, eye, 5.0, 5.0), eye);
        assert_eq!(fuse_predictions(kf, eye, 50.0, 5.0), eye);
        assert_eq!(fuse_predictions(kf, kf, 2.3, 5.0), kf);
        let half = fuse_predictions(kf, eye, 2.5, 5.0);
        assert!((half.pan - 3.0).abs() < 1e-12);
    }

    #[test]
    fn update_scalar_hand_case() {
        let prior = PoseState::new(PoseAngles::FRONTAL, 4.0, 1.0);
        let meas = PoseMeasurement {
            t: 0.0,
            angles: PoseAngles::new(10.0, 0.0, 0.0),
            noise: 2.0,
        };
        let u = kf_update(&prior, &meas).unwrap();
        assert!((u.state.angles.pan - 5.0).abs() < 1e-12);
        assert!((u.state.covariance[(0, 0)] - 2.0).abs() < 1e-12);
        assert_eq!(u.innovation.pan, 10.0);
    }

    #[test]
    fn update_matching_measurement_keeps_angles() {
        let prior = state(3.0, 1.0);
        let meas = PoseMeasurement {
            t: 0.0,
            angles: prior.angles,
            noise: 1.0,
        };
        let u = kf_update(&prior, &meas).unwrap();
        assert!((u.state.angles.pan - 3.0).abs() < 1e-12);
        assert!(u.state.covariance.trace() <= prior.covariance.trace());
    }

    #[test]
    fn uninformative_measurement_leaves_prior() {
        let prior = state(3.0, 1.0);
        let meas = PoseMeasurement {
            t: 0.0,
            angles: PoseAngles::new(80.0, -60.0, 10.0),
            noise: 1e6,
        };
        let u = kf_update(&prior, &meas).unwrap();
        assert!((u.state.angles.pan - 3.0).abs() < 1e-3);
        assert!(u.state.angles.tilt.abs() < 1e-3);
        assert!(kf_update(&prior, &PoseMeasurement { noise: 0.0, ..meas }).is_err());
    }

    #[test]
    fn tracker_falls_back_to_kf_without_eyes() {
        let cfg = PoseConfig::default();
        let mut tr = PoseTracker::new(state(0.0, 10.0), &cfg, 0.5);
        let step = tr.step(0.1, None, None).unwrap();
        assert_eq!(step.eye_prediction, None);
        assert_eq!(step.prediction, step.kf_prediction);
        assert!((step.prediction.pan - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_all_frontal() {
        let w: Vec<_> = (0..100)
            .map(|i| PoseSample {
                t: i as f64 * 0.1,
                angles: PoseAngles::new(3.0, -2.0, 5.0),
            })
            .collect();
        let m = pose_metrics(&w, 10.0, 15.0, 20.0).unwrap();
        assert_eq!(m.off_frontal, 0.0);
        assert_eq!(m.tilt_rate, 0.0);
        assert!(pose_metrics(&[], 10.0, 15.0, 20.0).is_err());
    }

    #[test]
    fn metrics_off_frontal_duration() {
        let w: Vec<_> = (0..100)
            .map(|i| PoseSample {
                t: i as f64 * 0.1,
                angles: PoseAngles::new(if (30..50).contains(&i) { 40.0 } else { 0.0 }, 0.0, 0.0),
            })
            .collect();
        let m = pose_metrics(&w, 10.0, 15.0, 20.0).unwrap();
        assert!((m.off_frontal - 2.0).abs() < 1e-9);
    }

    #[test]
    fn metrics_counts_tilt_excursions() {
        let w: Vec<_> = (0..600)
            .map(|i| {
                let tilted = [(50, 80), (200, 215), (400, 460)]
                    .iter()
                    .any(|&(a, b)| (a..b).contains(&i));
                PoseSample {
                    t: i as f64 * 0.1,
                    angles: PoseAngles::new(0.0, if tilted { 30.0 } else { 0.0 }, 0.0),
                }
            })
            .collect();
        let m = pose_metrics(&w, 60.0, 15.0, 20.0).unwrap();
        assert!((m.tilt_rate - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gaze_cases() {
        assert_eq!(
            local_gaze(Some(Point::new(5.0, 5.0)), Some(Point::new(5.0, 5.0)), 0.5),
            Some(GazeAngles::new(0.0, 0.0))
        );
        assert_eq!(
            local_gaze(Some(Point::new(16.0, 0.0)), Some(Point::new(10.0, 0.0)), 0.5),
            Some(GazeAngles::new(3.0, 0.0))
        );
        assert_eq!(
            local_gaze(Some(Point::new(-2.0, 4.0)), Some(Point::new(0.0, 0.0)), 0.5),
            Some(GazeAngles::new(-1.0, 2.0))
        );
        assert_eq!(local_gaze(None, Some(Point::default()), 0.5), None);

        let g = overall_gaze(0.0, PoseAngles::FRONTAL, GazeAngles::default());
        assert_eq!((g.pan, g.tilt), (0.0, 0.0));
        let g = overall_gaze(0.0, PoseAngles::new(10.0, 0.0, 0.0), GazeAngles::new(-3.0, 0.0));
        assert_eq!(g.pan, 7.0);
        let g = overall_gaze(0.0, PoseAngles::new(5.0, -2.0, 0.0), GazeAngles::new(1.0, 1.0));
        assert_eq!((g.pan, g.tilt), (6.0, -1.0));
    }

    #[test]
    fn narrowness_cases() {
        let mk = |pans: &[f64]| -> Vec<GazeSample> {
            pans.iter()
                .enumerate()
                .map(|(i, &p)| GazeSample { t: i as f64, pan: p, tilt: 0.0 })
                .collect()
        };
        assert_eq!(gaze_narrowness(&mk(&[2.0; 5])).unwrap(), 0.0);
        let alt = mk(&[1.0, -1.0, 1.0, -1.0]);
        assert!((gaze_narrowness(&alt).unwrap() - 1.0).abs() < 1e-12);
        let doubled = mk(&[2.0, -2.0, 2.0, -2.0]);
        assert!((gaze_narrowness(&doubled).unwrap() - 2.0).abs() < 1e-12);
        assert!(gaze_narrowness(&mk(&[1.0])).is_err());
    }

    #[test]
    fn glint_found_near_pupil() {
        let mut img = GrayImage::filled(40, 40, 50);
        for (x, y) in [(20, 10), (19, 10), (21, 10), (20, 9), (20, 11)] {
            img.set(x, y, 255);
        }
        let g = find_glint(&img, Point::new(15.0, 14.0), 10.0, 250).unwrap();
        assert_eq!(g, Point::new(20.0, 10.0));
        assert_eq!(find_glint(&img, Point::new(5.0, 35.0), 4.0, 250), None);
    }
}
