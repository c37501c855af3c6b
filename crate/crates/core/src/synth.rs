//! Scripted driver behaviour and synthetic active-IR field rendering.
//!
//! The even field is lit by the on-axis ring and shows bright pupils; the odd
//! field is lit off-axis and shows dark pupils. Both share background,
//! external illumination and glints, so their difference isolates pupils.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{join, Issues, Validate};
use crate::frame::{FramePair, GrayImage};
use crate::geometry::{GazeAngles, Point, PoseAngles};
use crate::{Error, Result};

const INTERPUPILLARY_M: f64 = 0.063;
const HEAD_PIVOT_M: f64 = 0.1;
const BACKGROUND_BASE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub image_width: usize,
    pub image_height: usize,
    /// meters
    pub camera_distance: f64,
    /// pixels
    pub focal_length: f64,
    pub pupil_radius: f64,
    /// Even-field pupil brightness above the odd field, at full openness.
    pub pupil_contrast: f64,
    pub glint_intensity: u8,
    /// Glint position relative to the pupil center at straight-ahead gaze.
    pub glint_offset: Point,
    /// Pupil displacement per degree of eye-in-head gaze.
    pub eye_px_per_deg: f64,
    pub background_amplitude: f64,
    pub noise_sigma: f64,
    pub frame_rate: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            image_width: 320,
            image_height: 240,
            camera_distance: 1.5,
            focal_length: 1430.0,
            pupil_radius: 4.0,
            pupil_contrast: 120.0,
            glint_intensity: 255,
            glint_offset: Point::new(6.0, -4.0),
            eye_px_per_deg: 0.5,
            background_amplitude: 70.0,
            noise_sigma: 2.0,
            frame_rate: 30.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    /// Distance between the two pupils in the image at frontal pose.
    pub fn interocular_px(&self) -> f64 {
        self.focal_length * INTERPUPILLARY_M / self.camera_distance
    }

    /// Image displacement of the eyes per degree of head pan or tilt
    /// (small-angle rotation about a pivot behind the eyes).
    pub fn head_px_per_deg(&self) -> f64 {
        self.focal_length * HEAD_PIVOT_M * 1f64.to_radians() / self.camera_distance
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.image_width as f64 - 1.0) / 2.0,
            (self.image_height as f64 - 1.0) / 2.0,
        )
    }

    fn clamp_point(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(0.0, self.image_width as f64 - 1.0),
            p.y.clamp(0.0, self.image_height as f64 - 1.0),
        )
    }
}

impl Validate for SceneConfig {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        issues.check(self.image_width > 0, p("image_width"), "must be > 0");
        issues.check(self.image_height > 0, p("image_height"), "must be > 0");
        issues.check(self.camera_distance > 0.0, p("camera_distance"), "must be > 0");
        issues.check(self.focal_length > 0.0, p("focal_length"), "must be > 0");
        issues.check(self.pupil_radius >= 1.0, p("pupil_radius"), "must be >= 1");
        issues.check(self.pupil_contrast > 0.0, p("pupil_contrast"), "must be > 0");
        issues.check(self.eye_px_per_deg > 0.0, p("eye_px_per_deg"), "must be > 0");
        issues.check(
            self.background_amplitude >= 0.0,
            p("background_amplitude"),
            "must be >= 0",
        );
        issues.check(self.noise_sigma >= 0.0, p("noise_sigma"), "must be >= 0");
        issues.check(self.frame_rate > 0.0, p("frame_rate"), "must be > 0");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseKeyframe {
    pub t: f64,
    #[serde(default)]
    pub pan: f64,
    #[serde(default)]
    pub tilt: f64,
    #[serde(default)]
    pub roll: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeKeyframe {
    pub t: f64,
    #[serde(default)]
    pub pan: f64,
    #[serde(default)]
    pub tilt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpennessKeyframe {
    pub t: f64,
    pub openness: f64,
}

/// One eyelid closure: linear close, hold, linear reopen. `depth` is the
/// openness reached while held (0 = fully shut).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureEvent {
    pub onset: f64,
    pub closing: f64,
    #[serde(default)]
    pub hold: f64,
    pub reopening: f64,
    #[serde(default)]
    pub depth: f64,
}

impl ClosureEvent {
    fn span(&self) -> f64 {
        self.closing + self.hold + self.reopening
    }

    /// Multiplier on base openness at time `t`.
    fn factor(&self, t: f64) -> f64 {
        let tau = t - self.onset;
        if tau < 0.0 || tau > self.span() {
            return 1.0;
        }
        let d = self.depth;
        if tau < self.closing {
            1.0 - (1.0 - d) * tau / self.closing
        } else if tau <= self.closing + self.hold {
            d
        } else {
            d + (1.0 - d) * (tau - self.closing - self.hold) / self.reopening
        }
    }
}

/// Periodic closures from `start` (inclusive) to `end` (exclusive onsets).
/// Durations ramp linearly from the start values to the `*_end` values
/// across the train, which scripts lengthening closures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureTrain {
    pub start: f64,
    pub end: f64,
    pub period: f64,
    pub closing: f64,
    #[serde(default)]
    pub hold: f64,
    pub reopening: f64,
    #[serde(default)]
    pub closing_end: Option<f64>,
    #[serde(default)]
    pub hold_end: Option<f64>,
    #[serde(default)]
    pub reopening_end: Option<f64>,
    #[serde(default)]
    pub depth: f64,
}

impl ClosureTrain {
    fn count(&self) -> usize {
        if self.period <= 0.0 || self.end <= self.start {
            return 0;
        }
        ((self.end - self.start) / self.period).ceil() as usize
    }

    fn event(&self, k: usize) -> ClosureEvent {
        let n = self.count();
        let frac = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
        let ramp = |a: f64, b: Option<f64>| a + (b.unwrap_or(a) - a) * frac;
        ClosureEvent {
            onset: self.start + k as f64 * self.period,
            closing: ramp(self.closing, self.closing_end),
            hold: ramp(self.hold, self.hold_end),
            reopening: ramp(self.reopening, self.reopening_end),
            depth: self.depth,
        }
    }

    fn max_span(&self) -> f64 {
        let pick = |a: f64, b: Option<f64>| a.max(b.unwrap_or(a));
        pick(self.closing, self.closing_end)
            + pick(self.hold, self.hold_end)
            + pick(self.reopening, self.reopening_end)
    }

    fn factor(&self, t: f64) -> f64 {
        let n = self.count();
        if n == 0 || t < self.start {
            return 1.0;
        }
        let last = (((t - self.start) / self.period).floor() as usize).min(n - 1);
        let lookback = (self.max_span() / self.period).ceil() as usize;
        let first = last.saturating_sub(lookback);
        (first..=last)
            .map(|k| self.event(k).factor(t))
            .fold(1.0, f64::min)
    }
}

/// Periodic head nods: the head tilts (and optionally rolls) away from the
/// keyframed pose and returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodTrain {
    pub start: f64,
    pub end: f64,
    pub period: f64,
    pub down: f64,
    #[serde(default)]
    pub hold: f64,
    pub up: f64,
    #[serde(default)]
    pub tilt_depth: f64,
    #[serde(default)]
    pub roll_depth: f64,
}

impl NodTrain {
    /// Excursion profile in [0, 1] at `t`.
    fn profile(&self, t: f64) -> f64 {
        if self.period <= 0.0 || t < self.start || t >= self.end + self.down + self.hold + self.up
        {
            return 0.0;
        }
        let k = ((t - self.start) / self.period).floor();
        let onset = self.start + k * self.period;
        // The onset of the last nod must precede `end`.
        let onset = if onset >= self.end {
            onset - self.period
        } else {
            onset
        };
        let tau = t - onset;
        if tau < 0.0 {
            0.0
        } else if tau < self.down {
            tau / self.down
        } else if tau <= self.down + self.hold {
            1.0
        } else if tau < self.down + self.hold + self.up {
            1.0 - (tau - self.down - self.hold) / self.up
        } else {
            0.0
        }
    }
}

/// Triangle-wave gaze scanning (mirror checks, road scanning).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanTrain {
    pub start: f64,
    pub end: f64,
    pub period: f64,
    #[serde(default)]
    pub pan_amplitude: f64,
    #[serde(default)]
    pub tilt_amplitude: f64,
}

impl ScanTrain {
    fn offset(&self, t: f64) -> GazeAngles {
        if self.period <= 0.0 || t < self.start || t >= self.end {
            return GazeAngles::default();
        }
        let phase = ((t - self.start) / self.period).fract();
        // 0 -> 1 -> 0 -> -1 -> 0
        let w = if phase < 0.25 {
            4.0 * phase
        } else if phase < 0.75 {
            2.0 - 4.0 * phase
        } else {
            4.0 * phase - 4.0
        };
        GazeAngles::new(self.pan_amplitude * w, self.tilt_amplitude * w)
    }
}

/// Piecewise timeline of driver behaviour over `[0, end]`.
///
/// Keyframe channels interpolate linearly and hold their first/last value
/// outside the keyed range. Empty channels default to frontal pose,
/// straight gaze and fully open eyes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverScript {
    pub end: f64,
    #[serde(default)]
    pub pose: Vec<PoseKeyframe>,
    #[serde(default)]
    pub gaze: Vec<GazeKeyframe>,
    #[serde(default)]
    pub openness: Vec<OpennessKeyframe>,
    #[serde(default)]
    pub closures: Vec<ClosureEvent>,
    #[serde(default)]
    pub closure_trains: Vec<ClosureTrain>,
    #[serde(default)]
    pub nods: Vec<NodTrain>,
    #[serde(default)]
    pub scans: Vec<ScanTrain>,
}

impl DriverScript {
    /// Eyes open, head frontal, gaze straight for `end` seconds.
    pub fn steady(end: f64) -> Self {
        Self {
            end,
            pose: Vec::new(),
            gaze: Vec::new(),
            openness: Vec::new(),
            closures: Vec::new(),
            closure_trains: Vec::new(),
            nods: Vec::new(),
            scans: Vec::new(),
        }
    }

    fn pose_at(&self, t: f64) -> PoseAngles {
        let mut pose = PoseAngles::from_array(interpolate(&self.pose, t, |k| {
            (k.t, [k.pan, k.tilt, k.roll])
        }));
        for nod in &self.nods {
            let w = nod.profile(t);
            pose.tilt += nod.tilt_depth * w;
            pose.roll += nod.roll_depth * w;
        }
        pose
    }

    fn gaze_at(&self, t: f64) -> GazeAngles {
        let [pan, tilt] = interpolate(&self.gaze, t, |k| (k.t, [k.pan, k.tilt]));
        self.scans.iter().fold(GazeAngles::new(pan, tilt), |g, s| {
            let o = s.offset(t);
            GazeAngles::new(g.pan + o.pan, g.tilt + o.tilt)
        })
    }

    fn openness_at(&self, t: f64) -> f64 {
        let [base] = if self.openness.is_empty() {
            [1.0]
        } else {
            interpolate(&self.openness, t, |k| (k.t, [k.openness]))
        };
        let events = self.closures.iter().map(|e| e.factor(t));
        let trains = self.closure_trains.iter().map(|tr| tr.factor(t));
        let factor = events.chain(trains).fold(1.0, f64::min);
        (base * factor).clamp(0.0, 1.0)
    }
}

fn interpolate<K, const N: usize>(
    keys: &[K],
    t: f64,
    get: impl Fn(&K) -> (f64, [f64; N]),
) -> [f64; N] {
    let Some(first) = keys.first() else {
        return [0.0; N];
    };
    let (t0, v0) = get(first);
    if t <= t0 {
        return v0;
    }
    for pair in keys.windows(2) {
        let (ta, va) = get(&pair[0]);
        let (tb, vb) = get(&pair[1]);
        if t <= tb {
            if tb <= ta {
                return vb;
            }
            let w = (t - ta) / (tb - ta);
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = va[i] + (vb[i] - va[i]) * w;
            }
            return out;
        }
    }
    get(&keys[keys.len() - 1]).1
}

fn check_monotone(times: impl Iterator<Item = f64>, path: String, issues: &mut Issues) {
    let mut prev = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !t.is_finite() || t < prev {
            issues.push(format!("{path}[{i}].t"), "keyframe times must be nondecreasing");
            return;
        }
        prev = t;
    }
}

impl Validate for DriverScript {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        issues.check(self.end > 0.0, p("end"), "must be > 0");
        check_monotone(self.pose.iter().map(|k| k.t), p("pose"), issues);
        check_monotone(self.gaze.iter().map(|k| k.t), p("gaze"), issues);
        check_monotone(self.openness.iter().map(|k| k.t), p("openness"), issues);
        for (i, k) in self.openness.iter().enumerate() {
            issues.check(
                (0.0..=1.0).contains(&k.openness),
                format!("{}[{i}].openness", p("openness")),
                "must be within [0, 1]",
            );
        }
        for (i, k) in self.pose.iter().enumerate() {
            for (name, v) in [("pan", k.pan), ("tilt", k.tilt), ("roll", k.roll)] {
                issues.check(
                    v.abs() <= 90.0,
                    format!("{}[{i}].{name}", p("pose")),
                    "must be within ±90°",
                );
            }
        }
        for (i, e) in self.closures.iter().enumerate() {
            let path = format!("{}[{i}]", p("closures"));
            issues.check(
                e.closing >= 0.0 && e.hold >= 0.0 && e.reopening >= 0.0,
                path.clone(),
                "durations must be >= 0",
            );
            issues.check((0.0..=1.0).contains(&e.depth), path, "depth must be within [0, 1]");
        }
        for (i, tr) in self.closure_trains.iter().enumerate() {
            let path = format!("{}[{i}]", p("closure_trains"));
            issues.check(tr.period > 0.0, format!("{path}.period"), "must be > 0");
            let durs = [
                Some(tr.closing),
                Some(tr.hold),
                Some(tr.reopening),
                tr.closing_end,
                tr.hold_end,
                tr.reopening_end,
            ];
            issues.check(
                durs.iter().flatten().all(|d| *d >= 0.0),
                path.clone(),
                "durations must be >= 0",
            );
            issues.check((0.0..=1.0).contains(&tr.depth), path, "depth must be within [0, 1]");
        }
        for (i, n) in self.nods.iter().enumerate() {
            let path = format!("{}[{i}]", p("nods"));
            issues.check(n.period > 0.0, format!("{path}.period"), "must be > 0");
            issues.check(
                n.down >= 0.0 && n.hold >= 0.0 && n.up >= 0.0,
                path.clone(),
                "durations must be >= 0",
            );
        }
        for (i, s) in self.scans.iter().enumerate() {
            issues.check(
                s.period > 0.0,
                format!("{}[{i}].period", p("scans")),
                "must be > 0",
            );
        }
        // Keyframes plus nod excursions must stay inside ±90°.
        let extra_tilt: f64 = self.nods.iter().map(|n| n.tilt_depth.abs()).sum();
        let extra_roll: f64 = self.nods.iter().map(|n| n.roll_depth.abs()).sum();
        let max_tilt = self.pose.iter().map(|k| k.tilt.abs()).fold(0.0, f64::max);
        let max_roll = self.pose.iter().map(|k| k.roll.abs()).fold(0.0, f64::max);
        issues.check(
            max_tilt + extra_tilt <= 90.0 && max_roll + extra_roll <= 90.0,
            p("nods"),
            "pose plus nod depth must stay within ±90°",
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundTruth {
    pub t: f64,
    /// Image-left pupil.
    pub left_pupil: Point,
    pub right_pupil: Point,
    pub left_glint: Point,
    pub right_glint: Point,
    /// Fraction of pupil area not covered by the eyelid.
    pub visible_fraction: f64,
    pub openness: f64,
    pub pose: PoseAngles,
    pub gaze: GazeAngles,
}

/// Samples the scripted driver at `t`, projecting eyes and glints into
/// `scene` coordinates.
pub fn evaluate_script(script: &DriverScript, scene: &SceneConfig, t: f64) -> Result<GroundTruth> {
    if !(0.0..=script.end).contains(&t) {
        return Err(Error::OutOfRange { t, end: script.end });
    }
    let pose = script.pose_at(t);
    let gaze = script.gaze_at(t);
    let openness = script.openness_at(t);

    let head = scene.head_px_per_deg();
    let face = scene.center() + Point::new(pose.pan * head, pose.tilt * head);
    let roll = pose.roll.to_radians();
    let half = Point::new(roll.cos(), roll.sin()) * (0.5 * scene.interocular_px());
    let left_eye = face - half;
    let right_eye = face + half;
    let gaze_px = Point::new(gaze.pan, gaze.tilt) * scene.eye_px_per_deg;

    Ok(GroundTruth {
        t,
        left_pupil: scene.clamp_point(left_eye + gaze_px),
        right_pupil: scene.clamp_point(right_eye + gaze_px),
        left_glint: scene.clamp_point(left_eye + scene.glint_offset),
        right_glint: scene.clamp_point(right_eye + scene.glint_offset),
        visible_fraction: openness,
        openness,
        pose,
        gaze,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Static background texture in gray levels: smooth shading plus a fixed
/// per-pixel grain, identical in both fields and across frames.
fn background(cfg: &SceneConfig, x: usize, y: usize) -> f64 {
    let shade = 0.5 + 0.3 * (0.11 * x as f64 + 0.7).sin() * (0.07 * y as f64 + 1.3).sin();
    let h = splitmix64(cfg.seed ^ splitmix64(((y as u64) << 32) | x as u64));
    let grain = (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    BACKGROUND_BASE + cfg.background_amplitude * (shade + 0.4 * grain)
}

/// Pixels whose centers lie within `radius` of `center`.
fn for_disk(cfg: &SceneConfig, center: Point, radius: f64, mut f: impl FnMut(usize, usize)) {
    if radius <= 0.0 {
        return;
    }
    let x0 = (center.x - radius).floor().max(0.0) as usize;
    let y0 = (center.y - radius).floor().max(0.0) as usize;
    let x1 = ((center.x + radius).ceil() as usize).min(cfg.image_width - 1);
    let y1 = ((center.y + radius).ceil() as usize).min(cfg.image_height - 1);
    let r2 = radius * radius;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - center.x;
            let dy = y as f64 - center.y;
            if dx * dx + dy * dy <= r2 {
                f(x, y);
            }
        }
    }
}

/// Noise stream for one field of one frame.
fn noise_source(cfg: &SceneConfig, frame_index: u64, field_id: u64) -> Option<(ChaCha8Rng, Normal<f64>)> {
    if cfg.noise_sigma <= 0.0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(frame_index.wrapping_mul(2).wrapping_add(field_id));
    let normal = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated finite");
    Some((rng, normal))
}

/// Nearest gray level; truncating casts keep this off the libm path.
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 255.0) + 0.5) as u8
}

/// Round half away from zero.
fn round_noise(x: f64) -> f64 {
    (x + 0.5f64.copysign(x)) as i64 as f64
}

/// Frame renderer with the static background computed once.
#[derive(Debug, Clone)]
pub struct Renderer {
    cfg: SceneConfig,
    background: Vec<f64>,
}

impl Renderer {
    pub fn new(cfg: &SceneConfig) -> Self {
        let (w, h) = (cfg.image_width, cfg.image_height);
        let mut background = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                background.push(self::background(cfg, x, y));
            }
        }
        Self {
            cfg: cfg.clone(),
            background,
        }
    }

    pub fn scene(&self) -> &SceneConfig {
        &self.cfg
    }

    /// Renders the even/odd field pair for `gt`.
    ///
    /// Noise is drawn from a ChaCha stream keyed by `(seed, frame_index,
    /// field)`, so the same inputs always give bit-identical fields while
    /// the two fields' noise stays independent.
    pub fn render(&self, gt: &GroundTruth, frame_index: u64) -> FramePair {
        let cfg = &self.cfg;
        let w = cfg.image_width;
        let frac = gt.visible_fraction.clamp(0.0, 1.0);
        let radius = cfg.pupil_radius * frac.sqrt();
        let boost = cfg.pupil_contrast * frac;
        let mut lit = Vec::new();
        for pupil in [gt.left_pupil, gt.right_pupil] {
            for_disk(cfg, pupil, radius, |x, y| lit.push(y * w + x));
        }
        lit.sort_unstable();

        let mut even_noise = noise_source(cfg, frame_index, 0);
        let mut odd_noise = noise_source(cfg, frame_index, 1);
        let draw = |src: &mut Option<(ChaCha8Rng, Normal<f64>)>| match src {
            Some((rng, normal)) => round_noise(normal.sample(rng)),
            None => 0.0,
        };
        let mut even = Vec::with_capacity(self.background.len());
        let mut odd = Vec::with_capacity(self.background.len());
        let mut next_lit = lit.iter().peekable();
        for (i, &bg) in self.background.iter().enumerate() {
            let mut e = bg;
            while next_lit.next_if_eq(&&i).is_some() {
                e += boost;
            }
            e += draw(&mut even_noise);
            even.push(quantize(e));
        }
        for &bg in &self.background {
            odd.push(quantize(bg + draw(&mut odd_noise)));
        }
        let (h, w) = (cfg.image_height, cfg.image_width);
        let mut even = GrayImage::from_raw(w, h, even).expect("dims match");
        let mut odd = GrayImage::from_raw(w, h, odd).expect("dims match");
        if frac > 0.0 {
            for glint in [gt.left_glint, gt.right_glint] {
                for_disk(cfg, glint, 1.0, |x, y| {
                    even.set(x, y, cfg.glint_intensity);
                    odd.set(x, y, cfg.glint_intensity);
                });
            }
        }
        FramePair {
            t: gt.t,
            even,
            odd,
        }
    }
}

/// One-off [`Renderer::render`].
pub fn render_frame_pair(gt: &GroundTruth, cfg: &SceneConfig, frame_index: u64) -> FramePair {
    Renderer::new(cfg).render(gt, frame_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_scene() -> SceneConfig {
        SceneConfig {
            noise_sigma: 0.0,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn constant_script_is_frontal_and_open() {
        let s = DriverScript::steady(20.0);
        for t in [0.0, 3.3, 20.0] {
            let gt = evaluate_script(&s, &quiet_scene(), t).unwrap();
            assert_eq!(gt.openness, 1.0);
            assert_eq!(gt.pose.pan, 0.0);
            assert_eq!(gt.pose.tilt, 0.0);
        }
    }

    #[test]
    fn closure_event_midpoint_is_half_open() {
        let mut s = DriverScript::steady(20.0);
        s.closures.push(ClosureEvent {
            onset: 10.0,
            closing: 0.4,
            hold: 0.5,
            reopening: 0.3,
            depth: 0.0,
        });
        let gt = evaluate_script(&s, &quiet_scene(), 10.2).unwrap();
        assert!((gt.openness - 0.5).abs() < 1e-12);
        let shut = evaluate_script(&s, &quiet_scene(), 10.6).unwrap();
        assert_eq!(shut.openness, 0.0);
    }

    #[test]
    fn openness_keyframes_interpolate() {
        let mut s = DriverScript::steady(20.0);
        s.openness = vec![
            OpennessKeyframe { t: 10.0, openness: 1.0 },
            OpennessKeyframe { t: 10.4, openness: 0.0 },
        ];
        let gt = evaluate_script(&s, &quiet_scene(), 10.2).unwrap();
        assert!((gt.openness - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pan_keyframes_interpolate() {
        let mut s = DriverScript::steady(5.0);
        s.pose = vec![
            PoseKeyframe { t: 0.0, pan: 0.0, tilt: 0.0, roll: 0.0 },
            PoseKeyframe { t: 3.0, pan: 30.0, tilt: 0.0, roll: 0.0 },
        ];
        let gt = evaluate_script(&s, &quiet_scene(), 1.0).unwrap();
        assert!((gt.pose.pan - 10.0).abs() < 1e-12);
        let held = evaluate_script(&s, &quiet_scene(), 4.0).unwrap();
        assert_eq!(held.pose.pan, 30.0);
    }

    #[test]
    fn out_of_range_time_is_rejected() {
        let s = DriverScript::steady(5.0);
        assert!(matches!(
            evaluate_script(&s, &quiet_scene(), 5.1),
            Err(Error::OutOfRange { .. })
        ));
        assert!(evaluate_script(&s, &quiet_scene(), -0.1).is_err());
    }

    #[test]
    fn train_durations_ramp() {
        let tr = ClosureTrain {
            start: 0.0,
            end: 10.0,
            period: 2.0,
            closing: 0.1,
            hold: 0.0,
            reopening: 0.1,
            closing_end: Some(0.5),
            hold_end: Some(1.0),
            reopening_end: None,
            depth: 0.0,
        };
        assert_eq!(tr.count(), 5);
        let last = tr.event(4);
        assert!((last.closing - 0.5).abs() < 1e-12);
        assert!((last.hold - 1.0).abs() < 1e-12);
        assert!((last.onset - 8.0).abs() < 1e-12);
        // mid-closing of the last event
        assert!((tr.factor(8.25) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nod_profile_shape() {
        let n = NodTrain {
            start: 1.0,
            end: 10.0,
            period: 5.0,
            down: 0.5,
            hold: 1.0,
            up: 0.5,
            tilt_depth: 30.0,
            roll_depth: 0.0,
        };
        assert_eq!(n.profile(0.5), 0.0);
        assert!((n.profile(1.25) - 0.5).abs() < 1e-12);
        assert_eq!(n.profile(2.0), 1.0);
        assert_eq!(n.profile(4.0), 0.0);
        assert_eq!(n.profile(7.0), 1.0);
        assert_eq!(n.profile(12.5), 0.0);
    }

    #[test]
    fn closed_eye_fields_are_identical() {
        let mut s = DriverScript::steady(1.0);
        s.openness = vec![OpennessKeyframe { t: 0.0, openness: 0.0 }];
        let cfg = quiet_scene();
        let gt = evaluate_script(&s, &cfg, 0.5).unwrap();
        let pair = render_frame_pair(&gt, &cfg, 7);
        assert_eq!(pair.even, pair.odd);
    }

    #[test]
    fn pupil_center_contrast_matches_config() {
        let cfg = quiet_scene();
        let gt = GroundTruth {
            t: 0.0,
            left_pupil: Point::new(40.0, 30.0),
            right_pupil: Point::new(100.0, 30.0),
            left_glint: Point::new(46.0, 26.0),
            right_glint: Point::new(106.0, 26.0),
            visible_fraction: 1.0,
            openness: 1.0,
            pose: PoseAngles::FRONTAL,
            gaze: GazeAngles::default(),
        };
        let pair = render_frame_pair(&gt, &cfg, 0);
        let diff = pair.even.get(40, 30) as i32 - pair.odd.get(40, 30) as i32;
        assert_eq!(diff, 120);
        // glints identical in both fields
        assert_eq!(pair.even.get(46, 26), 255);
        assert_eq!(pair.odd.get(46, 26), 255);
    }

    #[test]
    fn rendering_is_deterministic_and_noise_differs_between_fields() {
        let cfg = SceneConfig {
            noise_sigma: 5.0,
            ..SceneConfig::default()
        };
        let gt = evaluate_script(&DriverScript::steady(1.0), &cfg, 0.0).unwrap();
        let a = render_frame_pair(&gt, &cfg, 3);
        let b = render_frame_pair(&gt, &cfg, 3);
        assert_eq!(a, b);
        assert_ne!(a.even.as_raw()[..200], a.odd.as_raw()[..200]);
        let c = render_frame_pair(&gt, &cfg, 4);
        assert_ne!(a.odd, c.odd);
    }

    #[test]
    fn frontal_eyes_are_symmetric_about_center() {
        let cfg = quiet_scene();
        let gt = evaluate_script(&DriverScript::steady(1.0), &cfg, 0.0).unwrap();
        let mid = gt.left_pupil.midpoint(gt.right_pupil);
        assert!((mid - cfg.center()).norm() < 1e-9);
        assert!(((gt.right_pupil.x - gt.left_pupil.x) - cfg.interocular_px()).abs() < 1e-9);
    }

    #[test]
    fn script_validation_flags_bad_openness_and_order() {
        let mut s = DriverScript::steady(10.0);
        s.openness = vec![
            OpennessKeyframe { t: 2.0, openness: 1.2 },
            OpennessKeyframe { t: 1.0, openness: 0.5 },
        ];
        let err = s.validate().unwrap_err();
        assert!(err.names("openness[0].openness"));
        assert!(err.names("openness[1].t"));
    }
}
