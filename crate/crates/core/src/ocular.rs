//! Eyelid openness and the two ocular fatigue measures: PERCLOS (fraction of
//! time the lid covers at least 80 % of the pupil) and AECS (mean duration of
//! open-to-closed lid transitions).

use serde::Serialize;

use crate::pupil::{ObservationTable, PupilObservation};
use crate::{invalid, Error, Result};

/// Openness at or below this counts as closed (P80).
pub const CLOSED_THRESHOLD: f64 = 0.2;
/// A closure transition starts when openness drops through this level.
pub const OPEN_LEVEL: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EyeSample {
    pub t: f64,
    pub openness: f64,
    pub closed: bool,
}

impl EyeSample {
    pub fn new(t: f64, openness: f64) -> Self {
        let openness = openness.clamp(0.0, 1.0);
        Self {
            t,
            openness,
            closed: openness <= CLOSED_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OcularMetrics {
    pub perclos: f64,
    /// Absent when the window holds no completed closure.
    pub aecs: Option<f64>,
    pub window_span: f64,
    pub sample_count: usize,
}

/// Mean detected pupil area over the calibrated fully-open area, clamped to
/// `[0, 1]`. A frame without pupils reads as closed.
pub fn openness_from_observation(obs: &PupilObservation, calibrated_open_area: f64) -> Result<f64> {
    if calibrated_open_area <= 0.0 || !calibrated_open_area.is_finite() {
        return Err(invalid(format!(
            "calibrated open area must be positive, got {calibrated_open_area}"
        )));
    }
    let (n, sum) = obs
        .present()
        .fold((0usize, 0.0), |(n, s), m| (n + 1, s + m.area as f64));
    if n == 0 {
        return Ok(0.0);
    }
    Ok((sum / n as f64 / calibrated_open_area).clamp(0.0, 1.0))
}

pub fn perclos(window: &[EyeSample]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::EmptyWindow("perclos needs at least one sample"));
    }
    let closed = window.iter().filter(|s| s.closed).count();
    Ok(closed as f64 / window.len() as f64)
}

/// Time at which openness falls through `level` between `a` and `b`, if it
/// does (`a` above the level, `b` at or below it).
fn downward_crossing(a: &EyeSample, b: &EyeSample, level: f64) -> Option<f64> {
    if a.openness > level && b.openness <= level {
        let w = (a.openness - level) / (a.openness - b.openness);
        Some(a.t + w * (b.t - a.t))
    } else {
        None
    }
}

fn check_ordered(window: &[EyeSample]) -> Result<()> {
    match window.windows(2).position(|p| p[1].t < p[0].t) {
        Some(i) => Err(Error::Unordered { index: i + 1 }),
        None => Ok(()),
    }
}

/// Mean time from the last drop through 0.8 to the next drop through 0.2.
pub fn aecs(window: &[EyeSample]) -> Result<Option<f64>> {
    check_ordered(window)?;
    let mut armed: Option<f64> = None;
    let (mut count, mut total) = (0usize, 0.0);
    for pair in window.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if let Some(t80) = downward_crossing(a, b, OPEN_LEVEL) {
            armed = Some(t80);
        }
        if let Some(t20) = downward_crossing(a, b, CLOSED_THRESHOLD) {
            if let Some(t80) = armed.take() {
                count += 1;
                total += t20 - t80;
            }
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}

/// Samples of a time-ordered `stream` with `t` in `(t_now - span, t_now]`.
pub fn window_slice(stream: &[EyeSample], span: f64, t_now: f64) -> &[EyeSample] {
    let lo = stream.partition_point(|s| s.t <= t_now - span);
    let hi = stream.partition_point(|s| s.t <= t_now);
    &stream[lo..hi.max(lo)]
}

pub fn ocular_metrics(stream: &[EyeSample], window_span: f64, t_now: f64) -> Result<OcularMetrics> {
    if window_span <= 0.0 {
        return Err(invalid(format!("window span must be positive, got {window_span}")));
    }
    check_ordered(stream)?;
    let window = window_slice(stream, window_span, t_now);
    if window.is_empty() {
        return Err(Error::EmptyWindow("no eye samples in window"));
    }
    Ok(OcularMetrics {
        perclos: perclos(window)?,
        aecs: aecs(window)?,
        window_span,
        sample_count: window.len(),
    })
}

pub const METRICS_CSV_HEADER: &str = "t,perclos,aecs";

/// Eye samples from parsed observations. Openness comes from pupil area
/// when the table carries areas and a calibration is given, otherwise a
/// frame is open exactly when some pupil was found.
pub fn eye_samples_from_table(table: &ObservationTable, calibrated_open_area: Option<f64>) -> Result<Vec<EyeSample>> {
    table
        .rows
        .iter()
        .map(|o| {
            let openness = match calibrated_open_area {
                Some(a) if table.has_area => openness_from_observation(o, a)?,
                _ => f64::from(u8::from(o.present().next().is_some())),
            };
            Ok(EyeSample::new(o.t, openness))
        })
        .collect()
}

/// Metrics at the first sample of each `every`-second interval.
pub fn metrics_series(stream: &[EyeSample], window_span: f64, every: f64) -> Result<Vec<(f64, OcularMetrics)>> {
    if every <= 0.0 || !every.is_finite() {
        return Err(invalid(format!("cadence must be positive, got {every}")));
    }
    let mut out = Vec::new();
    let mut next = f64::NEG_INFINITY;
    for s in stream {
        if s.t >= next {
            out.push((s.t, ocular_metrics(stream, window_span, s.t)?));
            next = if next.is_finite() { next + every } else { s.t + every };
            while next <= s.t {
                next += every;
            }
        }
    }
    Ok(out)
}

/// `t,perclos,aecs` with an empty `aecs` cell when no closure completed.
pub fn metrics_csv_row(t: f64, m: &OcularMetrics) -> String {
    let aecs = m.aecs.map(|a| format!("{a:.6}")).unwrap_or_default();
    format!("{t:.6},{:.6},{aecs}", m.perclos)
}
