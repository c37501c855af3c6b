//! Electronic throttle: motor-driven valve with a discontinuous return spring,
//! positioned by a boundary-layer sliding-mode servo.
//!
//! The motor angle is the controlled variable and the limp-home angle, where
//! the two opposing springs balance, is the origin. The plant is
//!
//! ```text
//! J·ω̇ = u − b·ω − k_s·θ − T_pre·sgn(θ)
//! ```

use serde::{Deserialize, Serialize};

use crate::config::{join, ConfigError, Issues, Validate};
use crate::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// kg·m², reflected to the motor axis
    pub inertia: f64,
    /// N·m·s/rad
    pub damping: f64,
    /// N·m/rad
    pub spring_stiffness: f64,
    /// N·m, always pulling toward the limp-home angle
    pub spring_preload: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// N·m
    pub torque_limit: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia: 0.01,
            damping: 0.05,
            spring_stiffness: 0.5,
            spring_preload: 0.1,
            theta_min: -0.2,
            theta_max: 1.45,
            torque_limit: 3.0,
        }
    }
}

impl Validate for PlantParams {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        issues.check(self.inertia > 0.0, p("inertia"), "must be > 0");
        issues.check(self.damping >= 0.0, p("damping"), "must be >= 0");
        issues.check(self.spring_stiffness >= 0.0, p("spring_stiffness"), "must be >= 0");
        issues.check(self.spring_preload >= 0.0, p("spring_preload"), "must be >= 0");
        issues.check(self.theta_min < 0.0, p("theta_min"), "must be < 0");
        issues.check(self.theta_max > 0.0, p("theta_max"), "must be > 0");
        issues.check(self.torque_limit > 0.0, p("torque_limit"), "must be > 0");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThrottleState {
    /// Motor angle, rad.
    pub theta: f64,
    /// rad/s
    pub omega: f64,
}

impl ThrottleState {
    pub fn at_rest(theta: f64) -> Self {
        Self { theta, omega: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcParams {
    /// Sliding-surface slope, 1/s.
    pub lambda: f64,
    /// Switching gain, N·m.
    pub gain: f64,
    /// Boundary-layer half-width in surface units (rad/s).
    pub boundary: f64,
}

impl Default for SmcParams {
    fn default() -> Self {
        Self {
            lambda: 20.0,
            gain: 1.5,
            boundary: 0.5,
        }
    }
}

impl Validate for SmcParams {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        issues.check(self.lambda > 0.0, p("lambda"), "must be > 0");
        issues.check(self.gain > 0.0, p("gain"), "must be > 0");
        issues.check(self.boundary > 0.0, p("boundary"), "must be > 0");
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `k_s·θ + T_pre·sgn(θ)` with `sgn(0) = 0`.
pub fn spring_torque(theta: f64, p: &PlantParams) -> f64 {
    p.spring_stiffness * theta + p.spring_preload * sgn(theta)
}

/// `½Jω² + ½k_sθ² + T_pre|θ|`
pub fn mechanical_energy(s: &ThrottleState, p: &PlantParams) -> f64 {
    0.5 * p.inertia * s.omega * s.omega
        + 0.5 * p.spring_stiffness * s.theta * s.theta
        + p.spring_preload * s.theta.abs()
}

/// Smooth dynamics on one side of the limp-home angle; `side` fixes the
/// preload direction.
fn derivative(s: ThrottleState, u: f64, side: f64, p: &PlantParams) -> (f64, f64) {
    let accel = (u - p.damping * s.omega - p.spring_stiffness * s.theta - p.spring_preload * side)
        / p.inertia;
    (s.omega, accel)
}

fn rk4(s: ThrottleState, u: f64, side: f64, p: &PlantParams, h: f64) -> ThrottleState {
    let shift = |s: ThrottleState, d: (f64, f64), k: f64| ThrottleState {
        theta: s.theta + k * d.0,
        omega: s.omega + k * d.1,
    };
    let k1 = derivative(s, u, side, p);
    let k2 = derivative(shift(s, k1, h / 2.0), u, side, p);
    let k3 = derivative(shift(s, k2, h / 2.0), u, side, p);
    let k4 = derivative(shift(s, k3, h), u, side, p);
    ThrottleState {
        theta: s.theta + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        omega: s.omega + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

const MAX_SEGMENTS: usize = 16;
const REST_SPEED: f64 = 1e-9;

/// Preload direction for the next smooth segment, or `None` when the valve
/// rests at the limp-home angle and the preload holds it there.
fn branch_side(s: ThrottleState, u: f64, p: &PlantParams) -> Option<f64> {
    if s.theta != 0.0 {
        Some(sgn(s.theta))
    } else if s.omega.abs() > REST_SPEED {
        Some(sgn(s.omega))
    } else if u.abs() > p.spring_preload {
        Some(sgn(u))
    } else {
        None
    }
}

/// Advances the plant by `dt` under constant torque `u` (clamped to the
/// torque limit) with fixed-step RK4.
///
/// A step that would carry the valve through the limp-home angle is split at
/// the crossing, located by bisection, so each RK4 segment integrates smooth
/// dynamics. At the angle limits the valve stops dead.
pub fn plant_step(s: &ThrottleState, u: f64, p: &PlantParams, dt: f64) -> Result<ThrottleState> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(invalid(format!("plant step must be positive, got {dt}")));
    }
    let u = u.clamp(-p.torque_limit, p.torque_limit);
    let mut state = *s;
    let mut remaining = dt;

    for _ in 0..MAX_SEGMENTS {
        let Some(side) = branch_side(state, u, p) else {
            state = ThrottleState::at_rest(0.0);
            break;
        };
        let trial = rk4(state, u, side, p, remaining);
        if side * trial.theta >= 0.0 {
            state = trial;
            break;
        }
        // bracket [lo, hi] around the crossing of θ = 0
        let (mut lo, mut hi) = (0.0, remaining);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if side * rk4(state, u, side, p, mid).theta >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = hi;
        let mut at_zero = rk4(state, u, side, p, tau);
        at_zero.theta = 0.0;
        if at_zero.omega.abs() <= REST_SPEED {
            at_zero.omega = 0.0;
        }
        state = at_zero;
        remaining -= tau;
        if remaining <= 0.0 {
            break;
        }
    }

    if state.theta > p.theta_max {
        state.theta = p.theta_max;
        state.omega = state.omega.min(0.0);
    } else if state.theta < p.theta_min {
        state.theta = p.theta_min;
        state.omega = state.omega.max(0.0);
    }
    Ok(state)
}

/// Desired motor angle with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Reference {
    pub theta: f64,
    pub rate: f64,
    pub accel: f64,
}

impl Reference {
    pub fn fixed(theta: f64) -> Self {
        Self {
            theta,
            rate: 0.0,
            accel: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmcOutput {
    /// N·m, clamped to the torque limit.
    pub torque: f64,
    /// Sliding variable `ė + λe`.
    pub surface: f64,
}

fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Sliding-mode servo law using `model` for the equivalent control.
pub fn smc_control(s: &ThrottleState, r: &Reference, c: &SmcParams, model: &PlantParams) -> SmcOutput {
    let e = s.theta - r.theta;
    let e_dot = s.omega - r.rate;
    let surface = e_dot + c.lambda * e;
    let u_eq = model.inertia * (r.accel - c.lambda * e_dot)
        + model.damping * s.omega
        + spring_torque(s.theta, model);
    let torque = (u_eq - c.gain * sat(surface / c.boundary))
        .clamp(-model.torque_limit, model.torque_limit);
    SmcOutput { torque, surface }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackRecord {
    pub t: f64,
    pub theta: f64,
    pub theta_ref: f64,
    pub s: f64,
    pub u: f64,
}

pub const TRACK_CSV_HEADER: &str = "t,theta,theta_ref,s,u";

impl TrackRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.4},{:.9},{:.9},{:.9},{:.9}",
            self.t, self.theta, self.theta_ref, self.s, self.u
        )
    }
}

/// Closed-loop servo run. The controller believes `model`; the valve obeys
/// `plant`. One record per step, including the initial and final instants.
pub fn track(
    plant: &PlantParams,
    model: &PlantParams,
    c: &SmcParams,
    reference: impl Fn(f64) -> Reference,
    initial: ThrottleState,
    dt: f64,
    duration: f64,
) -> Result<Vec<TrackRecord>> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(invalid(format!("servo step must be positive, got {dt}")));
    }
    let steps = (duration / dt).round() as usize;
    let mut state = initial;
    let mut log = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let r = reference(t);
        let out = smc_control(&state, &r, c, model);
        log.push(TrackRecord {
            t,
            theta: state.theta,
            theta_ref: r.theta,
            s: out.surface,
            u: out.torque,
        });
        if k < steps {
            state = plant_step(&state, out.torque, plant, dt)?;
        }
    }
    Ok(log)
}

/// Plant with inertia and damping scaled, as unmodeled by the controller.
pub fn perturbed(p: &PlantParams, inertia_scale: f64, damping_scale: f64) -> PlantParams {
    PlantParams {
        inertia: p.inertia * inertia_scale,
        damping: p.damping * damping_scale,
        ..*p
    }
}

/// Step-response run of the servo alone, as read by the `throttle-step`
/// command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepScenario {
    /// Parameters the controller is designed for.
    pub plant: PlantParams,
    pub smc: SmcParams,
    pub initial: f64,
    pub target: f64,
    pub dt: f64,
    pub duration: f64,
    /// True inertia over modeled inertia.
    pub inertia_scale: f64,
    /// True damping over modeled damping.
    pub damping_scale: f64,
}

impl Default for StepScenario {
    fn default() -> Self {
        Self {
            plant: PlantParams::default(),
            smc: SmcParams::default(),
            initial: 0.0,
            target: 1.0,
            dt: 0.001,
            duration: 1.0,
            inertia_scale: 1.0,
            damping_scale: 1.0,
        }
    }
}

impl Validate for StepScenario {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        self.plant.validate_into(&p("plant"), issues);
        self.smc.validate_into(&p("smc"), issues);
        for (name, v) in [("initial", self.initial), ("target", self.target)] {
            issues.check(
                (self.plant.theta_min..=self.plant.theta_max).contains(&v),
                p(name),
                "must lie within plant.theta_min..plant.theta_max",
            );
        }
        issues.check(self.dt > 0.0, p("dt"), "must be > 0");
        issues.check(self.duration > 0.0, p("duration"), "must be > 0");
        issues.check(self.inertia_scale > 0.0, p("inertia_scale"), "must be > 0");
        issues.check(self.damping_scale > 0.0, p("damping_scale"), "must be > 0");
    }
}

impl StepScenario {
    /// Parses and checks a JSON step scenario; omitted fields take defaults.
    pub fn from_json(raw: &str) -> std::result::Result<Self, ConfigError> {
        let sc: Self = serde_json::from_str(raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn run(&self) -> Result<Vec<TrackRecord>> {
        let truth = perturbed(&self.plant, self.inertia_scale, self.damping_scale);
        let target = self.target;
        track(
            &truth,
            &self.plant,
            &self.smc,
            move |_| Reference::fixed(target),
            ThrottleState::at_rest(self.initial),
            self.dt,
            self.duration,
        )
    }
}
