//! Longitudinal vehicle dynamics and the outer speed loop that turns a
//! fatigue stage into a throttle-angle reference.

use serde::{Deserialize, Serialize};

use crate::config::{join, Issues, Validate};
use crate::fusion::Stage;
use crate::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// N at wide-open throttle
    pub max_drive_force: f64,
    /// N·s²/m²
    pub aero_coeff: f64,
    pub rolling_coeff: f64,
    pub gravity: f64,
    /// Motor angle at wide-open throttle, rad.
    pub wot_angle: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1500.0,
            max_drive_force: 4000.0,
            aero_coeff: 0.8,
            rolling_coeff: 0.012,
            gravity: 9.81,
            wot_angle: 1.2,
        }
    }
}

impl Validate for VehicleParams {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        for (name, v) in [
            ("mass", self.mass),
            ("max_drive_force", self.max_drive_force),
            ("aero_coeff", self.aero_coeff),
            ("rolling_coeff", self.rolling_coeff),
            ("gravity", self.gravity),
            ("wot_angle", self.wot_angle),
        ] {
            issues.check(v > 0.0 && v.is_finite(), p(name), "must be > 0");
        }
    }
}

impl VehicleParams {
    fn rolling_force(&self) -> f64 {
        self.rolling_coeff * self.mass * self.gravity
    }

    pub fn drive_force(&self, theta: f64) -> f64 {
        self.max_drive_force * (theta / self.wot_angle).clamp(0.0, 1.0)
    }

    /// Speed at which drag balances the drive force at `theta` (0 when the
    /// drive cannot overcome rolling resistance).
    pub fn steady_speed(&self, theta: f64) -> f64 {
        let surplus = self.drive_force(theta) - self.rolling_force();
        if surplus <= 0.0 {
            0.0
        } else {
            (surplus / self.aero_coeff).sqrt()
        }
    }

    /// Throttle angle that holds `v` in steady state, capped at wide-open.
    pub fn steady_throttle(&self, v: f64) -> f64 {
        let force = self.aero_coeff * v * v + self.rolling_force();
        (self.wot_angle * force / self.max_drive_force).min(self.wot_angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct VehicleState {
    /// m/s
    pub v: f64,
    /// Odometer, m.
    pub x: f64,
}

/// One forward-Euler step of `m·v̇ = F(θ) − c_a·v² − c_r·m·g`. Speed never
/// goes negative: rolling resistance cannot push a stopped car backward.
pub fn longitudinal_step(s: &VehicleState, theta: f64, p: &VehicleParams, dt: f64) -> Result<VehicleState> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(invalid(format!("vehicle step must be positive, got {dt}")));
    }
    let accel = (p.drive_force(theta) - p.aero_coeff * s.v * s.v - p.rolling_force()) / p.mass;
    let v = (s.v + accel * dt).max(0.0);
    Ok(VehicleState {
        v,
        x: s.x + v * dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GovernorConfig {
    /// m/s
    pub cruise_speed: f64,
    /// Fraction of cruise speed held while the driver is at Warning.
    pub warning_factor: f64,
    /// Ramp rate of the Critical speed target, m/s².
    pub critical_decel: f64,
    /// Lowest speed the Critical ramp commands.
    pub critical_floor: f64,
    /// rad per m/s
    pub kp: f64,
    /// rad per m
    pub ki: f64,
    /// Bound on the integral contribution `|ki·∫e|`, rad.
    pub integral_clamp: f64,
}

impl Default for GovernorConfig {
    fn default() -> Self {
        Self {
            cruise_speed: 27.8,
            warning_factor: 0.7,
            critical_decel: 2.0,
            critical_floor: 0.0,
            kp: 0.1,
            ki: 0.02,
            integral_clamp: 1.2,
        }
    }
}

impl Validate for GovernorConfig {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        issues.check(self.cruise_speed > 0.0, p("cruise_speed"), "must be > 0");
        issues.check(
            self.warning_factor > 0.0 && self.warning_factor < 1.0,
            p("warning_factor"),
            "must be within (0, 1)",
        );
        issues.check(self.critical_decel > 0.0, p("critical_decel"), "must be > 0");
        issues.check(self.critical_floor >= 0.0, p("critical_floor"), "must be >= 0");
        issues.check(self.kp >= 0.0, p("kp"), "must be >= 0");
        issues.check(self.ki >= 0.0, p("ki"), "must be >= 0");
        issues.check(self.integral_clamp >= 0.0, p("integral_clamp"), "must be >= 0");
    }
}

/// Alert cruises, Warning slows to a fraction of cruise, Critical ramps down
/// from the speed held when the stage was entered.
pub fn speed_target(stage: Stage, t_since_stage: f64, g: &GovernorConfig, v_at_entry: f64) -> f64 {
    match stage {
        Stage::Alert => g.cruise_speed,
        Stage::Warning => g.warning_factor * g.cruise_speed,
        Stage::Critical => {
            (v_at_entry - g.critical_decel * t_since_stage.max(0.0)).max(g.critical_floor)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GovernorOutput {
    pub theta_ref: f64,
    /// Updated integral of speed error, m.
    pub integral: f64,
}

/// PI speed law clamped to `[0, wot_angle]`.
///
/// Integration freezes while the output is saturated open and the error
/// pushes further open. While the throttle is held shut the integral is
/// capped at zero, so the throttle stays shut until the speed drops below
/// target.
pub fn speed_governor(
    integral: f64,
    v: f64,
    v_target: f64,
    g: &GovernorConfig,
    wot_angle: f64,
    dt: f64,
) -> GovernorOutput {
    let e = v_target - v;
    if g.ki <= 0.0 {
        return GovernorOutput {
            theta_ref: (g.kp * e).clamp(0.0, wot_angle),
            integral: 0.0,
        };
    }
    let limit = g.integral_clamp / g.ki;
    let candidate = (integral + e * dt).clamp(-limit, limit);
    let raw = g.kp * e + g.ki * candidate;
    if raw > wot_angle {
        let i = if e > 0.0 { integral } else { candidate };
        return GovernorOutput {
            theta_ref: wot_angle,
            integral: i,
        };
    }
    if raw < 0.0 {
        let i = if e < 0.0 { integral } else { candidate };
        return GovernorOutput {
            theta_ref: 0.0,
            integral: i.min(0.0),
        };
    }
    GovernorOutput {
        theta_ref: raw,
        integral: candidate,
    }
}
