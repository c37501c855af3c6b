//! Built-in scenarios used by the examples, the CLI and the tests.

use crate::config::{validate_config, ScenarioConfig};
use crate::synth::{ClosureTrain, DriverScript, NodTrain, ScanTrain};

/// Start of the drowsy phase in [`drowsy_highway`], seconds.
pub const DROWSY_ONSET: f64 = 30.0;

fn alert_blinks(start: f64, end: f64) -> ClosureTrain {
    ClosureTrain {
        start,
        end,
        period: 5.0,
        closing: 0.08,
        hold: 0.04,
        reopening: 0.08,
        closing_end: None,
        hold_end: None,
        reopening_end: None,
        depth: 0.0,
    }
}

fn mirror_checks(start: f64, end: f64) -> ScanTrain {
    ScanTrain {
        start,
        end,
        period: 6.0,
        pan_amplitude: 12.0,
        tilt_amplitude: 3.0,
    }
}

fn base(duration: f64, seed: u64, driver: DriverScript) -> ScenarioConfig {
    let mut cfg = validate_config(&format!(
        r#"{{ "driver": {{ "end": {duration} }}, "duration": {duration} }}"#
    ))
    .expect("base scenario is valid");
    cfg.driver = driver;
    cfg.seed = seed;
    cfg
}

/// Attentive driver, car starting from standstill under cruise control.
pub fn alert_cruise(duration: f64, seed: u64) -> ScenarioConfig {
    let mut driver = DriverScript::steady(duration);
    driver.closure_trains.push(alert_blinks(2.0, duration));
    driver.scans.push(mirror_checks(0.0, duration));
    base(duration, seed, driver)
}

/// Alert cruise at highway speed, then from [`DROWSY_ONSET`] closures that
/// lengthen over the run, recurring head nods and a fixed stare.
pub fn drowsy_highway(seed: u64) -> ScenarioConfig {
    let duration = 180.0;
    let mut driver = DriverScript::steady(duration);
    driver.closure_trains.push(alert_blinks(2.0, DROWSY_ONSET));
    driver.scans.push(mirror_checks(0.0, DROWSY_ONSET));
    driver.closure_trains.push(ClosureTrain {
        start: DROWSY_ONSET,
        end: duration,
        period: 4.0,
        closing: 0.3,
        hold: 0.8,
        reopening: 0.3,
        closing_end: Some(0.6),
        hold_end: Some(3.0),
        reopening_end: Some(0.5),
        depth: 0.0,
    });
    driver.nods.push(NodTrain {
        start: DROWSY_ONSET + 5.0,
        end: duration,
        period: 12.0,
        down: 0.8,
        hold: 1.0,
        up: 0.6,
        tilt_depth: 25.0,
        roll_depth: 0.0,
    });
    let mut cfg = base(duration, seed, driver);
    cfg.initial_speed = cfg.governor.cruise_speed;
    cfg
}
