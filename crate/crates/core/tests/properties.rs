//! Randomized invariants across the pipeline stages.

use std::collections::{BTreeMap, BTreeSet};

use approx::assert_relative_eq;
use proptest::prelude::*;

use vigilsim::frame::{BinaryImage, FramePair, GrayImage};
use vigilsim::fusion::{fatigue_level, stage_hysteresis, FusionConfig, Stage, VigilanceMetrics};
use vigilsim::geometry::PoseAngles;
use vigilsim::ocular::{aecs, perclos, EyeSample, CLOSED_THRESHOLD};
use vigilsim::pose_gaze::{kf_predict, kf_update, pose_metrics, PoseMeasurement, PoseSample, PoseState};
use vigilsim::pupil::{connected_components, detect, difference_image, label_components, PupilConstraints};
use vigilsim::synth::{evaluate_script, ClosureEvent, DriverScript, PoseKeyframe, Renderer, SceneConfig};
use vigilsim::throttle::{
    mechanical_energy, plant_step, smc_control, PlantParams, Reference, SmcParams, StepScenario, ThrottleState,
};
use vigilsim::vehicle::{
    longitudinal_step, speed_governor, speed_target, GovernorConfig, VehicleParams, VehicleState,
};

fn held_pose(pan: f64, tilt: f64, roll: f64) -> DriverScript {
    let mut s = DriverScript::steady(1.0);
    s.pose.push(PoseKeyframe { t: 0.0, pan, tilt, roll });
    s
}

fn quiet_scene() -> SceneConfig {
    SceneConfig {
        noise_sigma: 0.0,
        ..SceneConfig::default()
    }
}

fn binary(w: usize, h: usize, bits: Vec<bool>) -> BinaryImage {
    BinaryImage::from_bits(w, h, bits).unwrap()
}

/// Breadth-first 8-connected flood fill, one label per component.
fn flood_labels(bits: &[bool], w: usize, h: usize) -> Vec<usize> {
    let mut label = vec![0usize; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if !bits[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if bits[j] && label[j] == 0 {
                        label[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    label
}

fn partition<T: Ord + Copy>(labels: &[T], background: T) -> BTreeSet<Vec<usize>> {
    let mut groups: BTreeMap<T, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l != background {
            groups.entry(l).or_default().push(i);
        }
    }
    groups.into_values().collect()
}

fn image_bits() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..16, 1usize..16).prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(any::<bool>(), w * h)))
}

fn samples(max: usize) -> impl Strategy<Value = Vec<EyeSample>> {
    prop::collection::vec(0.0f64..=1.0, 1..max).prop_map(|o| {
        o.into_iter()
            .enumerate()
            .map(|(i, v)| EyeSample::new(i as f64 / 30.0, v))
            .collect()
    })
}

fn aecs_for_transition(d: f64) -> f64 {
    let scene = quiet_scene();
    let mut script = DriverScript::steady(4.0);
    script.closures.push(ClosureEvent {
        onset: 1.0,
        closing: d,
        hold: 0.2,
        reopening: d,
        depth: 0.0,
    });
    let stream: Vec<EyeSample> = (0..=120)
        .map(|k| {
            let t = k as f64 / 30.0;
            EyeSample::new(t, evaluate_script(&script, &scene, t).unwrap().openness)
        })
        .collect();
    aecs(&stream).unwrap().expect("one closure in the window")
}

fn metrics_strategy() -> impl Strategy<Value = VigilanceMetrics> {
    (
        0.0f64..1.0,
        prop::option::of(0.0f64..2.0),
        0.0f64..20.0,
        0.0f64..1.0,
        prop::option::of(0.0f64..10.0),
    )
        .prop_map(|(perclos, aecs, tilt_rate, off_frontal_fraction, gaze_dispersion)| VigilanceMetrics {
            perclos,
            aecs,
            tilt_rate,
            off_frontal_fraction,
            gaze_dispersion,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn render_is_deterministic(seed in any::<u64>(), frame in 0u64..10_000, pan in -20.0f64..20.0) {
        let scene = SceneConfig { seed, ..SceneConfig::default() };
        let gt = evaluate_script(&held_pose(pan, 0.0, 0.0), &scene, 0.0).unwrap();
        let a = Renderer::new(&scene).render(&gt, frame);
        let b = Renderer::new(&scene).render(&gt, frame);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn closed_eyes_share_background(pan in -20.0f64..20.0, tilt in -15.0f64..15.0, amp in 0.0f64..120.0) {
        let scene = SceneConfig { background_amplitude: amp, ..quiet_scene() };
        let mut gt = evaluate_script(&held_pose(pan, tilt, 0.0), &scene, 0.0).unwrap();
        gt.openness = 0.0;
        gt.visible_fraction = 0.0;
        let pair = Renderer::new(&scene).render(&gt, 0);
        prop_assert_eq!(pair.even, pair.odd);
    }

    #[test]
    fn center_contrast_grows_with_openness(a in 0.0f64..=1.0, b in 0.0f64..=1.0, contrast in 10.0f64..300.0) {
        let scene = SceneConfig { pupil_contrast: contrast, ..quiet_scene() };
        let renderer = Renderer::new(&scene);
        let base = evaluate_script(&DriverScript::steady(1.0), &scene, 0.0).unwrap();
        let contrast_at = |f: f64| {
            let mut gt = base;
            gt.openness = f;
            gt.visible_fraction = f;
            let pair = renderer.render(&gt, 0);
            let (x, y) = (gt.left_pupil.x.round() as usize, gt.left_pupil.y.round() as usize);
            pair.even.get(x, y) as i32 - pair.odd.get(x, y) as i32
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(contrast_at(lo) <= contrast_at(hi));
    }

    #[test]
    fn bright_pupils_saturate_instead_of_wrapping(seed in any::<u64>(), sigma in 0.0f64..40.0) {
        let scene = SceneConfig { pupil_contrast: 400.0, noise_sigma: sigma, seed, ..SceneConfig::default() };
        let gt = evaluate_script(&DriverScript::steady(1.0), &scene, 0.0).unwrap();
        let pair = Renderer::new(&scene).render(&gt, 3);
        let (x, y) = (gt.left_pupil.x.round() as usize, gt.left_pupil.y.round() as usize);
        prop_assert!(pair.even.get(x, y) >= 200);
        prop_assert!(pair.even.get(x, y) >= pair.odd.get(x, y));
    }

    #[test]
    fn noise_free_centroids_within_a_pixel(pan in -25.0f64..25.0, tilt in -20.0f64..20.0, roll in -15.0f64..15.0) {
        let scene = quiet_scene();
        let gt = evaluate_script(&held_pose(pan, tilt, roll), &scene, 0.0).unwrap();
        let pair = Renderer::new(&scene).render(&gt, 0);
        let obs = detect(&pair, 40, &PupilConstraints::default()).unwrap();
        let left = obs.left.expect("left pupil");
        let right = obs.right.expect("right pupil");
        prop_assert!((left.centroid - gt.left_pupil).norm() <= 1.0);
        prop_assert!((right.centroid - gt.right_pupil).norm() <= 1.0);
    }

    #[test]
    fn detect_is_deterministic(seed in any::<u64>(), pan in -20.0f64..20.0) {
        let scene = SceneConfig { noise_sigma: 6.0, seed, ..SceneConfig::default() };
        let gt = evaluate_script(&held_pose(pan, 0.0, 0.0), &scene, 0.0).unwrap();
        let pair = Renderer::new(&scene).render(&gt, 1);
        let c = PupilConstraints::default();
        prop_assert_eq!(detect(&pair, 40, &c).unwrap(), detect(&pair.clone(), 40, &c).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn blob_areas_cover_set_pixels_disjointly((w, h, bits) in image_bits()) {
        let bin = binary(w, h, bits.clone());
        let diff = GrayImage::filled(w, h, 100);
        let blobs = connected_components(&bin, &diff).unwrap();
        prop_assert_eq!(blobs.iter().map(|b| b.area).sum::<usize>(), bin.count_set());
        let (labels, count) = label_components(&bin);
        prop_assert_eq!(count as usize, blobs.len());
        for (i, &l) in labels.iter().enumerate() {
            prop_assert_eq!(l != 0, bits[i]);
        }
    }

    #[test]
    fn labels_match_flood_fill((w, h, bits) in image_bits()) {
        let (labels, _) = label_components(&binary(w, h, bits.clone()));
        prop_assert_eq!(partition(&labels, 0), partition(&flood_labels(&bits, w, h), 0));
    }

    #[test]
    fn difference_is_zero_where_odd_dominates(
        (w, h, even, odd) in (1usize..12, 1usize..12).prop_flat_map(|(w, h)| (
            Just(w), Just(h),
            prop::collection::vec(any::<u8>(), w * h),
            prop::collection::vec(any::<u8>(), w * h),
        ))
    ) {
        let pair = FramePair::new(
            0.0,
            GrayImage::from_raw(w, h, even.clone()).unwrap(),
            GrayImage::from_raw(w, h, odd.clone()).unwrap(),
        ).unwrap();
        let diff = difference_image(&pair).unwrap();
        for i in 0..w * h {
            let d = diff.as_raw()[i];
            if odd[i] >= even[i] {
                prop_assert_eq!(d, 0);
            } else {
                prop_assert_eq!(d, even[i] - odd[i]);
            }
        }
    }

    #[test]
    fn perclos_matches_count_and_stays_in_range(window in samples(200)) {
        let p = perclos(&window).unwrap();
        let closed = window.iter().filter(|s| s.openness <= CLOSED_THRESHOLD).count();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, closed as f64 / window.len() as f64);
    }

    #[test]
    fn closing_an_open_sample_never_lowers_perclos(window in samples(200), pick in any::<prop::sample::Index>()) {
        let before = perclos(&window).unwrap();
        let mut after = window.clone();
        let i = pick.index(after.len());
        after[i] = EyeSample::new(after[i].t, 0.0);
        prop_assert!(perclos(&after).unwrap() >= before);
    }

    #[test]
    fn aecs_ignores_time_shift(window in samples(300), shift in -1000.0f64..1000.0) {
        let shifted: Vec<EyeSample> = window.iter().map(|s| EyeSample::new(s.t + shift, s.openness)).collect();
        match (aecs(&window).unwrap(), aecs(&shifted).unwrap()) {
            (None, None) => {}
            (Some(a), Some(b)) => assert_relative_eq!(a, b, epsilon = 1e-9, max_relative = 1e-9),
            (a, b) => prop_assert!(false, "presence differs: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn covariance_stays_symmetric_psd(
        steps in prop::collection::vec((0.005f64..0.2, prop::option::of((-30.0f64..30.0, 0.05f64..5.0))), 1..60),
        q in 0.0f64..500.0,
    ) {
        let mut state = PoseState::new(PoseAngles::default(), 1.0, 100.0);
        for (dt, meas) in steps {
            state = kf_predict(&state, dt, q).unwrap();
            prop_assert!(state.symmetry_residual() == 0.0);
            prop_assert!(state.min_eigenvalue() >= -1e-9);
            if let Some((angle, noise)) = meas {
                let m = PoseMeasurement { t: 0.0, angles: PoseAngles::new(angle, -angle, 0.5 * angle), noise };
                state = kf_update(&state, &m).unwrap().state;
                prop_assert!(state.symmetry_residual() == 0.0);
                prop_assert!(state.min_eigenvalue() >= -1e-9);
            }
        }
    }

    #[test]
    fn zero_noise_prediction_is_linear_motion(
        angles in prop::array::uniform3(-40.0f64..40.0),
        rates in prop::array::uniform3(-60.0f64..60.0),
        steps in prop::collection::vec(0.001f64..0.1, 1..50),
    ) {
        let mut state = PoseState::new(PoseAngles::from_array(angles), 1.0, 1.0);
        state.rates = PoseAngles::from_array(rates);
        let mut elapsed = 0.0;
        for dt in steps {
            state = kf_predict(&state, dt, 0.0).unwrap();
            elapsed += dt;
        }
        for i in 0..3 {
            assert_relative_eq!(state.angles.to_array()[i], angles[i] + rates[i] * elapsed, epsilon = 1e-9);
            prop_assert_eq!(state.rates.to_array()[i], rates[i]);
        }
    }

    #[test]
    fn pose_metrics_bounds_and_shift(
        angles in prop::collection::vec(prop::array::uniform3(-40.0f64..40.0), 1..120),
        span in 0.5f64..10.0,
        shift in -500.0f64..500.0,
    ) {
        let series = |offset: f64| -> Vec<PoseSample> {
            angles.iter().enumerate()
                .map(|(i, a)| PoseSample { t: offset + i as f64 * 0.1, angles: PoseAngles::from_array(*a) })
                .collect()
        };
        let a = pose_metrics(&series(0.0), span, 15.0, 20.0).unwrap();
        let b = pose_metrics(&series(shift), span, 15.0, 20.0).unwrap();
        prop_assert!(a.off_frontal <= span);
        prop_assert_eq!(a.tilt_rate, b.tilt_rate);
    }

    #[test]
    fn level_is_bounded_and_monotone(m in metrics_strategy(), channel in 0usize..5, bump in 0.0f64..5.0) {
        let cfg = FusionConfig::default();
        let base = fatigue_level(0.0, &m, &cfg).level;
        prop_assert!((0.0..=1.0).contains(&base));
        let mut worse = m;
        match channel {
            0 => worse.perclos += bump,
            1 => worse.aecs = Some(m.aecs.unwrap_or(0.0) + bump),
            2 => worse.tilt_rate += bump,
            3 => worse.off_frontal_fraction += bump,
            // narrower gaze reads as more fatigued
            _ => worse.gaze_dispersion = m.gaze_dispersion.map(|d| (d - bump).max(0.0)),
        }
        let level = fatigue_level(0.0, &worse, &cfg).level;
        prop_assert!((0.0..=1.0).contains(&level));
        prop_assert!(level >= base);
    }

    #[test]
    fn stage_never_flips_back_on_a_small_move(levels in prop::collection::vec(0.0f64..=1.0, 3..200)) {
        let cfg = FusionConfig::default();
        let th = cfg.thresholds();
        let mut stages = Vec::with_capacity(levels.len());
        let mut s = Stage::Alert;
        for &l in &levels {
            s = stage_hysteresis(s, l, th, cfg.hysteresis);
            stages.push(s);
        }
        for k in 2..stages.len() {
            if stages[k] == stages[k - 2] && stages[k] != stages[k - 1] {
                prop_assert!((levels[k] - levels[k - 1]).abs() > cfg.hysteresis);
            }
        }
    }

    #[test]
    fn free_valve_energy_never_grows(theta in -0.2f64..1.45, omega in -20.0f64..20.0) {
        let p = PlantParams::default();
        let mut s = ThrottleState { theta, omega };
        let mut e = mechanical_energy(&s, &p);
        for _ in 0..2000 {
            s = plant_step(&s, 0.0, &p, 0.001).unwrap();
            let next = mechanical_energy(&s, &p);
            prop_assert!(next <= e + 1e-6, "energy rose from {e} to {next}");
            e = next;
        }
    }

    #[test]
    fn control_steps_are_bounded_inside_the_layer(target in 0.05f64..1.4, start in -0.2f64..1.4) {
        let (p, c) = (PlantParams::default(), SmcParams::default());
        let r = Reference::fixed(target);
        let mut s = ThrottleState::at_rest(start);
        let mut prev: Option<f64> = None;
        for _ in 0..1500 {
            let out = smc_control(&s, &r, &c, &p);
            if out.surface.abs() <= c.boundary {
                if let Some(u) = prev {
                    prop_assert!((out.torque - u).abs() <= c.gain);
                }
                prev = Some(out.torque);
            } else {
                prev = None;
            }
            s = plant_step(&s, out.torque, &p, 0.001).unwrap();
        }
    }

    #[test]
    fn speed_stays_nonnegative_and_odometer_advances(
        v0 in 0.0f64..60.0,
        throttle in prop::collection::vec(0.0f64..1.2, 1..400),
    ) {
        let p = VehicleParams::default();
        let mut s = VehicleState { v: v0, x: 0.0 };
        for theta in throttle {
            let next = longitudinal_step(&s, theta, &p, 0.01).unwrap();
            prop_assert!(next.v >= 0.0);
            prop_assert!(next.x >= s.x);
            s = next;
        }
    }

    #[test]
    fn settled_speed_rises_with_throttle(a in 0.0f64..1.2, b in 0.0f64..1.2) {
        let p = VehicleParams::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.steady_speed(lo) <= p.steady_speed(hi));
        let settle = |theta: f64| {
            let mut s = VehicleState::default();
            for _ in 0..60_000 {
                s = longitudinal_step(&s, theta, &p, 0.01).unwrap();
            }
            s.v
        };
        prop_assert!(settle(lo) <= settle(hi));
    }

    #[test]
    fn critical_target_never_rises(v_entry in 0.0f64..60.0, times in prop::collection::vec(0.0f64..100.0, 2..50)) {
        let g = GovernorConfig::default();
        let mut times = times;
        times.sort_by(f64::total_cmp);
        let targets: Vec<f64> = times.iter().map(|&t| speed_target(Stage::Critical, t, &g, v_entry)).collect();
        prop_assert!(targets.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn step_response_converges_in_dt() {
    for target in [0.3, 0.8, 1.2] {
        let coarse = StepScenario { target, dt: 0.001, ..StepScenario::default() };
        let fine = StepScenario { dt: 0.0005, ..coarse.clone() };
        let a = coarse.run().unwrap().last().unwrap().theta;
        let b = fine.run().unwrap().last().unwrap().theta;
        assert!((a - b).abs() < 1e-4, "target {target}: {a} vs {b}");
    }
}

#[test]
fn aecs_grows_with_transition_duration() {
    let durations = [0.1, 0.15, 0.2, 0.3, 0.45, 0.6, 0.8, 1.0];
    let values: Vec<f64> = durations.iter().map(|&d| aecs_for_transition(d)).collect();
    for w in values.windows(2) {
        assert!(w[1] > w[0], "{values:?}");
    }
}

#[test]
fn alert_cruise_from_standstill_settles() {
    let (p, c) = (PlantParams::default(), SmcParams::default());
    let vp = VehicleParams::default();
    let g = GovernorConfig::default();
    let (dt, every) = (0.001, 10);
    let mut valve = ThrottleState::default();
    let mut car = VehicleState::default();
    let mut integral = 0.0;
    let mut theta_ref = 0.0;
    for k in 0..60_000 {
        if k % every == 0 {
            let out = speed_governor(integral, car.v, g.cruise_speed, &g, vp.wot_angle, dt * every as f64);
            integral = out.integral;
            theta_ref = out.theta_ref;
            car = longitudinal_step(&car, valve.theta, &vp, dt * every as f64).unwrap();
        }
        let u = smc_control(&valve, &Reference::fixed(theta_ref), &c, &p).torque;
        valve = plant_step(&valve, u, &p, dt).unwrap();
    }
    assert!((car.v - g.cruise_speed).abs() < 0.5, "speed {} after 60 s", car.v);
}

#[test]
fn perclos_weight_dominates_by_default() {
    let w = FusionConfig::default().weights.to_array();
    assert!(w[1..].iter().all(|&x| w[0] > x));
}
