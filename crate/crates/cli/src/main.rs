use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vigilsim::config::{validate_config, ConfigError};
use vigilsim::ocular::{eye_samples_from_table, metrics_csv_row, metrics_series, METRICS_CSV_HEADER};
use vigilsim::pupil::{detect, read_observations, PupilConstraints, PupilObservation};
use vigilsim::runner::{run_scenario_with, RunLog, RunOptions};
use vigilsim::scenarios::{alert_cruise, drowsy_highway};
use vigilsim::throttle::{StepScenario, TRACK_CSV_HEADER};
use vigilsim::{FramePair, GrayImage};

const SEED_VAR: &str = "VIGILSIM_SEED";

#[derive(Parser)]
#[command(name = "vigilsim", version, about = "Driver-fatigue detection and speed regulation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write run.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every frame pair as PGM under <out>/frames.
        #[arg(long)]
        dump_frames: bool,
    },
    /// Detect pupils in one even/odd field pair and print a CSV row.
    Detect {
        #[arg(long)]
        even: PathBuf,
        #[arg(long)]
        odd: PathBuf,
        #[arg(long, default_value_t = vigilsim::pupil::DEFAULT_THRESHOLD)]
        threshold: u8,
        /// Timestamp written in the row.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Append left_area,right_area columns.
        #[arg(long)]
        areas: bool,
    },
    /// Compute PERCLOS and AECS from an observation CSV.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        /// Window length, seconds.
        #[arg(long, default_value_t = 60.0)]
        window: f64,
        /// Output cadence, seconds.
        #[arg(long, default_value_t = 1.0)]
        every: f64,
        /// Fully-open pupil area; used with area columns in the input.
        #[arg(long)]
        calibrated_area: Option<f64>,
    },
    /// Print a built-in scenario config as JSON.
    Scenario {
        #[arg(value_enum)]
        name: Builtin,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run length for the alert scenario, seconds.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
    },
    /// Run a throttle servo step response and print t,theta,theta_ref,s,u.
    ThrottleStep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Alert,
    Drowsy,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<vigilsim::Error> for Failure {
    fn from(e: vigilsim::Error) -> Self {
        match e {
            vigilsim::Error::Config(c) => Failure::Validation(c.to_string()),
            vigilsim::Error::InvalidArgument(m) => Failure::Validation(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(config: &Path, out: Option<PathBuf>, dump_frames: bool) -> Result<(), Failure> {
    let mut cfg = validate_config(&read_text(config)?)?;
    if let Ok(raw) = std::env::var(SEED_VAR) {
        cfg.seed = raw
            .trim()
            .parse()
            .map_err(|_| Failure::Validation(format!("{SEED_VAR}: not an unsigned integer: {raw:?}")))?;
    }
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Failure::Validation("output_dir: give --out or set output_dir".into()))?;
    let opts = RunOptions {
        frame_dir: dump_frames.then(|| out.join("frames")),
        ..RunOptions::default()
    };
    let log = run_scenario_with(&cfg, &opts)?;
    log.write(&out)?;
    write_channel_csvs(&log, &out)?;
    let s = &log.summary;
    eprintln!(
        "{} ticks, final speed {:.3} m/s, max PERCLOS {:.3}, final stage {}",
        s.ticks,
        s.final_speed,
        s.max_perclos,
        s.stage_timeline.last().map(|c| c.stage.as_str()).unwrap_or("alert")
    );
    Ok(())
}

fn write_channel_csvs(log: &RunLog, dir: &Path) -> Result<(), Failure> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut pose = String::from("t,pan,tilt,roll,off_frontal,tilt_rate,gaze_dispersion\n");
    let mut fatigue = String::from("t,level,stage\n");
    let mut vehicle = String::from("t,v,v_target,theta,theta_ref,stage\n");
    for r in &log.records {
        pose.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            r.t,
            r.pose.pan,
            r.pose.tilt,
            r.pose.roll,
            r.metrics.off_frontal_fraction,
            r.metrics.tilt_rate,
            opt(r.metrics.gaze_dispersion)
        ));
        fatigue.push_str(&format!("{:.6},{:.6},{}\n", r.t, r.fatigue.level, r.fatigue.stage));
        vehicle.push_str(&format!(
            "{:.6},{:.9},{:.6},{:.9},{:.9},{}\n",
            r.t, r.vehicle.v, r.v_target, r.throttle.theta, r.theta_ref, r.fatigue.stage
        ));
    }
    emit(Some(&dir.join("pose.csv")), &pose)?;
    emit(Some(&dir.join("fatigue.csv")), &fatigue)?;
    emit(Some(&dir.join("vehicle.csv")), &vehicle)
}

fn detect_cmd(even: &Path, odd: &Path, threshold: u8, t: f64, areas: bool) -> Result<(), Failure> {
    let pair = FramePair::new(t, GrayImage::read_pgm(even)?, GrayImage::read_pgm(odd)?)?;
    let obs = detect(&pair, threshold, &PupilConstraints::default())?;
    let text = if areas {
        format!("{}\n{}\n", PupilObservation::CSV_HEADER_WITH_AREA, obs.csv_row_with_area())
    } else {
        format!("{}\n{}\n", PupilObservation::CSV_HEADER, obs.csv_row())
    };
    emit(None, &text)
}

fn metrics_cmd(input: &Path, window: f64, every: f64, calibrated: Option<f64>) -> Result<(), Failure> {
    if window <= 0.0 {
        return Err(Failure::Validation(format!("--window must be positive, got {window}")));
    }
    if calibrated.is_some_and(|a| a <= 0.0) {
        return Err(Failure::Validation("--calibrated-area must be positive".into()));
    }
    let file = fs::File::open(input).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
    let table = read_observations(file)?;
    let samples = eye_samples_from_table(&table, calibrated)?;
    let mut text = format!("{METRICS_CSV_HEADER}\n");
    for (t, m) in metrics_series(&samples, window, every)? {
        text.push_str(&metrics_csv_row(t, &m));
        text.push('\n');
    }
    emit(None, &text)
}

fn throttle_cmd(config: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let scenario = match config {
        Some(p) => StepScenario::from_json(&read_text(p)?)?,
        None => StepScenario::default(),
    };
    let mut text = format!("{TRACK_CSV_HEADER}\n");
    for r in scenario.run()? {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    emit(out, &text)
}

fn scenario_cmd(name: Builtin, seed: u64, duration: f64) -> Result<(), Failure> {
    if duration.is_nan() || duration <= 0.0 {
        return Err(Failure::Validation(format!("--duration must be positive, got {duration}")));
    }
    let cfg = match name {
        Builtin::Alert => alert_cruise(duration, seed),
        Builtin::Drowsy => drowsy_highway(seed),
    };
    emit(None, &format!("{}\n", cfg.to_json()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            dump_frames,
        } => simulate(&config, out, dump_frames),
        Command::Detect {
            even,
            odd,
            threshold,
            t,
            areas,
        } => detect_cmd(&even, &odd, threshold, t, areas),
        Command::Metrics {
            input,
            window,
            every,
            calibrated_area,
        } => metrics_cmd(&input, window, every, calibrated_area),
        Command::Scenario { name, seed, duration } => scenario_cmd(name, seed, duration),
        Command::ThrottleStep { config, out } => throttle_cmd(config.as_deref(), out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
