//! `quori` command line: scenario simulation plus direct access to each
//! subsystem model.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quori::arm::{self, ArmState, JointTorque, TransmissionSpec};
use quori::base::{self, ActuatorRates, BaseState, BodyTwist};
use quori::config::{self, BomTable, PlatformConfig};
use quori::head::{self, FaceTexture};
use quori::raster::Image;
use quori::scenario::{self, Scenario};
use quori::sensors::{self};
use quori::waist::{self, TorsoMassModel, WaistPose};

#[derive(Parser)]
#[command(name = "quori", version, about = "Quori platform model and scenario simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Platform configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a visitor scenario through the full simulation loop.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Base kinematics, one shot.
    Base {
        #[command(subcommand)]
        command: BaseCommand,
    },
    /// Waist torque curves.
    Waist {
        #[command(subcommand)]
        command: WaistCommand,
    },
    /// Arm transmission replay.
    Arm {
        #[command(subcommand)]
        command: ArmCommand,
    },
    /// Projected-face mapping.
    Head {
        #[command(subcommand)]
        command: HeadCommand,
    },
    /// Sensor field-of-view geometry.
    Fov {
        #[command(subcommand)]
        command: FovCommand,
    },
    /// Bill-of-materials tools.
    Bom {
        #[command(subcommand)]
        command: BomCommand,
    },
    /// Battery runtime estimates.
    Power {
        #[command(subcommand)]
        command: PowerCommand,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Simulate a scenario file and write logs and a report.
    Run {
        /// Scenario CSV (t_s,visitor_id,x_m,y_m,left_arm_deg,right_arm_deg).
        scenario: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        /// Output directory for logs and report.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum BaseCommand {
    /// Forward kinematics: wheel and turret rates to torso twist.
    Fk {
        #[arg(long)]
        omega_l: f64,
        #[arg(long)]
        omega_r: f64,
        #[arg(long, default_value_t = 0.0)]
        omega_t: f64,
        /// Turret angle (deg).
        #[arg(long, default_value_t = 0.0)]
        theta_t: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Inverse kinematics: torso twist to actuator rates.
    Ik {
        #[arg(long)]
        ux: f64,
        #[arg(long)]
        uy: f64,
        #[arg(long, default_value_t = 0.0)]
        psi_dot: f64,
        /// Turret angle (deg).
        #[arg(long, default_value_t = 0.0)]
        theta_t: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum WaistCommand {
    /// Holding-torque curves at full bow versus arm flexion, one column
    /// per counterbalance variant.
    Sweep {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum ArmCommand {
    /// Replay a torque/load trace (t_s,cmd_torque_1,cmd_torque_2,load_circ,load_abd).
    Step {
        #[arg(long)]
        trace: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum HeadCommand {
    /// Render a face texture into a projector frame.
    Render {
        /// Equirectangular face texture (binary PPM).
        #[arg(long)]
        texture: PathBuf,
        /// Yaw offset (deg).
        #[arg(long, default_value_t = 0.0)]
        yaw: f64,
        /// Pitch offset (deg).
        #[arg(long, default_value_t = 0.0)]
        pitch: f64,
        #[arg(long)]
        out: PathBuf,
        /// Optional measured radial profile (theta_deg,rho_px CSV).
        #[arg(long)]
        profile: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Ring pixel densities across the coverage band.
    Rings {
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum FovCommand {
    /// Camera frustum and floor footprint for a tilt and bow.
    Camera {
        /// Manual mount tilt (deg).
        #[arg(long, default_value_t = 0.0)]
        tilt: f64,
        /// Waist bow (deg).
        #[arg(long, default_value_t = 0.0)]
        bow: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Laser visible arcs.
    Laser {
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum BomCommand {
    /// Validate a BOM CSV and print its total.
    Check { file: PathBuf },
}

#[derive(Subcommand)]
enum PowerCommand {
    /// Untethered runtime at a constant draw.
    Estimate {
        /// Power draw (W).
        #[arg(long)]
        draw: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
}

/// Errors mapped to exit codes: 1 validation, 2 parse.
enum CliError {
    Validation(String),
    Parse(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Parse(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Parse(m) => m,
        }
    }
}

fn parse_err(e: impl std::fmt::Display) -> CliError {
    CliError::Parse(e.to_string())
}

fn validation_err(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn load_config(arg: &ConfigArg) -> Result<PlatformConfig, CliError> {
    match &arg.config {
        None => Ok(PlatformConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| validation_err(format!("cannot read {}: {e}", path.display())))?;
            PlatformConfig::load(&text).map_err(|e| match e {
                config::ConfigError::Parse { .. } => parse_err(e),
                other => validation_err(other),
            })
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| validation_err(format!("cannot read {}: {e}", path.display())))
}

/// Write through a temp file so partial output never lands at the final
/// path.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .map_err(|e| validation_err(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| validation_err(format!("cannot finalize {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sim { command } => match command {
            SimCommand::Run {
                scenario,
                duration,
                out,
                config,
            } => sim_run(&scenario, duration, &out, &config),
        },
        Command::Base { command } => match command {
            BaseCommand::Fk {
                omega_l,
                omega_r,
                omega_t,
                theta_t,
                config,
            } => {
                let cfg = load_config(&config)?;
                let state = BaseState {
                    theta_t: theta_t.to_radians(),
                    ..BaseState::default()
                };
                let rates = ActuatorRates {
                    omega_l,
                    omega_r,
                    omega_t,
                };
                let twist = base::forward_kinematics(rates, state, &cfg);
                println!("ux,uy,psi_dot");
                println!("{},{},{}", twist.ux, twist.uy, twist.psi_dot);
                Ok(())
            }
            BaseCommand::Ik {
                ux,
                uy,
                psi_dot,
                theta_t,
                config,
            } => {
                let cfg = load_config(&config)?;
                let state = BaseState {
                    theta_t: theta_t.to_radians(),
                    ..BaseState::default()
                };
                let twist = BodyTwist { ux, uy, psi_dot };
                let rates =
                    base::inverse_kinematics(twist, state, &cfg).map_err(validation_err)?;
                println!("omega_l,omega_r,omega_t");
                println!("{},{},{}", rates.omega_l, rates.omega_r, rates.omega_t);
                Ok(())
            }
        },
        Command::Waist { command } => match command {
            WaistCommand::Sweep { out, config } => waist_sweep(&out, &config),
        },
        Command::Arm { command } => match command {
            ArmCommand::Step { trace, out, config } => arm_step(&trace, out.as_deref(), &config),
        },
        Command::Head { command } => match command {
            HeadCommand::Render {
                texture,
                yaw,
                pitch,
                out,
                profile,
                config,
            } => head_render(&texture, yaw, pitch, &out, profile.as_deref(), &config),
            HeadCommand::Rings { out, config } => head_rings(out.as_deref(), &config),
        },
        Command::Fov { command } => match command {
            FovCommand::Camera { tilt, bow, config } => fov_camera(tilt, bow, &config),
            FovCommand::Laser { config } => {
                let cfg = load_config(&config)?;
                println!("start_deg,end_deg,width_deg");
                for arc in sensors::laser_coverage(&cfg.laser) {
                    println!("{},{},{}", arc.start_deg, arc.end_deg, arc.width_deg());
                }
                Ok(())
            }
        },
        Command::Bom { command } => match command {
            BomCommand::Check { file } => {
                let text = read_file(&file)?;
                let bom = BomTable::from_csv(&text).map_err(|e| match e {
                    config::BomError::Parse(_) => parse_err(e),
                    other => validation_err(other),
                })?;
                println!("lines: {}", bom.lines.len());
                println!("total_usd: {:.2}", bom.total_usd());
                Ok(())
            }
        },
        Command::Power { command } => match command {
            PowerCommand::Estimate { draw, config } => {
                let cfg = load_config(&config)?;
                let hours = config::power_runtime(&cfg.battery, draw).map_err(validation_err)?;
                println!(
                    "battery: {} V, {} Ah ({})",
                    cfg.battery.voltage, cfg.battery.capacity_ah, cfg.battery.chemistry
                );
                println!("runtime_hours: {hours:.3}");
                Ok(())
            }
        },
    }
}

fn sim_run(
    scenario_path: &Path,
    duration: f64,
    out_dir: &Path,
    config: &ConfigArg,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let text = read_file(scenario_path)?;
    let scenario = Scenario::from_csv(&text).map_err(|e| match e {
        scenario::ScenarioError::Parse { .. } => parse_err(e),
        other => validation_err(other),
    })?;
    let log = scenario::run_scenario(&scenario, &cfg, duration).map_err(validation_err)?;
    let report = scenario::emit_report(&log, &cfg);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| validation_err(format!("cannot create {}: {e}", out_dir.display())))?;
    write_atomic(&out_dir.join("command_log.csv"), log.command_log_csv().as_bytes())?;
    write_atomic(&out_dir.join("state_log.csv"), log.state_log_csv().as_bytes())?;
    write_atomic(&out_dir.join("report.txt"), report.to_string().as_bytes())?;
    write_atomic(&out_dir.join("report.csv"), report.to_csv().as_bytes())?;
    print!("{report}");
    Ok(())
}

fn waist_sweep(out: &Path, config: &ConfigArg) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let compensated = cfg.waist_model;
    let battery_only = compensated.battery_only(cfg.battery.mass_kg);
    let uncompensated = compensated.without_counterbalance();
    let theta = cfg.waist_limits.forward;
    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "phi_a_deg,uncompensated_nm,battery_only_nm,compensated_nm"
    );
    for step in 0..=360 {
        let phi = (step as f64).to_radians();
        let pose = WaistPose {
            theta_w: theta,
            phi_arm: phi,
            theta_w_ddot: 0.0,
        };
        let tau = |m: &TorsoMassModel| {
            waist::holding_torque(m, &pose, &cfg.waist_limits).expect("pose within limits")
        };
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6}",
            step,
            tau(&uncompensated),
            tau(&battery_only),
            tau(&compensated)
        );
    }
    write_atomic(out, csv.as_bytes())
}

fn arm_step(trace: &Path, out: Option<&Path>, config: &ConfigArg) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let spec = TransmissionSpec::from_config(&cfg);
    let text = read_file(trace)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut state = ArmState::default();
    let mut last_t: Option<f64> = None;
    let mut csv_out = String::from(
        "t_s,alpha1,alpha2,q_circ,q_abd,slip1,slip2,out_circ_nm,out_abd_nm,slip_events\n",
    );
    for result in reader.records() {
        let record = result.map_err(parse_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize| -> Result<f64, CliError> {
            record
                .get(idx)
                .ok_or_else(|| CliError::Parse(format!("line {line}: missing column {idx}")))?
                .parse::<f64>()
                .map_err(|_| CliError::Parse(format!("line {line}: bad number")))
        };
        let t = field(0)?;
        let cmd = (field(1)?, field(2)?);
        let load = JointTorque {
            circ: field(3)?,
            abd: field(4)?,
        };
        let dt = match last_t {
            Some(prev) if t > prev => t - prev,
            Some(_) => {
                return Err(CliError::Validation(format!(
                    "line {line}: trace timestamps must increase"
                )))
            }
            None => cfg.sim_dt,
        };
        last_t = Some(t);
        let (next, outcome) =
            arm::step_dynamics(&state, cmd, load, dt, &spec).map_err(validation_err)?;
        state = next;
        let _ = writeln!(
            csv_out,
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.4},{:.4},{}",
            t,
            state.alpha1,
            state.alpha2,
            state.q_circ(&spec),
            state.q_abd(&spec),
            state.slip1,
            state.slip2,
            outcome.joint_torque.circ,
            outcome.joint_torque.abd,
            outcome.slip_events.len(),
        );
    }
    match out {
        Some(path) => write_atomic(path, csv_out.as_bytes()),
        None => {
            print!("{csv_out}");
            Ok(())
        }
    }
}

fn head_render(
    texture: &Path,
    yaw_deg: f64,
    pitch_deg: f64,
    out: &Path,
    profile: Option<&Path>,
    config: &ConfigArg,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let mut calib = cfg.head_map.clone();
    if let Some(path) = profile {
        let text = read_file(path)?;
        calib = calib.with_profile_csv(&text).map_err(parse_err)?;
    }
    let bytes = std::fs::read(texture)
        .map_err(|e| validation_err(format!("cannot read {}: {e}", texture.display())))?;
    let image = Image::from_ppm(&bytes).map_err(parse_err)?;
    let face = FaceTexture {
        image,
        yaw_offset: yaw_deg.to_radians(),
        pitch_offset: pitch_deg.to_radians(),
    };
    let frame = head::render_face(&face, &calib);
    write_atomic(out, &frame.to_ppm())
}

fn head_rings(out: Option<&Path>, config: &ConfigArg) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let calib = &cfg.head_map;
    let mut csv = String::from("theta_deg,ring_pixels\n");
    let top = calib.theta_top.to_degrees().ceil() as i64;
    let max = calib.theta_max.to_degrees().floor() as i64;
    for deg in top..=max {
        let n = head::ring_pixel_count((deg as f64).to_radians(), calib)
            .map_err(validation_err)?;
        let _ = writeln!(csv, "{deg},{n}");
    }
    match out {
        Some(path) => write_atomic(path, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn fov_camera(tilt_deg: f64, bow_deg: f64, config: &ConfigArg) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let mut mount = cfg.camera;
    mount.manual_tilt = tilt_deg.to_radians();
    if mount.manual_tilt.abs() > mount.tilt_range + 1e-12 {
        return Err(CliError::Validation(format!(
            "tilt {tilt_deg} deg outside the +/-{:.1} deg mount range",
            mount.tilt_range.to_degrees()
        )));
    }
    let frustum = sensors::camera_frustum(&mount, bow_deg.to_radians(), &cfg.waist_limits)
        .map_err(validation_err)?;
    println!("pitch_deg,h_half_deg,v_half_deg");
    println!(
        "{},{},{}",
        frustum.pitch.to_degrees(),
        frustum.h_half.to_degrees(),
        frustum.v_half.to_degrees()
    );
    match frustum.floor_footprint {
        Some(quad) => {
            println!("footprint_x_m,footprint_y_m");
            for (x, y) in quad {
                println!("{x},{y}");
            }
        }
        None => println!("footprint: open (frustum reaches the horizon)"),
    }
    Ok(())
}
