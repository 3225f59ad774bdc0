//! Deterministic fixed-timestep scenario simulation.
//!
//! A scenario file scripts visitors moving through the world; the loop
//! rebuilds what the robot would perceive each tick, steps the behavior
//! engine, integrates turret, waist and arm motion under the platform
//! rate limits, and records everything. Identical inputs produce
//! byte-identical logs: fixed step, fixed float formatting, no hidden
//! state.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::base::{self, ActuatorRates, BaseState};
use crate::behavior::{self, BehaviorState, CommandFrame, Mode, PerceptionFrame, Visitor};
use crate::config::PlatformConfig;
use crate::sensors::point_in_camera_fov;
use crate::waist::{self, MAX_WAIST_ACCEL, MAX_WAIST_RATE};

/// Waist motor gauge budget the tuned platform stays under (Nm).
pub const WAIST_GAUGE_BOUND: f64 = 3.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error on line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("scenario duration must be positive, got {0}")]
    BadDuration(f64),
    #[error(transparent)]
    Behavior(#[from] behavior::BehaviorError),
    #[error("internal limit breach at t = {t:.3}: {report}")]
    LimitBreach { t: f64, report: String },
}

/// One scripted sample of a visitor's trajectory (world frame).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    t: f64,
    x: f64,
    y: f64,
    left_flexion: f64,
    right_flexion: f64,
}

/// A parsed scenario: per-visitor piecewise-linear trajectories.
///
/// A visitor exists from their first to their last sample; position and
/// arm flexion interpolate linearly between samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scenario {
    tracks: BTreeMap<u64, Vec<Sample>>,
}

impl Scenario {
    /// Parse CSV with header
    /// `t_s,visitor_id,x_m,y_m,left_arm_deg,right_arm_deg`.
    pub fn from_csv(text: &str) -> Result<Self, ScenarioError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut tracks: BTreeMap<u64, Vec<Sample>> = BTreeMap::new();
        for result in reader.records() {
            let record = result.map_err(|e| ScenarioError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let parse_field = |idx: usize, name: &str| -> Result<f64, ScenarioError> {
                record
                    .get(idx)
                    .ok_or_else(|| ScenarioError::Parse {
                        line,
                        msg: format!("missing column `{name}`"),
                    })?
                    .parse::<f64>()
                    .map_err(|_| ScenarioError::Parse {
                        line,
                        msg: format!("bad number in `{name}`: `{}`", record.get(idx).unwrap()),
                    })
            };
            let t = parse_field(0, "t_s")?;
            let id = parse_field(1, "visitor_id")? as u64;
            let sample = Sample {
                t,
                x: parse_field(2, "x_m")?,
                y: parse_field(3, "y_m")?,
                left_flexion: parse_field(4, "left_arm_deg")?.to_radians(),
                right_flexion: parse_field(5, "right_arm_deg")?.to_radians(),
            };
            tracks.entry(id).or_default().push(sample);
        }
        for samples in tracks.values_mut() {
            samples.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        }
        Ok(Self { tracks })
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Visitors present at time `t`, world frame, ordered by id.
    fn visitors_at(&self, t: f64) -> Vec<(u64, Sample)> {
        let mut out = Vec::new();
        for (&id, samples) in &self.tracks {
            let first = samples.first().unwrap();
            let last = samples.last().unwrap();
            if t < first.t || t > last.t {
                continue;
            }
            let pos = samples.partition_point(|s| s.t <= t);
            let interpolated = if pos == 0 {
                *first
            } else if pos >= samples.len() {
                *last
            } else {
                let a = samples[pos - 1];
                let b = samples[pos];
                let u = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
                Sample {
                    t,
                    x: a.x + u * (b.x - a.x),
                    y: a.y + u * (b.y - a.y),
                    left_flexion: a.left_flexion + u * (b.left_flexion - a.left_flexion),
                    right_flexion: a.right_flexion + u * (b.right_flexion - a.right_flexion),
                }
            };
            out.push((id, interpolated));
        }
        out
    }
}

/// One recorded simulation step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogStep {
    pub t: f64,
    pub base: BaseState,
    pub waist_angle: f64,
    pub waist_rate: f64,
    /// Actual joint angles (q_circ, q_abd) per arm.
    pub arm_left: (f64, f64),
    pub arm_right: (f64, f64),
    pub mode: Mode,
    pub command: CommandFrame,
    /// Waist motor torque readout (Nm).
    pub waist_torque: f64,
}

/// Full run record with provenance header.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config_hash: String,
    pub seed: u64,
    pub dt: f64,
    pub steps: Vec<LogStep>,
}

/// Format a float with nine significant digits, canonicalizing zero.
fn fmt9(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

impl RunLog {
    /// The external command log: one row per step.
    pub fn command_log_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config_hash={}", self.config_hash);
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(
            out,
            "t_s,mode,turret_rate,waist_target,q_circ_L,q_abd_L,q_circ_R,q_abd_R,face_tag,clamped"
        );
        for step in &self.steps {
            let c = &step.command;
            let _ = writeln!(
                out,
                "{:.3},{},{},{},{},{},{},{},{},{}",
                step.t,
                step.mode.as_str(),
                fmt9(c.turret_rate),
                fmt9(c.waist_target),
                fmt9(c.left_arm.q_circ),
                fmt9(c.left_arm.q_abd),
                fmt9(c.right_arm.q_circ),
                fmt9(c.right_arm.q_abd),
                c.face_animation.as_str(),
                u8::from(c.clamped),
            );
        }
        out
    }

    /// The full state log, one row per step.
    pub fn state_log_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config_hash={}", self.config_hash);
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(
            out,
            "t_s,x,y,phi,theta_t,waist_angle,waist_rate,q_circ_L,q_abd_L,q_circ_R,q_abd_R,mode,waist_torque_nm"
        );
        for step in &self.steps {
            let _ = writeln!(
                out,
                "{:.3},{},{},{},{},{},{},{},{},{},{},{},{}",
                step.t,
                fmt9(step.base.x),
                fmt9(step.base.y),
                fmt9(step.base.phi),
                fmt9(step.base.theta_t),
                fmt9(step.waist_angle),
                fmt9(step.waist_rate),
                fmt9(step.arm_left.0),
                fmt9(step.arm_left.1),
                fmt9(step.arm_right.0),
                fmt9(step.arm_right.1),
                step.mode.as_str(),
                fmt9(step.waist_torque),
            );
        }
        out
    }
}

/// Rate- and acceleration-limited servo toward a target. Returns the new
/// position, new rate, and the acceleration actually applied.
fn servo_step(
    pos: f64,
    rate: f64,
    target: f64,
    v_max: f64,
    a_max: f64,
    dt: f64,
) -> (f64, f64, f64) {
    let err = target - pos;
    // Velocity that can still be braked to zero at the target.
    let v_des = err.signum() * (2.0 * a_max * err.abs()).sqrt().min(v_max);
    let dv = (v_des - rate).clamp(-a_max * dt, a_max * dt);
    let mut new_rate = rate + dv;
    let mut new_pos = pos + new_rate * dt;
    // Snap when the step crosses the target at crawl speed.
    if (target - new_pos) * err <= 0.0 && new_rate.abs() <= a_max * dt * 2.0 {
        new_pos = target;
        new_rate = 0.0;
    }
    ((new_pos), new_rate, dv / dt)
}

/// Rate-limited first-order move toward a target.
fn slew(pos: f64, target: f64, v_max: f64, dt: f64) -> f64 {
    pos + (target - pos).clamp(-v_max * dt, v_max * dt)
}

/// Run a scenario for `duration` seconds at the configured fixed step.
pub fn run_scenario(
    scenario: &Scenario,
    config: &PlatformConfig,
    duration: f64,
) -> Result<RunLog, ScenarioError> {
    if !(duration > 0.0) {
        return Err(ScenarioError::BadDuration(duration));
    }
    let dt = config.sim_dt;
    let steps = (duration / dt).round() as usize;
    let joint_speed_max = config.arm_motor_speed_max_rps * 2.0 * std::f64::consts::PI
        / config.arm_gear_ratio;

    let mut base = BaseState::default();
    let mut waist_angle = 0.0f64;
    let mut waist_rate = 0.0f64;
    let mut left = (0.0f64, 0.0f64);
    let mut right = (0.0f64, 0.0f64);
    let mut engine = BehaviorState::new(0.0);
    let mut log = RunLog {
        config_hash: config.hash(),
        seed: 0,
        dt,
        steps: Vec::with_capacity(steps),
    };

    for k in 1..=steps {
        let t = k as f64 * dt;

        // What the robot perceives: scripted visitors in the torso frame.
        let psi = base.torso_heading();
        let (sin_psi, cos_psi) = psi.sin_cos();
        let visitors: Vec<Visitor> = scenario
            .visitors_at(t)
            .into_iter()
            .map(|(id, s)| {
                let rel_x = s.x - base.x;
                let rel_y = s.y - base.y;
                let local = (
                    rel_x * cos_psi + rel_y * sin_psi,
                    -rel_x * sin_psi + rel_y * cos_psi,
                );
                let in_fov = point_in_camera_fov(
                    [local.0, local.1, config.behavior.visitor_chest_height],
                    &config.camera,
                    waist_angle,
                );
                Visitor {
                    id,
                    position: local,
                    left_flexion: s.left_flexion,
                    right_flexion: s.right_flexion,
                    in_camera_fov: in_fov,
                }
            })
            .collect();
        let frame = PerceptionFrame {
            timestamp: t,
            visitors,
        };

        let (next_engine, cmd) = behavior::step(&engine, &frame, dt, config)?;
        engine = next_engine;

        // The engine must never emit an out-of-limit command; a breach
        // here is an internal assertion failure, not a clamp.
        let rates = ActuatorRates {
            omega_l: 0.0,
            omega_r: 0.0,
            omega_t: cmd.turret_rate,
        };
        let report = base::check_limits(rates, config);
        if !report.feasible() {
            return Err(ScenarioError::LimitBreach {
                t,
                report: report.to_string(),
            });
        }
        if !config.waist_limits.contains(cmd.waist_target)
            || cmd.left_arm.q_abd.abs() > config.arm_abduction_limit
            || cmd.right_arm.q_abd.abs() > config.arm_abduction_limit
        {
            return Err(ScenarioError::LimitBreach {
                t,
                report: "command outside joint limits".to_string(),
            });
        }

        // Actuate. The museum deployment fixes the platform: wheels stay
        // still and only the turret rotates.
        base = base::integrate_odometry(base, rates, dt, config);
        let (w_pos, w_rate, w_accel) = servo_step(
            waist_angle,
            waist_rate,
            cmd.waist_target,
            MAX_WAIST_RATE,
            MAX_WAIST_ACCEL,
            dt,
        );
        waist_angle = config.waist_limits.clamp(w_pos);
        waist_rate = w_rate;
        left = (
            slew(left.0, cmd.left_arm.q_circ, joint_speed_max, dt),
            slew(left.1, cmd.left_arm.q_abd, joint_speed_max, dt),
        );
        right = (
            slew(right.0, cmd.right_arm.q_circ, joint_speed_max, dt),
            slew(right.1, cmd.right_arm.q_abd, joint_speed_max, dt),
        );

        // Waist motor torque readout at the new state.
        let holding =
            waist::holding_torque_per_arm(&config.waist_model, waist_angle, left.0, right.0);
        let damper = if waist_rate == 0.0 {
            0.0
        } else {
            config.waist_model.damper_torque * waist_rate.signum()
        };
        let waist_torque = holding
            + config.waist_model.total_inertia() * w_accel.clamp(-MAX_WAIST_ACCEL, MAX_WAIST_ACCEL)
            + damper;

        log.steps.push(LogStep {
            t,
            base,
            waist_angle,
            waist_rate,
            arm_left: left,
            arm_right: right,
            mode: engine.mode,
            command: cmd,
            waist_torque,
        });
    }
    Ok(log)
}

/// Run summary totals.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub steps: usize,
    pub greets: usize,
    pub bows: usize,
    pub dances: usize,
    pub clamp_count: usize,
    pub max_abs_waist_torque: f64,
    pub torque_bound: f64,
    pub distance_traveled: f64,
    /// Logged commands that violate platform limits. Always zero for
    /// logs produced by [`run_scenario`]; nonzero flags a corrupted or
    /// hand-edited log.
    pub limit_breaches: usize,
}

impl Report {
    pub fn torque_within_bound(&self) -> bool {
        self.max_abs_waist_torque <= self.torque_bound
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "steps,greets,bows,dances,clamp_count,max_abs_waist_torque_nm,torque_bound_nm,torque_ok,distance_m,limit_breaches"
        );
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            self.steps,
            self.greets,
            self.bows,
            self.dances,
            self.clamp_count,
            fmt9(self.max_abs_waist_torque),
            fmt9(self.torque_bound),
            u8::from(self.torque_within_bound()),
            fmt9(self.distance_traveled),
            self.limit_breaches,
        );
        out
    }
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "steps:            {}", self.steps)?;
        writeln!(f, "greets:           {}", self.greets)?;
        writeln!(f, "bows:             {}", self.bows)?;
        writeln!(f, "dances:           {}", self.dances)?;
        writeln!(f, "clamped commands: {}", self.clamp_count)?;
        writeln!(
            f,
            "max |waist torque|: {:.4} Nm (bound {:.1} Nm, {})",
            self.max_abs_waist_torque,
            self.torque_bound,
            if self.torque_within_bound() { "ok" } else { "EXCEEDED" }
        )?;
        writeln!(f, "distance traveled: {:.4} m", self.distance_traveled)?;
        if self.limit_breaches > 0 {
            writeln!(f, "LIMIT BREACHES: {} logged commands out of bounds", self.limit_breaches)?;
        }
        Ok(())
    }
}

/// Summarize a run log, revalidating every logged command against the
/// platform limits.
pub fn emit_report(log: &RunLog, config: &PlatformConfig) -> Report {
    let mut greets = 0;
    let mut bows = 0;
    let mut dances = 0;
    let mut clamp_count = 0;
    let mut max_torque = 0.0f64;
    let mut distance = 0.0;
    let mut breaches = 0;
    let mut prev_mode = Mode::Sleep;
    let mut prev_pos: Option<(f64, f64)> = None;
    for step in &log.steps {
        if step.mode != prev_mode {
            match step.mode {
                Mode::Greet => greets += 1,
                Mode::Bow => bows += 1,
                Mode::AttractDance => dances += 1,
                _ => {}
            }
        }
        prev_mode = step.mode;
        if step.command.clamped {
            clamp_count += 1;
        }
        max_torque = max_torque.max(step.waist_torque.abs());
        if let Some((px, py)) = prev_pos {
            distance += (step.base.x - px).hypot(step.base.y - py);
        }
        prev_pos = Some((step.base.x, step.base.y));

        let c = &step.command;
        let breach = c.turret_rate.abs() > config.max_turret_rate
            || !config.waist_limits.contains(c.waist_target)
            || c.left_arm.q_abd.abs() > config.arm_abduction_limit
            || c.right_arm.q_abd.abs() > config.arm_abduction_limit;
        if breach {
            breaches += 1;
        }
    }
    Report {
        steps: log.steps.len(),
        greets,
        bows,
        dances,
        clamp_count,
        max_abs_waist_torque: max_torque,
        torque_bound: WAIST_GAUGE_BOUND,
        distance_traveled: distance,
        limit_breaches: breaches,
    }
}

/// The shipped demonstration scenario: one visitor crosses the robot's
/// field of view, lingers while being tracked, and leaves.
pub fn museum_demo_csv() -> &'static str {
    include_str!("../data/scenarios/museum_demo.csv")
}
