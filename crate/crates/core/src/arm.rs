//! Two-DoF shoulder transmission: differential mapping between the two
//! drive motors and the circumduction/abduction joint axes, friction
//! clutch slip, encoder quantization, and boot calibration.
//!
//! Each motor drives one path of a bevel differential through a friction
//! wheel pair and belt reduction, lumped into a single ratio `G`. Equal
//! motor motion produces circumduction, opposed motion abduction. The
//! friction wheel doubles as a safety clutch: it transmits a bounded
//! torque and slips beyond it, whether the motor overloads or the arm is
//! back-driven. Output-shaft encoders let the software measure slip and
//! re-reference the motors at boot.

use std::f64::consts::PI;

use thiserror::Error;

use crate::config::PlatformConfig;

#[derive(Debug, Error)]
pub enum ArmError {
    #[error("motor torque command {value:.4} Nm exceeds the {max:.4} Nm motor limit")]
    TorqueCommand { value: f64, max: f64 },
    #[error("abduction {value_deg:.2} deg outside +/-{limit_deg:.2} deg joint range")]
    AbductionLimit { value_deg: f64, limit_deg: f64 },
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
}

/// Transmission constants for one shoulder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionSpec {
    /// Total reduction, friction pair times belt stages.
    pub ratio: f64,
    /// Maximum torque transferable at the joint before the friction
    /// wheels slip (Nm), counting both paths together.
    pub clutch_torque: f64,
    pub motor_torque_max: f64,
    /// Motor speed limit in revolutions per second.
    pub motor_speed_max_rps: f64,
    /// Joint range of the abduction axis (rad); circumduction is continuous.
    pub abduction_limit: f64,
    /// Output-shaft encoder resolution (deg).
    pub output_encoder_res_deg: f64,
    /// Motor encoder resolution (deg).
    pub motor_encoder_res_deg: f64,
}

impl Default for TransmissionSpec {
    fn default() -> Self {
        Self {
            ratio: 83.8,
            clutch_torque: 4.0,
            motor_torque_max: 0.15,
            motor_speed_max_rps: 16.0,
            abduction_limit: 70f64.to_radians(),
            output_encoder_res_deg: 0.022,
            motor_encoder_res_deg: 0.075,
        }
    }
}

impl TransmissionSpec {
    pub fn from_config(config: &PlatformConfig) -> Self {
        Self {
            ratio: config.arm_gear_ratio,
            clutch_torque: config.arm_clutch_torque,
            motor_torque_max: config.arm_motor_torque_max,
            motor_speed_max_rps: config.arm_motor_speed_max_rps,
            abduction_limit: config.arm_abduction_limit,
            output_encoder_res_deg: config.output_encoder_res_deg,
            motor_encoder_res_deg: config.motor_encoder_res_deg,
        }
    }

    /// Motor speed limit in rad/s.
    pub fn motor_speed_max(&self) -> f64 {
        self.motor_speed_max_rps * 2.0 * PI
    }

    /// Joint-side torque each of the two differential paths can carry
    /// before slipping.
    fn path_clutch_limit(&self) -> f64 {
        self.clutch_torque / 2.0
    }

    /// Worst-case disagreement between output- and motor-implied joint
    /// angles from encoder quantization alone (rad).
    pub fn combined_quantization(&self) -> f64 {
        (self.output_encoder_res_deg + self.motor_encoder_res_deg / self.ratio).to_radians()
    }
}

/// Torque expressed along the two joint axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointTorque {
    pub circ: f64,
    pub abd: f64,
}

/// Shoulder state: motor shaft angles plus the accumulated clutch slip of
/// each drive path, in joint-side radians. Joint angles are derived:
/// absent slip they are the differential combination of the motor angles
/// over the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmState {
    /// Motor shaft angles (rad), unbounded.
    pub alpha1: f64,
    pub alpha2: f64,
    /// Accumulated slip per path (joint-side rad): motor-implied path
    /// angle minus actual path angle.
    pub slip1: f64,
    pub slip2: f64,
}

impl ArmState {
    /// Actual path output angles (joint side).
    fn path_angles(&self, spec: &TransmissionSpec) -> (f64, f64) {
        (
            self.alpha1 / spec.ratio - self.slip1,
            self.alpha2 / spec.ratio - self.slip2,
        )
    }

    /// Continuous circumduction angle (rad).
    pub fn q_circ(&self, spec: &TransmissionSpec) -> f64 {
        let (b1, b2) = self.path_angles(spec);
        (b1 + b2) / 2.0
    }

    /// Abduction angle (rad).
    pub fn q_abd(&self, spec: &TransmissionSpec) -> f64 {
        let (b1, b2) = self.path_angles(spec);
        (b1 - b2) / 2.0
    }
}

/// Differential map from motor shaft angles to joint angles.
pub fn motor_to_joint(alpha1: f64, alpha2: f64, spec: &TransmissionSpec) -> (f64, f64) {
    let g2 = 2.0 * spec.ratio;
    ((alpha1 + alpha2) / g2, (alpha1 - alpha2) / g2)
}

/// Exact inverse of [`motor_to_joint`]; rejects abduction outside the
/// joint range.
pub fn joint_to_motor(
    q_circ: f64,
    q_abd: f64,
    spec: &TransmissionSpec,
) -> Result<(f64, f64), ArmError> {
    if q_abd.abs() > spec.abduction_limit {
        return Err(ArmError::AbductionLimit {
            value_deg: q_abd.to_degrees(),
            limit_deg: spec.abduction_limit.to_degrees(),
        });
    }
    Ok((
        spec.ratio * (q_circ + q_abd),
        spec.ratio * (q_circ - q_abd),
    ))
}

/// Which drive path slipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotorPath {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipEvent {
    pub path: MotorPath,
    /// Demand beyond the clutch limit (joint-side Nm).
    pub excess_torque: f64,
    /// Slip added this step (joint-side rad).
    pub slip_increment: f64,
}

/// Result of one dynamics step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepOutcome {
    /// Torque actually delivered at the joint, clamped by the clutch.
    pub joint_torque: JointTorque,
    pub slip_events: Vec<SlipEvent>,
}

/// Advance the shoulder one step under motor torque commands and a joint
/// load.
///
/// The servo drives are position-controlled and direct drive; the model
/// maps commanded torque to shaft speed proportionally, saturating at
/// the motor speed limit. `load` is the torque demand the joint must
/// supply, split across the two differential paths. A path whose demand
/// stays within its clutch share follows the motor exactly; beyond it
/// the clutch transmits its limit, the motor keeps turning, and the
/// joint side yields against the demand at a rate proportional to the
/// overload fraction (full scale = the joint speed limit). The angular
/// discrepancy accumulates as slip and is reported as a slip event.
pub fn step_dynamics(
    state: &ArmState,
    cmd_motor_torque: (f64, f64),
    load: JointTorque,
    dt: f64,
    spec: &TransmissionSpec,
) -> Result<(ArmState, StepOutcome), ArmError> {
    if dt <= 0.0 {
        return Err(ArmError::NonPositiveDt(dt));
    }
    for value in [cmd_motor_torque.0, cmd_motor_torque.1] {
        if value.abs() > spec.motor_torque_max {
            return Err(ArmError::TorqueCommand {
                value,
                max: spec.motor_torque_max,
            });
        }
    }

    let limit = spec.path_clutch_limit();
    let joint_speed_full = spec.motor_speed_max() / spec.ratio;
    // Per-path joint-side demand from the load.
    let demand = [(load.circ + load.abd) / 2.0, (load.circ - load.abd) / 2.0];
    let motor_rate = [
        cmd_motor_torque.0 / spec.motor_torque_max * spec.motor_speed_max(),
        cmd_motor_torque.1 / spec.motor_torque_max * spec.motor_speed_max(),
    ];

    let mut next = *state;
    let mut outcome = StepOutcome::default();
    let mut transmitted = [0.0f64; 2];
    for path in 0..2 {
        let d_alpha = motor_rate[path] * dt;
        let (alpha, slip) = match path {
            0 => (&mut next.alpha1, &mut next.slip1),
            _ => (&mut next.alpha2, &mut next.slip2),
        };
        *alpha += d_alpha;
        if demand[path].abs() <= limit {
            transmitted[path] = demand[path];
            // Intact path: the joint follows the motor, slip unchanged.
        } else {
            let excess = demand[path].abs() - limit;
            transmitted[path] = limit * demand[path].signum();
            let d_beta = -demand[path].signum() * (excess / limit) * joint_speed_full * dt;
            let increment = d_alpha / spec.ratio - d_beta;
            *slip += increment;
            outcome.slip_events.push(SlipEvent {
                path: if path == 0 { MotorPath::One } else { MotorPath::Two },
                excess_torque: excess,
                slip_increment: increment,
            });
        }
    }
    outcome.joint_torque = JointTorque {
        circ: transmitted[0] + transmitted[1],
        abd: transmitted[0] - transmitted[1],
    };
    Ok((next, outcome))
}

/// Slip estimate from redundant encoders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipEstimate {
    /// Output-implied minus motor-implied joint angle, per axis (rad).
    pub circ: f64,
    pub abd: f64,
    pub flagged: bool,
}

/// Quantize a reading to an encoder resolution given in degrees.
pub fn quantize(angle: f64, res_deg: f64) -> f64 {
    let res = res_deg.to_radians();
    (angle / res).round() * res
}

/// Compare output-shaft readings against motor-implied joint angles.
///
/// Readings are assumed already quantized at their encoder resolutions.
/// The flag trips when either axis disagrees by strictly more than
/// `threshold`; the default threshold is three times the combined
/// quantization bound.
pub fn detect_slip(
    motor_readings: (f64, f64),
    output_readings: (f64, f64),
    threshold: Option<f64>,
    spec: &TransmissionSpec,
) -> SlipEstimate {
    let threshold = threshold.unwrap_or(3.0 * spec.combined_quantization());
    let (mc, ma) = motor_to_joint(motor_readings.0, motor_readings.1, spec);
    let circ = output_readings.0 - mc;
    let abd = output_readings.1 - ma;
    SlipEstimate {
        circ,
        abd,
        flagged: circ.abs().max(abd.abs()) > threshold,
    }
}

/// Boot calibration: re-reference the motor angles so the motor-implied
/// joint pose equals the output-shaft readings, and zero the slip
/// offsets. Idempotent.
pub fn calibrate_boot(output_readings: (f64, f64), state: &ArmState, spec: &TransmissionSpec) -> ArmState {
    let (q_circ, q_abd) = output_readings;
    let _ = state;
    ArmState {
        alpha1: spec.ratio * (q_circ + q_abd),
        alpha2: spec.ratio * (q_circ - q_abd),
        slip1: 0.0,
        slip2: 0.0,
    }
}
