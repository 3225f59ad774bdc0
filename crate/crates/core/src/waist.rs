//! Gravity torque model of the one-DoF waist and its counterbalance.
//!
//! The torso is lumped into three point masses on levers about the waist
//! pivot: the upper body (head plus arm transmissions) above it, one mass
//! per arm link hanging from a shoulder point, and the lower body
//! (battery plus counter masses) below the pivot. The battery doubles as
//! the counterweight; tuning adds steel until the worst-case holding
//! torque at full forward bow drops under the actuator's budget.
//!
//! Shipped mass and lever values are calibration, not measurement: they
//! are fitted so the uncompensated model peaks near 16 Nm at full bow and
//! the counterbalanced model stays under 2 Nm, the two documented
//! operating points of the hardware.

use std::f64::consts::PI;

use thiserror::Error;

/// Standard gravity used throughout the torque model.
pub const GRAVITY: f64 = 9.81;

/// The waist never needs to move faster than 1 rad/s.
pub const MAX_WAIST_RATE: f64 = 1.0;

/// Nor accelerate faster than 1 rad/s^2.
pub const MAX_WAIST_ACCEL: f64 = 1.0;

#[derive(Debug, Error)]
pub enum WaistError {
    #[error("waist angle {theta:.4} rad outside limits [-{back:.4}, {forward:.4}]")]
    PoseOutOfLimits { theta: f64, forward: f64, back: f64 },
    #[error("waist rate {0:.4} rad/s exceeds {MAX_WAIST_RATE} rad/s")]
    RateLimit(f64),
    #[error("waist acceleration {0:.4} rad/s^2 exceeds {MAX_WAIST_ACCEL} rad/s^2")]
    AccelLimit(f64),
    #[error(
        "target peak {target:.3} Nm unreachable by adding mass at lever {lever:.3} m; \
         limiting pose theta_w = {theta_deg:.1} deg, phi_a = {phi_deg:.1} deg"
    )]
    InfeasibleTarget {
        target: f64,
        lever: f64,
        theta_deg: f64,
        phi_deg: f64,
    },
}

/// Waist travel limits, both stored as positive magnitudes (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaistLimits {
    /// Forward bow limit (rad).
    pub forward: f64,
    /// Backward lean limit (rad).
    pub back: f64,
}

impl Default for WaistLimits {
    fn default() -> Self {
        Self {
            forward: 30f64.to_radians(),
            back: 15f64.to_radians(),
        }
    }
}

impl WaistLimits {
    pub fn contains(&self, theta_w: f64) -> bool {
        (-self.back..=self.forward).contains(&theta_w)
    }

    pub fn clamp(&self, theta_w: f64) -> f64 {
        theta_w.clamp(-self.back, self.forward)
    }
}

/// Point-mass model of the torso about the waist pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsoMassModel {
    /// Upper-body lumped mass (kg) at `l_upper` above the pivot.
    pub m_upper: f64,
    pub l_upper: f64,
    /// Per-arm link mass (kg); two arms are modeled.
    pub m_arm: f64,
    /// Shoulder height above the pivot (m).
    pub l_shoulder: f64,
    /// Arm link lever from the shoulder (m).
    pub l_arm: f64,
    /// Lower-body mass (kg): battery plus counter masses, below the pivot.
    pub m_lower: f64,
    pub l_lower: f64,
    /// Additional rotational inertia about the pivot (kg m^2).
    pub extra_inertia: f64,
    /// Constant friction-damper torque magnitude (Nm).
    pub damper_torque: f64,
    pub gravity: f64,
}

impl Default for TorsoMassModel {
    /// The counterbalanced torso as shipped: the 12 kg battery plus 6 kg
    /// of steel at the lower lever.
    fn default() -> Self {
        Self {
            m_upper: 5.0,
            l_upper: 0.2,
            m_arm: 2.1,
            l_shoulder: 0.25,
            l_arm: 0.15,
            m_lower: 18.0,
            l_lower: 0.165,
            extra_inertia: 0.0,
            damper_torque: 0.2,
            gravity: GRAVITY,
        }
    }
}

impl TorsoMassModel {
    /// Same torso with no counterweight at all.
    pub fn without_counterbalance(&self) -> Self {
        Self {
            m_lower: 0.0,
            ..*self
        }
    }

    /// Same torso with only the battery as ballast.
    pub fn battery_only(&self, battery_mass: f64) -> Self {
        Self {
            m_lower: battery_mass,
            ..*self
        }
    }

    /// First moment of the masses above the pivot (kg m), arm links
    /// excluded: `m_upper*l_upper + 2*m_arm*l_shoulder`.
    fn upper_moment(&self) -> f64 {
        self.m_upper * self.l_upper + 2.0 * self.m_arm * self.l_shoulder
    }

    /// First moment of the ballast below the pivot (kg m).
    fn lower_moment(&self) -> f64 {
        self.m_lower * self.l_lower
    }

    /// The arm-link moment coefficient `2*m_arm*l_arm` (kg m).
    fn arm_moment(&self) -> f64 {
        2.0 * self.m_arm * self.l_arm
    }

    /// Lumped rotational inertia about the pivot (kg m^2). Each mass
    /// contributes m*l^2; the arm link adds its shoulder-offset and link
    /// terms independently (the flexion-dependent cross term is dropped
    /// in the lump).
    pub fn total_inertia(&self) -> f64 {
        self.m_upper * self.l_upper.powi(2)
            + 2.0 * self.m_arm * (self.l_shoulder.powi(2) + self.l_arm.powi(2))
            + self.m_lower * self.l_lower.powi(2)
            + self.extra_inertia
    }
}

/// Waist pose: bow angle, shared arm flexion, and commanded bow
/// acceleration. `theta_w > 0` bows forward; `phi_arm = 0` hangs the arms
/// along the torso and `phi_arm = 90` degrees points them forward.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WaistPose {
    pub theta_w: f64,
    pub phi_arm: f64,
    pub theta_w_ddot: f64,
}

/// Gravity torque about the pivot, unchecked. Positive torque means the
/// motor resists the torso falling forward.
fn gravity_torque(model: &TorsoMassModel, theta_w: f64, phi_arm: f64) -> f64 {
    model.gravity
        * ((model.upper_moment() - model.lower_moment()) * theta_w.sin()
            + model.arm_moment() * (theta_w + phi_arm).sin())
}

/// Static torque the waist actuator must support at a pose.
pub fn holding_torque(
    model: &TorsoMassModel,
    pose: &WaistPose,
    limits: &WaistLimits,
) -> Result<f64, WaistError> {
    if !limits.contains(pose.theta_w) {
        return Err(WaistError::PoseOutOfLimits {
            theta: pose.theta_w,
            forward: limits.forward,
            back: limits.back,
        });
    }
    Ok(gravity_torque(model, pose.theta_w, pose.phi_arm))
}

/// Holding torque with each arm at its own flexion angle. Reduces to
/// [`holding_torque`] when both angles agree.
pub fn holding_torque_per_arm(
    model: &TorsoMassModel,
    theta_w: f64,
    phi_left: f64,
    phi_right: f64,
) -> f64 {
    let per_arm = model.m_arm * model.l_arm;
    model.gravity
        * ((model.upper_moment() - model.lower_moment()) * theta_w.sin()
            + per_arm * ((theta_w + phi_left).sin() + (theta_w + phi_right).sin()))
}

/// Peak holding torque over a full arm-flexion sweep at the hardest
/// position, full forward bow, together with the pose attaining it.
///
/// At fixed bow the torque is maximized where the arm term saturates,
/// `phi_arm = 90 deg - theta_w`; the returned value is the signed peak of
/// that worst-flexion curve, the quantity the counterbalance is tuned
/// against.
pub fn peak_holding_torque(model: &TorsoMassModel, limits: &WaistLimits) -> (f64, WaistPose) {
    let theta = limits.forward;
    let phi = PI / 2.0 - theta;
    let pose = WaistPose {
        theta_w: theta,
        phi_arm: phi,
        theta_w_ddot: 0.0,
    };
    (gravity_torque(model, theta, phi), pose)
}

/// Motor torque demand while moving: gravity holding plus inertia plus
/// the constant friction damper. The damper contributes nothing while
/// the waist is stationary.
pub fn total_motor_torque(
    model: &TorsoMassModel,
    pose: &WaistPose,
    limits: &WaistLimits,
    theta_w_dot: f64,
) -> Result<f64, WaistError> {
    if theta_w_dot.abs() > MAX_WAIST_RATE {
        return Err(WaistError::RateLimit(theta_w_dot));
    }
    if pose.theta_w_ddot.abs() > MAX_WAIST_ACCEL {
        return Err(WaistError::AccelLimit(pose.theta_w_ddot));
    }
    let holding = holding_torque(model, pose, limits)?;
    let damper = if theta_w_dot == 0.0 {
        0.0
    } else {
        model.damper_torque * theta_w_dot.signum()
    };
    Ok(holding + model.total_inertia() * pose.theta_w_ddot + damper)
}

/// Smallest mass added at `lever` below the pivot that brings the peak
/// holding torque down to `target_peak`, found by bisection on the
/// monotone peak-vs-mass curve.
pub fn tune_counter_mass(
    model: &TorsoMassModel,
    limits: &WaistLimits,
    target_peak: f64,
    lever: f64,
) -> Result<f64, WaistError> {
    let peak_with = |added: f64| -> f64 {
        let trial = TorsoMassModel {
            // Fold the added moment into the lower lever product.
            m_lower: model.m_lower + added * lever / model.l_lower.max(f64::MIN_POSITIVE),
            ..*model
        };
        peak_holding_torque(&trial, limits).0
    };
    let (baseline, pose) = peak_holding_torque(model, limits);
    if baseline <= target_peak {
        return Ok(0.0);
    }
    // Added mass only helps while the forward-bow lever actually works.
    let slope = lever * limits.forward.sin();
    if slope <= 0.0 {
        return Err(WaistError::InfeasibleTarget {
            target: target_peak,
            lever,
            theta_deg: pose.theta_w.to_degrees(),
            phi_deg: pose.phi_arm.to_degrees(),
        });
    }
    let mut hi = 1.0;
    while peak_with(hi) > target_peak {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(WaistError::InfeasibleTarget {
                target: target_peak,
                lever,
                theta_deg: pose.theta_w.to_degrees(),
                phi_deg: pose.phi_arm.to_degrees(),
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if peak_with(mid) > target_peak {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
