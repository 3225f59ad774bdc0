//! Kinematics of the holonomic caster-drive base.
//!
//! The base is a differential-drive wheel pair (rates `omega_l`,
//! `omega_r`) carrying a powered turret whose rotation axis sits a
//! distance `a` ahead of the wheel axis. Because that point can be given
//! any planar velocity by the wheel pair while the turret motor absorbs
//! the heading difference, three motors yield full holonomic motion of
//! the torso frame.

use thiserror::Error;

use crate::angles::normalize;
use crate::config::PlatformConfig;

/// Pose of the drive frame plus turret angle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BaseState {
    /// World x of the wheel-axis midpoint (m).
    pub x: f64,
    /// World y of the wheel-axis midpoint (m).
    pub y: f64,
    /// Differential-drive heading (rad), normalized to `(-PI, PI]`.
    pub phi: f64,
    /// Turret angle relative to the drive frame (rad), normalized.
    pub theta_t: f64,
}

impl BaseState {
    /// Torso heading in the world frame; derived, never stored.
    pub fn torso_heading(&self) -> f64 {
        normalize(self.phi + self.theta_t)
    }
}

/// Wheel and turret angular rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorRates {
    pub omega_l: f64,
    pub omega_r: f64,
    pub omega_t: f64,
}

/// Torso-frame planar velocity plus torso heading rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    /// Forward velocity in the torso frame (m/s).
    pub ux: f64,
    /// Lateral velocity in the torso frame (m/s).
    pub uy: f64,
    /// Torso heading rate (rad/s).
    pub psi_dot: f64,
}

impl BodyTwist {
    pub fn speed(&self) -> f64 {
        self.ux.hypot(self.uy)
    }
}

/// One exceeded bound, with how far past it the command sits.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitViolation {
    pub quantity: &'static str,
    pub value: f64,
    pub bound: f64,
}

impl LimitViolation {
    pub fn margin(&self) -> f64 {
        self.value - self.bound
    }
}

impl std::fmt::Display for LimitViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} = {:.6} exceeds bound {:.6} by {:.6}",
            self.quantity,
            self.value,
            self.bound,
            self.margin()
        )
    }
}

/// Validation report: empty means feasible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimitReport {
    pub violations: Vec<LimitViolation>,
}

impl LimitReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for LimitReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.feasible() {
            write!(f, "feasible")
        } else {
            let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            write!(f, "{}", lines.join("; "))
        }
    }
}

#[derive(Debug, Error)]
pub enum KinematicsError {
    /// Turret offset `a` is zero (or negative): the lateral twist
    /// component is unreachable and the inverse map does not exist.
    #[error("turret offset a must be positive; lateral motion is unreachable with a = {0}")]
    SingularGeometry(f64),
    #[error("command violates limits: {0}")]
    LimitViolation(LimitReport),
}

/// Differential-drive forward speed and yaw rate from wheel rates.
fn wheel_pair_rates(rates: ActuatorRates, config: &PlatformConfig) -> (f64, f64) {
    let r = config.wheel_radius;
    let v = r * (rates.omega_r + rates.omega_l) / 2.0;
    let omega = r * (rates.omega_r - rates.omega_l) / (2.0 * config.half_track);
    (v, omega)
}

/// Map actuator rates to the torso-frame twist.
///
/// The turret-axis point moves at `(v, a*omega)` in the drive frame;
/// rotating by `-theta_t` expresses it in the torso frame, and the torso
/// heading rate is `omega + omega_t`.
pub fn forward_kinematics(
    rates: ActuatorRates,
    state: BaseState,
    config: &PlatformConfig,
) -> BodyTwist {
    let (v, omega) = wheel_pair_rates(rates, config);
    let lateral = config.turret_offset_a * omega;
    let (sin_t, cos_t) = state.theta_t.sin_cos();
    BodyTwist {
        ux: v * cos_t + lateral * sin_t,
        uy: -v * sin_t + lateral * cos_t,
        psi_dot: omega + rates.omega_t,
    }
}

/// Solve for the actuator rates realizing a torso-frame twist.
///
/// Violated bounds are reported, never clamped; scaling decisions belong
/// to the caller.
pub fn inverse_kinematics(
    twist: BodyTwist,
    state: BaseState,
    config: &PlatformConfig,
) -> Result<ActuatorRates, KinematicsError> {
    let a = config.turret_offset_a;
    if a <= 0.0 {
        return Err(KinematicsError::SingularGeometry(a));
    }
    let (sin_t, cos_t) = state.theta_t.sin_cos();
    // Torso frame back into the drive frame.
    let v = twist.ux * cos_t - twist.uy * sin_t;
    let lateral = twist.ux * sin_t + twist.uy * cos_t;
    let omega = lateral / a;
    let omega_t = twist.psi_dot - omega;
    let r = config.wheel_radius;
    let b = config.half_track;
    let rates = ActuatorRates {
        omega_l: (v - b * omega) / r,
        omega_r: (v + b * omega) / r,
        omega_t,
    };

    let mut report = LimitReport::default();
    if twist.speed() > config.max_linear_speed {
        report.violations.push(LimitViolation {
            quantity: "translational speed (m/s)",
            value: twist.speed(),
            bound: config.max_linear_speed,
        });
    }
    if omega_t.abs() > config.max_turret_rate {
        report.violations.push(LimitViolation {
            quantity: "turret rate (rad/s)",
            value: omega_t.abs(),
            bound: config.max_turret_rate,
        });
    }
    if !report.feasible() {
        return Err(KinematicsError::LimitViolation(report));
    }
    Ok(rates)
}

/// Check actuator rates against the platform speed bounds.
///
/// The translational bound applies to the turret-point speed implied by
/// the wheel pair; the turret bound applies to `omega_t` directly.
/// Values exactly at a bound are feasible.
pub fn check_limits(rates: ActuatorRates, config: &PlatformConfig) -> LimitReport {
    let (v, omega) = wheel_pair_rates(rates, config);
    let speed = v.hypot(config.turret_offset_a * omega);
    let mut report = LimitReport::default();
    if speed > config.max_linear_speed {
        report.violations.push(LimitViolation {
            quantity: "translational speed (m/s)",
            value: speed,
            bound: config.max_linear_speed,
        });
    }
    if rates.omega_t.abs() > config.max_turret_rate {
        report.violations.push(LimitViolation {
            quantity: "turret rate (rad/s)",
            value: rates.omega_t.abs(),
            bound: config.max_turret_rate,
        });
    }
    report
}

/// Dead-reckon one fixed step with the midpoint rule.
///
/// Midpoint evaluates the heading at `phi + omega*dt/2`, which makes the
/// update second-order accurate on arcs and exact for straight motion
/// (`omega = 0`). Angles are normalized after the step. Requires `dt > 0`.
pub fn integrate_odometry(
    state: BaseState,
    rates: ActuatorRates,
    dt: f64,
    config: &PlatformConfig,
) -> BaseState {
    let (v, omega) = wheel_pair_rates(rates, config);
    let phi_mid = state.phi + 0.5 * omega * dt;
    BaseState {
        x: state.x + v * phi_mid.cos() * dt,
        y: state.y + v * phi_mid.sin() * dt,
        phi: normalize(state.phi + omega * dt),
        theta_t: normalize(state.theta_t + rates.omega_t * dt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg() -> PlatformConfig {
        PlatformConfig::default()
    }

    fn assert_twist_close(a: BodyTwist, b: BodyTwist, tol: f64) {
        assert!((a.ux - b.ux).abs() < tol, "ux {} vs {}", a.ux, b.ux);
        assert!((a.uy - b.uy).abs() < tol, "uy {} vs {}", a.uy, b.uy);
        assert!(
            (a.psi_dot - b.psi_dot).abs() < tol,
            "psi_dot {} vs {}",
            a.psi_dot,
            b.psi_dot
        );
    }

    #[test]
    fn symmetric_wheels_drive_straight() {
        let config = cfg();
        let v = 0.5;
        let rates = ActuatorRates {
            omega_l: v / config.wheel_radius,
            omega_r: v / config.wheel_radius,
            omega_t: 0.0,
        };
        let twist = forward_kinematics(rates, BaseState::default(), &config);
        assert_twist_close(
            twist,
            BodyTwist {
                ux: v,
                uy: 0.0,
                psi_dot: 0.0,
            },
            1e-12,
        );
    }

    #[test]
    fn opposed_wheels_with_countered_turret_slide_sideways() {
        // Hand derivation: omega_l = -omega_r gives v = 0 and
        // omega = r*omega_r/b; the turret point then moves at a*omega
        // laterally, and omega_t = -omega holds the torso heading fixed.
        let config = cfg();
        let w = 3.0;
        let omega = config.wheel_radius * w / config.half_track;
        let rates = ActuatorRates {
            omega_l: -w,
            omega_r: w,
            omega_t: -omega,
        };
        let twist = forward_kinematics(rates, BaseState::default(), &config);
        assert_twist_close(
            twist,
            BodyTwist {
                ux: 0.0,
                uy: config.turret_offset_a * omega,
                psi_dot: 0.0,
            },
            1e-12,
        );
    }

    #[test]
    fn zero_rates_zero_twist() {
        let twist = forward_kinematics(ActuatorRates::default(), BaseState::default(), &cfg());
        assert_eq!(twist, BodyTwist::default());
    }

    #[test]
    fn zero_twist_zero_rates() {
        let rates = inverse_kinematics(BodyTwist::default(), BaseState::default(), &cfg()).unwrap();
        assert_eq!(rates, ActuatorRates::default());
    }

    #[test]
    fn overspeed_twist_rejected_and_bound_is_inclusive() {
        let config = cfg();
        let fast = BodyTwist {
            ux: 0.7,
            uy: 0.0,
            psi_dot: 0.0,
        };
        match inverse_kinematics(fast, BaseState::default(), &config) {
            Err(KinematicsError::LimitViolation(report)) => {
                assert!(report.violations[0].quantity.contains("translational"));
            }
            other => panic!("expected limit violation, got {other:?}"),
        }
        // Exactly at the bound is feasible.
        let at_bound = BodyTwist {
            ux: 0.6,
            uy: 0.0,
            psi_dot: 0.0,
        };
        assert!(inverse_kinematics(at_bound, BaseState::default(), &config).is_ok());
    }

    #[test]
    fn singular_geometry_rejected_rather_than_exploding() {
        let mut config = cfg();
        config.turret_offset_a = 0.0;
        let twist = BodyTwist {
            ux: 0.0,
            uy: 0.1,
            psi_dot: 0.0,
        };
        assert!(matches!(
            inverse_kinematics(twist, BaseState::default(), &config),
            Err(KinematicsError::SingularGeometry(_))
        ));
    }

    #[test]
    fn check_limits_examples() {
        let config = cfg();
        let straight = ActuatorRates {
            omega_l: 0.6 / config.wheel_radius,
            omega_r: 0.6 / config.wheel_radius,
            omega_t: 0.0,
        };
        assert!(check_limits(straight, &config).feasible());

        let spin = ActuatorRates {
            omega_l: 0.0,
            omega_r: 0.0,
            omega_t: 1.01 * PI,
        };
        let report = check_limits(spin, &config);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].quantity.contains("turret"));
        assert!(report.violations[0].margin() > 0.0);

        assert!(check_limits(ActuatorRates::default(), &config).feasible());
    }

    #[test]
    fn odometry_zero_rates_is_identity() {
        let config = cfg();
        let state = BaseState {
            x: 1.0,
            y: -2.0,
            phi: 0.3,
            theta_t: -1.2,
        };
        let next = integrate_odometry(state, ActuatorRates::default(), 0.5, &config);
        assert_eq!(next, state);
    }

    #[test]
    fn odometry_straight_line_is_exact() {
        let config = cfg();
        let rates = ActuatorRates {
            omega_l: 0.6 / config.wheel_radius,
            omega_r: 0.6 / config.wheel_radius,
            omega_t: 0.0,
        };
        let mut state = BaseState::default();
        for _ in 0..1000 {
            state = integrate_odometry(state, rates, 0.01, &config);
        }
        assert!((state.x - 6.0).abs() < 1e-9, "x = {}", state.x);
        assert_eq!(state.y, 0.0);
        assert_eq!(state.phi, 0.0);
    }

    /// Closed-form circular arc: starting from the origin at phi = 0 with
    /// constant v, omega, the exact position at time t is
    /// x = R sin(omega t), y = R (1 - cos(omega t)) with R = v / omega.
    fn arc_oracle(v: f64, omega: f64, t: f64) -> (f64, f64) {
        let radius = v / omega;
        ((omega * t).sin() * radius, (1.0 - (omega * t).cos()) * radius)
    }

    fn integrate_arc(v: f64, omega: f64, steps: usize, dt: f64, config: &PlatformConfig) -> BaseState {
        let r = config.wheel_radius;
        let b = config.half_track;
        let rates = ActuatorRates {
            omega_l: (v - b * omega) / r,
            omega_r: (v + b * omega) / r,
            omega_t: 0.0,
        };
        let mut state = BaseState::default();
        for _ in 0..steps {
            state = integrate_odometry(state, rates, dt, &config);
        }
        state
    }

    #[test]
    fn odometry_full_turn_error_below_a_tenth_percent() {
        let config = cfg();
        let v = 0.3;
        let omega = PI / 10.0; // full turn in 20 s = 2000 steps of 10 ms
        let state = integrate_arc(v, omega, 2000, 0.01, &config);
        let (ex, ey) = arc_oracle(v, omega, 20.0);
        let err = ((state.x - ex).powi(2) + (state.y - ey).powi(2)).sqrt();
        let path_len = v * 20.0;
        assert!(err < 1e-3 * path_len, "arc error {err} over path {path_len}");
    }

    #[test]
    fn odometry_halving_dt_quarters_the_arc_error() {
        let config = cfg();
        let v = 0.3;
        let omega = PI / 10.0;
        let t = 5.0; // quarter turn, where the midpoint error is nonzero
        let err = |dt: f64| {
            let steps = (t / dt).round() as usize;
            let state = integrate_arc(v, omega, steps, dt, &config);
            let (ex, ey) = arc_oracle(v, omega, t);
            ((state.x - ex).powi(2) + (state.y - ey).powi(2)).sqrt()
        };
        let coarse = err(0.02);
        let fine = err(0.01);
        assert!(
            coarse / fine >= 3.99,
            "expected second-order convergence, got ratio {}",
            coarse / fine
        );
    }

    #[test]
    fn torso_heading_is_derived() {
        let state = BaseState {
            x: 0.0,
            y: 0.0,
            phi: 3.0,
            theta_t: 1.0,
        };
        assert!((state.torso_heading() - normalize(4.0)).abs() < 1e-12);
    }

    proptest! {
        /// Round trip: forward(inverse(t)) = t for every feasible twist.
        #[test]
        fn ik_fk_round_trip(
            speed in 0.0..0.6f64,
            dir in -PI..PI,
            psi_dot in -3.0..3.0f64,
            theta_t in -PI..PI,
        ) {
            let config = cfg();
            let twist = BodyTwist {
                ux: speed * dir.cos(),
                uy: speed * dir.sin(),
                psi_dot,
            };
            let state = BaseState { theta_t, ..BaseState::default() };
            // Twists whose turret rate lands out of bounds are legal to
            // reject; the round trip only applies to feasible commands.
            if let Ok(rates) = inverse_kinematics(twist, state, &config) {
                let back = forward_kinematics(rates, state, &config);
                prop_assert!((back.ux - twist.ux).abs() < 1e-9);
                prop_assert!((back.uy - twist.uy).abs() < 1e-9);
                prop_assert!((back.psi_dot - twist.psi_dot).abs() < 1e-9);
            }
        }

        /// Kinematics depend only on relative angles, not the world frame.
        #[test]
        fn world_frame_rotation_leaves_rates_unchanged(
            speed in 0.0..0.5f64,
            dir in -PI..PI,
            psi_dot in -1.0..1.0f64,
            theta_t in -PI..PI,
            phi in -PI..PI,
            x in -5.0..5.0f64,
        ) {
            let config = cfg();
            let twist = BodyTwist { ux: speed * dir.cos(), uy: speed * dir.sin(), psi_dot };
            let home = BaseState { theta_t, ..BaseState::default() };
            let moved = BaseState { x, y: -x, phi, theta_t };
            let a = inverse_kinematics(twist, home, &config);
            let b = inverse_kinematics(twist, moved, &config);
            match (a, b) {
                (Ok(ra), Ok(rb)) => {
                    prop_assert!((ra.omega_l - rb.omega_l).abs() < 1e-12);
                    prop_assert!((ra.omega_r - rb.omega_r).abs() < 1e-12);
                    prop_assert!((ra.omega_t - rb.omega_t).abs() < 1e-12);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "feasibility must not depend on world pose"),
            }
        }
    }
}
