//! The deployed interaction state machine.
//!
//! Reconstructs the museum exhibit logic: wave hello when a visitor
//! enters the camera FoV, bow to greet, then stay engaged with the
//! closest visitor, tracking them with the base turret and mirroring
//! their arm movements. When nobody is around long enough, return to a
//! sleep pose with a loading-animation face; when people linger outside
//! the FoV, dance periodically to attract them. Per-action cooldowns keep
//! the behavior from becoming repetitive.
//!
//! The engine is a pure function of its inputs: identical perception
//! streams produce identical command logs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::angles::normalize;
use crate::config::PlatformConfig;

#[derive(Debug, Error)]
pub enum BehaviorError {
    #[error("perception timestamps must strictly increase: {prev} then {next}")]
    NonMonotoneTimestamp { prev: f64, next: f64 },
    #[error("duplicate visitor id {0} in one perception frame")]
    DuplicateVisitorId(u64),
}

/// Engine timing and gain parameters. The deployment's narrative names
/// the behaviors but no numbers; these defaults are tuned to feel
/// spontaneous without being repetitive and are all configurable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorParams {
    pub greet_duration: f64,
    pub bow_duration: f64,
    /// Per-visitor minimum interval between greetings (s).
    pub greet_cooldown: f64,
    pub dance_duration: f64,
    pub dance_cooldown: f64,
    /// Empty-FoV time before returning to the sleep pose (s).
    pub sleep_timeout: f64,
    /// Turret alignment deadband (rad).
    pub turret_deadband: f64,
    /// Proportional turret tracking gain (1/s).
    pub track_gain: f64,
    /// Museum installs fix the platform: the engine commands turret
    /// rotation only, never wheel translation.
    pub museum_mode: bool,
    /// Height used when projecting scenario visitors into the camera (m).
    pub visitor_chest_height: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            greet_duration: 3.0,
            bow_duration: 2.5,
            greet_cooldown: 30.0,
            dance_duration: 4.0,
            dance_cooldown: 60.0,
            sleep_timeout: 20.0,
            turret_deadband: 2f64.to_radians(),
            track_gain: 2.0,
            museum_mode: true,
            visitor_chest_height: 1.2,
        }
    }
}

/// One observed visitor, in the torso frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visitor {
    pub id: u64,
    /// Planar position, x forward (m).
    pub position: (f64, f64),
    /// Estimated sagittal arm flexion, radians from hanging.
    pub left_flexion: f64,
    pub right_flexion: f64,
    pub in_camera_fov: bool,
}

impl Visitor {
    pub fn range(&self) -> f64 {
        self.position.0.hypot(self.position.1)
    }

    pub fn bearing(&self) -> f64 {
        self.position.1.atan2(self.position.0)
    }
}

/// Ground-truth observations for one control step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerceptionFrame {
    pub timestamp: f64,
    pub visitors: Vec<Visitor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Sleep,
    Greet,
    AttractDance,
    Bow,
    MirrorTrack,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sleep => "sleep",
            Mode::Greet => "greet",
            Mode::AttractDance => "attract_dance",
            Mode::Bow => "bow",
            Mode::MirrorTrack => "mirror_track",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CooldownKey {
    Greet(u64),
    Dance,
}

/// Face animation selector sent to the head renderer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceTag {
    Loading,
    Wave,
    Bow,
    Mirror,
    Dance,
}

impl FaceTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FaceTag::Loading => "loading",
            FaceTag::Wave => "wave",
            FaceTag::Bow => "bow",
            FaceTag::Mirror => "mirror",
            FaceTag::Dance => "dance",
        }
    }
}

/// Engine state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorState {
    pub mode: Mode,
    /// Set exactly while the mode is Greet, Bow or MirrorTrack.
    pub engaged_visitor: Option<u64>,
    /// Action cooldown expiry times (s).
    pub cooldowns: BTreeMap<CooldownKey, f64>,
    /// Last time any visitor was inside the camera FoV (s).
    pub last_seen: f64,
    /// When the current mode was entered (s).
    pub mode_entered: f64,
    pub last_timestamp: Option<f64>,
}

impl BehaviorState {
    pub fn new(start_time: f64) -> Self {
        Self {
            mode: Mode::Sleep,
            engaged_visitor: None,
            cooldowns: BTreeMap::new(),
            last_seen: start_time,
            mode_entered: start_time,
            last_timestamp: None,
        }
    }

    pub fn invariants_hold(&self) -> bool {
        let engaged_modes = matches!(self.mode, Mode::Greet | Mode::Bow | Mode::MirrorTrack);
        self.engaged_visitor.is_some() == engaged_modes
    }

    fn cooldown_expired(&self, key: CooldownKey, now: f64) -> bool {
        self.cooldowns.get(&key).is_none_or(|expiry| now >= *expiry)
    }
}

/// Joint targets for one arm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmTargets {
    pub q_circ: f64,
    pub q_abd: f64,
}

/// Actuator and face commands for one step. Every field is within
/// platform limits; if anything had to be clamped the flag says so.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandFrame {
    pub turret_rate: f64,
    pub waist_target: f64,
    pub left_arm: ArmTargets,
    pub right_arm: ArmTargets,
    pub face_animation: FaceTag,
    pub clamped: bool,
}

/// Closest in-FoV visitor; ties break toward the lower id.
pub fn select_target(frame: &PerceptionFrame) -> Option<u64> {
    frame
        .visitors
        .iter()
        .filter(|v| v.in_camera_fov)
        .min_by(|a, b| {
            a.range()
                .partial_cmp(&b.range())
                .unwrap()
                .then(a.id.cmp(&b.id))
        })
        .map(|v| v.id)
}

/// Per-arm pose estimate used for mirroring.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmEstimate {
    pub flexion: f64,
    pub abduction: f64,
}

/// Mirror the visitor's arms: their left maps to the robot's right and
/// vice versa. Flexion drives the circumduction target; abduction is
/// clamped into the joint range, flagged when it happens.
pub fn mirror_map(
    visitor_left: ArmEstimate,
    visitor_right: ArmEstimate,
    config: &PlatformConfig,
) -> (ArmTargets, ArmTargets, bool) {
    let limit = config.arm_abduction_limit;
    let mut clamped = false;
    let mut map = |estimate: ArmEstimate| -> ArmTargets {
        let q_abd = estimate.abduction.clamp(-limit, limit);
        if q_abd != estimate.abduction {
            clamped = true;
        }
        ArmTargets {
            q_circ: estimate.flexion,
            q_abd,
        }
    };
    let robot_left = map(visitor_right);
    let robot_right = map(visitor_left);
    (robot_left, robot_right, clamped)
}

/// Proportional turret rate toward a torso-frame target, saturated at the
/// turret speed limit, zero inside the deadband, and never overshooting
/// the bearing within one step.
pub fn track_turret(target: (f64, f64), dt: f64, config: &PlatformConfig) -> f64 {
    let bearing = normalize(target.1.atan2(target.0));
    if bearing.abs() <= config.behavior.turret_deadband {
        return 0.0;
    }
    let rate = (config.behavior.track_gain * bearing)
        .clamp(-config.max_turret_rate, config.max_turret_rate);
    if dt > 0.0 {
        rate.clamp(-bearing.abs() / dt, bearing.abs() / dt)
    } else {
        rate
    }
}

fn sleep_command() -> CommandFrame {
    CommandFrame {
        turret_rate: 0.0,
        waist_target: 0.0,
        left_arm: ArmTargets::default(),
        right_arm: ArmTargets::default(),
        face_animation: FaceTag::Loading,
        clamped: false,
    }
}

/// Advance the state machine one perception frame and emit commands.
pub fn step(
    state: &BehaviorState,
    frame: &PerceptionFrame,
    dt: f64,
    config: &PlatformConfig,
) -> Result<(BehaviorState, CommandFrame), BehaviorError> {
    if let Some(prev) = state.last_timestamp {
        if frame.timestamp <= prev {
            return Err(BehaviorError::NonMonotoneTimestamp {
                prev,
                next: frame.timestamp,
            });
        }
    }
    {
        let mut ids: Vec<u64> = frame.visitors.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(BehaviorError::DuplicateVisitorId(
                ids.windows(2).find(|w| w[0] == w[1]).unwrap()[0],
            ));
        }
    }

    let params = &config.behavior;
    let now = frame.timestamp;
    let mut next = state.clone();
    next.last_timestamp = Some(now);

    let any_in_fov = frame.visitors.iter().any(|v| v.in_camera_fov);
    if any_in_fov {
        next.last_seen = now;
    }

    let enter = |next: &mut BehaviorState, mode: Mode, engaged: Option<u64>| {
        if next.mode != mode {
            next.mode_entered = now;
        }
        next.mode = mode;
        next.engaged_visitor = engaged;
    };

    // Greetable visitor: in FoV with an expired (or absent) greet cooldown.
    let greet_candidate = frame
        .visitors
        .iter()
        .filter(|v| v.in_camera_fov && next.cooldown_expired(CooldownKey::Greet(v.id), now))
        .min_by(|a, b| {
            a.range()
                .partial_cmp(&b.range())
                .unwrap()
                .then(a.id.cmp(&b.id))
        })
        .map(|v| v.id);

    let gesture_running = match state.mode {
        Mode::Greet => now - state.mode_entered < params.greet_duration,
        Mode::Bow => now - state.mode_entered < params.bow_duration,
        _ => false,
    };

    if now - next.last_seen >= params.sleep_timeout {
        // Nobody seen for long enough: sleep preempts everything.
        enter(&mut next, Mode::Sleep, None);
    } else if gesture_running {
        // Let a greeting or bow finish.
    } else if state.mode == Mode::Greet {
        // Wave done; bow to the same visitor.
        enter(&mut next, Mode::Bow, state.engaged_visitor);
    } else if let Some(id) = greet_candidate {
        let expiry = now + params.greet_cooldown;
        next.cooldowns.insert(CooldownKey::Greet(id), expiry);
        enter(&mut next, Mode::Greet, Some(id));
    } else if let Some(id) = select_target(frame) {
        enter(&mut next, Mode::MirrorTrack, Some(id));
    } else if state.mode == Mode::Bow {
        // Bow finished with nobody visible; hold engagement and wait.
        enter(&mut next, Mode::MirrorTrack, state.engaged_visitor);
    } else if state.mode == Mode::AttractDance
        && now - state.mode_entered < params.dance_duration
    {
        // Keep dancing.
    } else if !frame.visitors.is_empty()
        && next.engaged_visitor.is_none()
        && next.cooldown_expired(CooldownKey::Dance, now)
    {
        // People are around, nobody engaged or in view: attract them.
        next.cooldowns.insert(CooldownKey::Dance, now + params.dance_cooldown);
        enter(&mut next, Mode::AttractDance, None);
    } else if state.mode == Mode::AttractDance {
        // Dance over, nobody hooked; rest until someone shows up.
        enter(&mut next, Mode::Sleep, None);
    }
    // Otherwise hold the current mode (Sleep idles; MirrorTrack waits for
    // its visitor to come back).

    let command = commands_for(&next, frame, dt, config);
    debug_assert!(next.invariants_hold());
    Ok((next, command))
}

/// Commands realizing the current mode. Gesture profiles are functions of
/// time-in-mode, so identical histories give identical commands.
fn commands_for(
    state: &BehaviorState,
    frame: &PerceptionFrame,
    dt: f64,
    config: &PlatformConfig,
) -> CommandFrame {
    let t_in = frame.timestamp - state.mode_entered;
    let engaged = state
        .engaged_visitor
        .and_then(|id| frame.visitors.iter().find(|v| v.id == id && v.in_camera_fov));
    let track = |fallback: f64| {
        engaged
            .map(|v| track_turret(v.position, dt, config))
            .unwrap_or(fallback)
    };

    let mut cmd = match state.mode {
        Mode::Sleep => sleep_command(),
        Mode::Greet => CommandFrame {
            turret_rate: track(0.0),
            waist_target: 0.0,
            left_arm: ArmTargets::default(),
            // A small upright wave; larger raises wait for the bow, where
            // the counterbalance cancels the arm moment.
            right_arm: ArmTargets {
                q_circ: (15.0 + 10.0 * (2.0 * std::f64::consts::PI * t_in).sin()).to_radians(),
                q_abd: 0.0,
            },
            face_animation: FaceTag::Wave,
            clamped: false,
        },
        Mode::Bow => {
            // Bow first with arms hanging, then raise both arms forward
            // once the waist has arrived; the ramp stays inside the joint
            // speed limit.
            let raise = ((t_in - 1.0).clamp(0.0, 1.0)) * 60f64.to_radians();
            CommandFrame {
                turret_rate: 0.0,
                waist_target: config.waist_limits.forward,
                left_arm: ArmTargets {
                    q_circ: raise,
                    q_abd: 0.0,
                },
                right_arm: ArmTargets {
                    q_circ: raise,
                    q_abd: 0.0,
                },
                face_animation: FaceTag::Bow,
                clamped: false,
            }
        }
        Mode::MirrorTrack => {
            let (left, right, clamped) = match engaged {
                Some(v) => mirror_map(
                    ArmEstimate {
                        flexion: v.left_flexion,
                        abduction: 0.0,
                    },
                    ArmEstimate {
                        flexion: v.right_flexion,
                        abduction: 0.0,
                    },
                    config,
                ),
                None => (ArmTargets::default(), ArmTargets::default(), false),
            };
            CommandFrame {
                turret_rate: track(0.0),
                waist_target: 0.0,
                left_arm: left,
                right_arm: right,
                face_animation: FaceTag::Mirror,
                clamped,
            }
        }
        Mode::AttractDance => {
            let swing = (2.0 * std::f64::consts::PI * 0.8 * t_in).sin();
            let raise = 20f64.to_radians();
            CommandFrame {
                // Cosine rate integrates to a symmetric turret wiggle.
                turret_rate: 0.5 * (2.0 * std::f64::consts::PI * 0.5 * t_in).cos(),
                waist_target: 0.0,
                left_arm: ArmTargets {
                    q_circ: raise * swing.max(0.0),
                    q_abd: 0.0,
                },
                right_arm: ArmTargets {
                    q_circ: raise * (-swing).max(0.0),
                    q_abd: 0.0,
                },
                face_animation: FaceTag::Dance,
                clamped: false,
            }
        }
    };

    // Final safety clamps; anything caught here flips the flag.
    let turret = cmd
        .turret_rate
        .clamp(-config.max_turret_rate, config.max_turret_rate);
    if turret != cmd.turret_rate {
        cmd.clamped = true;
        cmd.turret_rate = turret;
    }
    let waist = config.waist_limits.clamp(cmd.waist_target);
    if waist != cmd.waist_target {
        cmd.clamped = true;
        cmd.waist_target = waist;
    }
    for arm in [&mut cmd.left_arm, &mut cmd.right_arm] {
        let abd = arm
            .q_abd
            .clamp(-config.arm_abduction_limit, config.arm_abduction_limit);
        if abd != arm.q_abd {
            cmd.clamped = true;
            arm.q_abd = abd;
        }
    }
    cmd
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PlatformConfig {
        PlatformConfig::default()
    }

    fn visitor(id: u64, x: f64, y: f64, in_fov: bool) -> Visitor {
        Visitor {
            id,
            position: (x, y),
            left_flexion: 0.0,
            right_flexion: 0.0,
            in_camera_fov: in_fov,
        }
    }

    fn empty_frame(t: f64) -> PerceptionFrame {
        PerceptionFrame {
            timestamp: t,
            visitors: Vec::new(),
        }
    }

    #[test]
    fn sleep_holds_on_empty_frames() {
        let config = cfg();
        let mut state = BehaviorState::new(0.0);
        for k in 1..100 {
            let (next, cmd) = step(&state, &empty_frame(k as f64 * 0.01), 0.01, &config).unwrap();
            assert_eq!(next.mode, Mode::Sleep);
            assert_eq!(cmd.face_animation, FaceTag::Loading);
            assert_eq!(cmd.waist_target, 0.0);
            assert_eq!(cmd.turret_rate, 0.0);
            state = next;
        }
    }

    #[test]
    fn visitor_in_fov_triggers_greet_with_wave() {
        let config = cfg();
        let state = BehaviorState::new(0.0);
        let frame = PerceptionFrame {
            timestamp: 0.01,
            visitors: vec![visitor(7, 2.0, 0.0, true)],
        };
        let (next, cmd) = step(&state, &frame, 0.01, &config).unwrap();
        assert_eq!(next.mode, Mode::Greet);
        assert_eq!(next.engaged_visitor, Some(7));
        assert_eq!(cmd.face_animation, FaceTag::Wave);
        assert!(next.cooldowns.contains_key(&CooldownKey::Greet(7)));
    }

    #[test]
    fn greet_bow_mirror_sequence_then_sleep_after_departure() {
        let config = cfg();
        let mut state = BehaviorState::new(0.0);
        let dt = 0.01;
        let mut modes = Vec::new();
        let mut t = 0.0;
        // Visitor present for 10 s, then gone.
        for k in 1..=4000 {
            t = k as f64 * dt;
            let frame = if t <= 10.0 {
                PerceptionFrame {
                    timestamp: t,
                    visitors: vec![visitor(1, 1.5, 0.1, true)],
                }
            } else {
                empty_frame(t)
            };
            let (next, _) = step(&state, &frame, dt, &config).unwrap();
            if next.mode != state.mode {
                modes.push(next.mode);
            }
            assert!(next.invariants_hold());
            state = next;
        }
        assert_eq!(
            modes,
            vec![Mode::Greet, Mode::Bow, Mode::MirrorTrack, Mode::Sleep],
            "mode sequence"
        );
        // Sleep entered sleep_timeout after the visitor left.
        assert!(t >= 10.0 + config.behavior.sleep_timeout);
    }

    #[test]
    fn select_target_prefers_nearest_then_lower_id() {
        let frame = PerceptionFrame {
            timestamp: 0.0,
            visitors: vec![visitor(2, 2.0, 0.0, true), visitor(5, 1.0, 0.0, true)],
        };
        assert_eq!(select_target(&frame), Some(5));
        assert_eq!(select_target(&empty_frame(0.0)), None);
        let tie = PerceptionFrame {
            timestamp: 0.0,
            visitors: vec![visitor(9, 1.5, 0.0, true), visitor(3, 0.0, 1.5, true)],
        };
        assert_eq!(select_target(&tie), Some(3));
    }

    #[test]
    fn out_of_fov_visitors_are_not_targets() {
        let frame = PerceptionFrame {
            timestamp: 0.0,
            visitors: vec![visitor(1, 1.0, 0.0, false)],
        };
        assert_eq!(select_target(&frame), None);
    }

    #[test]
    fn mirror_map_swaps_sides_and_clamps_abduction() {
        let config = cfg();
        let (l, r, clamped) =
            mirror_map(ArmEstimate::default(), ArmEstimate::default(), &config);
        assert_eq!((l, r), (ArmTargets::default(), ArmTargets::default()));
        assert!(!clamped);

        let (l, r, clamped) = mirror_map(
            ArmEstimate {
                flexion: 0.0,
                abduction: 90f64.to_radians(),
            },
            ArmEstimate::default(),
            &config,
        );
        // Visitor left arm drives the robot right arm.
        assert!((r.q_abd - 70f64.to_radians()).abs() < 1e-12);
        assert_eq!(l.q_abd, 0.0);
        assert!(clamped);

        let raised = ArmEstimate {
            flexion: 0.5,
            abduction: 0.0,
        };
        let (l, r, _) = mirror_map(raised, ArmEstimate::default(), &config);
        assert_eq!(l.q_circ, 0.0, "robot left follows visitor right");
        assert_eq!(r.q_circ, 0.5);
    }

    #[test]
    fn turret_tracking_saturates_and_respects_deadband() {
        let config = cfg();
        // Dead ahead: aligned.
        assert_eq!(track_turret((2.0, 0.0), 0.01, &config), 0.0);
        // Directly behind with the default gain: saturate at the limit.
        let rate = track_turret((-2.0, 1e-9), 0.01, &config);
        assert!((rate - config.max_turret_rate).abs() < 1e-9);
        // Just inside the deadband: zero.
        let eps = config.behavior.turret_deadband * 0.5;
        let y = 2.0 * eps.tan();
        assert_eq!(track_turret((2.0, y), 0.01, &config), 0.0);
    }

    #[test]
    fn turret_tracking_never_overshoots_in_one_step() {
        let config = cfg();
        let bearing = 0.1f64;
        let rate = track_turret((bearing.cos(), bearing.sin()), 1.0, &config);
        assert!(rate <= bearing + 1e-12);
    }

    #[test]
    fn greet_cooldown_blocks_regreeting() {
        let config = cfg();
        let mut state = BehaviorState::new(0.0);
        let dt = 0.1;
        let mut greets = 0;
        let total = (2.5 * config.behavior.greet_cooldown / dt) as usize;
        for k in 1..=total {
            let t = k as f64 * dt;
            let frame = PerceptionFrame {
                timestamp: t,
                visitors: vec![visitor(4, 2.0, 0.0, true)],
            };
            let (next, _) = step(&state, &frame, dt, &config).unwrap();
            if next.mode == Mode::Greet && state.mode != Mode::Greet {
                greets += 1;
                // No greet may fire before its recorded expiry.
                assert!(state.cooldown_expired(CooldownKey::Greet(4), t));
            }
            state = next;
        }
        let window = total as f64 * dt;
        let bound = (window / config.behavior.greet_cooldown).ceil() as usize;
        assert!(greets >= 2, "expected the visitor to be re-greeted");
        assert!(greets <= bound, "{greets} greets in {window} s");
    }

    #[test]
    fn lingering_unseen_visitors_cause_a_dance() {
        let config = cfg();
        let mut state = BehaviorState::new(0.0);
        let dt = 0.05;
        let mut danced = false;
        for k in 1..=200 {
            let t = k as f64 * dt;
            let frame = PerceptionFrame {
                timestamp: t,
                visitors: vec![visitor(2, -3.0, 0.0, false)],
            };
            let (next, cmd) = step(&state, &frame, dt, &config).unwrap();
            if next.mode == Mode::AttractDance {
                danced = true;
                assert_eq!(cmd.face_animation, FaceTag::Dance);
                assert!(cmd.turret_rate.abs() <= config.max_turret_rate);
            }
            state = next;
        }
        assert!(danced);
    }

    #[test]
    fn non_monotone_timestamp_rejected() {
        let config = cfg();
        let state = BehaviorState {
            last_timestamp: Some(1.0),
            ..BehaviorState::new(0.0)
        };
        assert!(matches!(
            step(&state, &empty_frame(1.0), 0.01, &config),
            Err(BehaviorError::NonMonotoneTimestamp { .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let config = cfg();
        let state = BehaviorState::new(0.0);
        let frame = PerceptionFrame {
            timestamp: 0.5,
            visitors: vec![visitor(3, 1.0, 0.0, true), visitor(3, 2.0, 0.0, true)],
        };
        assert!(matches!(
            step(&state, &frame, 0.01, &config),
            Err(BehaviorError::DuplicateVisitorId(3))
        ));
    }

    #[test]
    fn sleep_always_reached_from_any_state_on_empty_frames() {
        // Exhaustive FSM-level enumeration: every mode, engagement and
        // cooldown configuration converges to Sleep within the timeout.
        let config = cfg();
        let dt = 0.05;
        let modes = [
            Mode::Sleep,
            Mode::Greet,
            Mode::Bow,
            Mode::MirrorTrack,
            Mode::AttractDance,
        ];
        for mode in modes {
            for cooldown_state in 0..3 {
                for entered_ago in [0.0, 1.0, 10.0] {
                    let engaged = matches!(mode, Mode::Greet | Mode::Bow | Mode::MirrorTrack)
                        .then_some(1u64);
                    let mut cooldowns = BTreeMap::new();
                    if cooldown_state >= 1 {
                        cooldowns.insert(CooldownKey::Greet(1), 100.0);
                    }
                    if cooldown_state == 2 {
                        cooldowns.insert(CooldownKey::Dance, 100.0);
                    }
                    let mut state = BehaviorState {
                        mode,
                        engaged_visitor: engaged,
                        cooldowns,
                        last_seen: 0.0,
                        mode_entered: -entered_ago,
                        last_timestamp: Some(0.0),
                    };
                    let steps = (config.behavior.sleep_timeout / dt).ceil() as usize + 1;
                    for k in 1..=steps {
                        let (next, _) =
                            step(&state, &empty_frame(k as f64 * dt), dt, &config).unwrap();
                        state = next;
                    }
                    assert_eq!(
                        state.mode,
                        Mode::Sleep,
                        "stuck in {:?} from {mode:?}/{cooldown_state}/{entered_ago}",
                        state.mode
                    );
                }
            }
        }
    }

    #[test]
    fn identical_streams_produce_identical_commands() {
        let config = cfg();
        let run = || {
            let mut state = BehaviorState::new(0.0);
            let mut log = Vec::new();
            for k in 1..=600 {
                let t = k as f64 * 0.01;
                let frame = if (2.0..6.0).contains(&t) {
                    PerceptionFrame {
                        timestamp: t,
                        visitors: vec![visitor(1, 2.0 - 0.1 * t, 0.3, true)],
                    }
                } else {
                    empty_frame(t)
                };
                let (next, cmd) = step(&state, &frame, 0.01, &config).unwrap();
                log.push(cmd);
                state = next;
            }
            log
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }
}
