//! Executable model of the Quori socially interactive robot platform.
//!
//! Quori is a 1.35 m tall humanoid on a holonomic mobile base: a
//! differential-drive pair carrying a powered turret whose axis is offset
//! from the wheel axis, an upper body with a gravity-compensated one-DoF
//! waist, two 2-DoF shoulders driven through friction-clutch differential
//! transmissions, and a rear-projected animated face on a spherical head.
//!
//! This crate models each of those subsystems with the platform's published
//! limits and verifiable numbers, and ties them together in a deterministic
//! fixed-timestep scenario simulator reproducing the deployed museum
//! interaction behavior (greet, bow, mirror, track, attract, sleep).
//!
//! Modules:
//! * [`config`] - platform constants, limits, bill of materials, power/e-stop
//! * [`base`] - holonomic caster-drive base kinematics and odometry
//! * [`waist`] - waist gravity torque and counterbalance tuning
//! * [`arm`] - shoulder differential transmission, clutch slip, encoders
//! * [`head`] - projector-to-sphere face mapping and rendering
//! * [`sensors`] - camera frustum, laser coverage, speaker level geometry
//! * [`behavior`] - the interaction finite state machine
//! * [`scenario`] - scenario files, the simulation loop, logs and reports

pub mod angles;
pub mod arm;
pub mod base;
pub mod behavior;
pub mod config;
pub mod head;
pub mod raster;
pub mod scenario;
pub mod sensors;
pub mod waist;

pub use config::PlatformConfig;
