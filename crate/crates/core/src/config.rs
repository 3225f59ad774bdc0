//! Platform configuration: physical constants, limits, mass and cost
//! rollups, battery and power-path behavior.
//!
//! Everything the other modules treat as a constant lives here, loadable
//! from a flat `key = value` text document so no number is baked in. The
//! defaults reproduce the shipped platform: a 48 cm base limited to
//! 0.6 m/s, arm motors capped at 0.15 Nm and 16 rev/s, a waist that bows
//! 30 degrees forward and leans 15 degrees back, and a 12 V 40 Ah battery
//! that doubles as the waist counterweight.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::angles::deg;
use crate::behavior::BehaviorParams;
use crate::head::{ProjectorSpec, SphereMapCalibration};
use crate::sensors::{CameraMount, LaserMount, Occluder, SpeakerSpec};
use crate::waist::{TorsoMassModel, WaistLimits};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("invalid {what}: {msg}")]
    Domain { what: &'static str, msg: String },
}

#[derive(Debug, Error)]
pub enum BomError {
    #[error("BOM parse error: {0}")]
    Parse(String),
    #[error("BOM row {row} ({item}): {msg}")]
    Invalid {
        row: usize,
        item: String,
        msg: String,
    },
}

/// Battery pack parameters. The stock pack is sealed lead-acid, chosen in
/// part for the mass that the waist counterbalance re-uses.
#[derive(Debug, Clone, PartialEq)]
pub struct BatterySpec {
    pub voltage: f64,
    pub capacity_ah: f64,
    pub mass_kg: f64,
    pub chemistry: String,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            voltage: 12.0,
            capacity_ah: 40.0,
            mass_kg: 12.0,
            chemistry: "SLA-AGM".to_string(),
        }
    }
}

/// Ideal untethered runtime in hours for a constant power draw.
pub fn power_runtime(battery: &BatterySpec, draw_watts: f64) -> Result<f64, ConfigError> {
    if !(draw_watts > 0.0) {
        return Err(ConfigError::Domain {
            what: "power draw",
            msg: format!("draw must be positive, got {draw_watts} W"),
        });
    }
    Ok(battery.voltage * battery.capacity_ah / draw_watts)
}

/// Power-path flags. The emergency stop cuts the motor bus only; compute
/// and projector stay powered so the system keeps running headless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerState {
    pub estop_engaged: bool,
    pub motor_bus_on: bool,
    pub compute_bus_on: bool,
    pub projector_on: bool,
}

impl PowerState {
    pub fn all_on() -> Self {
        Self {
            estop_engaged: false,
            motor_bus_on: true,
            compute_bus_on: true,
            projector_on: true,
        }
    }

    pub fn is_consistent(&self) -> bool {
        !(self.estop_engaged && self.motor_bus_on)
    }
}

/// Engage or release the emergency stop.
///
/// Engaging drops the motor bus and nothing else. Releasing leaves the
/// motor bus off; it must be re-enabled explicitly.
pub fn apply_estop(state: PowerState, engaged: bool) -> PowerState {
    let mut next = state;
    next.estop_engaged = engaged;
    if engaged {
        next.motor_bus_on = false;
    }
    next
}

/// Re-enable the motor bus after an e-stop release. No-op (false) while
/// the stop is still engaged.
pub fn enable_motor_bus(state: &mut PowerState) -> bool {
    if state.estop_engaged {
        return false;
    }
    state.motor_bus_on = true;
    true
}

/// One bill-of-materials line. Currency is stored as integer cents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BomLine {
    pub subsystem: String,
    pub item: String,
    pub qty: u32,
    pub unit_cost_cents: i64,
    pub subtotal_cents: i64,
}

/// Parsed bill of materials.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BomTable {
    pub lines: Vec<BomLine>,
}

impl BomTable {
    /// Parse CSV with header `subsystem,item,qty,unit_cost_usd,subtotal_usd`
    /// and validate every line.
    pub fn from_csv(text: &str) -> Result<Self, BomError> {
        #[derive(serde::Deserialize)]
        struct Record {
            subsystem: String,
            item: String,
            qty: u32,
            unit_cost_usd: f64,
            subtotal_usd: f64,
        }

        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut lines = Vec::new();
        for (i, result) in reader.deserialize::<Record>().enumerate() {
            let row = i + 2; // header is line 1
            let rec = result.map_err(|e| BomError::Parse(format!("row {row}: {e}")))?;
            let line = BomLine {
                subsystem: rec.subsystem,
                item: rec.item,
                qty: rec.qty,
                unit_cost_cents: dollars_to_cents(rec.unit_cost_usd),
                subtotal_cents: dollars_to_cents(rec.subtotal_usd),
            };
            line.validate().map_err(|msg| BomError::Invalid {
                row,
                item: line.item.clone(),
                msg,
            })?;
            lines.push(line);
        }
        Ok(Self { lines })
    }

    /// Sum of printed subtotals, in cents.
    pub fn total_cents(&self) -> i64 {
        self.lines.iter().map(|l| l.subtotal_cents).sum()
    }

    pub fn total_usd(&self) -> f64 {
        self.total_cents() as f64 / 100.0
    }
}

impl BomLine {
    /// Nonnegative costs; subtotal consistent with qty x unit cost up to
    /// one dollar per unit (source tables print costs rounded to dollars).
    pub fn validate(&self) -> Result<(), String> {
        if self.unit_cost_cents < 0 || self.subtotal_cents < 0 {
            return Err("negative cost".to_string());
        }
        let expected = self.qty as i64 * self.unit_cost_cents;
        let slack = 100 * self.qty.max(1) as i64;
        if (self.subtotal_cents - expected).abs() > slack {
            return Err(format!(
                "subtotal {} inconsistent with qty {} x unit {}",
                self.subtotal_cents, self.qty, self.unit_cost_cents
            ));
        }
        Ok(())
    }
}

fn dollars_to_cents(usd: f64) -> i64 {
    (usd * 100.0).round() as i64
}

/// All physical parameters of the platform with shipped defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformConfig {
    // Base geometry and limits.
    pub base_diameter: f64,
    pub wheel_radius: f64,
    pub half_track: f64,
    /// Offset of the turret axis from the drive wheel axis (m). Must be
    /// positive: this offset is what makes the base holonomic.
    pub turret_offset_a: f64,
    pub max_linear_speed: f64,
    pub max_turret_rate: f64,
    // Arm transmission.
    pub arm_gear_ratio: f64,
    pub arm_motor_torque_max: f64,
    /// Motor no-load speed in revolutions per second.
    pub arm_motor_speed_max_rps: f64,
    pub arm_abduction_limit: f64,
    pub arm_clutch_torque: f64,
    pub output_encoder_res_deg: f64,
    pub motor_encoder_res_deg: f64,
    // Waist.
    pub waist_limits: WaistLimits,
    pub waist_model: TorsoMassModel,
    // Head.
    pub head_radius: f64,
    pub head_map: SphereMapCalibration,
    pub projector: ProjectorSpec,
    // Sensors.
    pub camera: CameraMount,
    pub laser: LaserMount,
    pub speaker: SpeakerSpec,
    // Behavior engine timings.
    pub behavior: BehaviorParams,
    // Rollups and power.
    pub mass_table: BTreeMap<String, f64>,
    pub battery: BatterySpec,
    // Simulation.
    pub sim_dt: f64,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        let mut mass_table = BTreeMap::new();
        mass_table.insert("base".to_string(), 9.8);
        mass_table.insert("arm".to_string(), 2.1);
        mass_table.insert("waist_torso".to_string(), 29.5);
        mass_table.insert("head".to_string(), 2.0);
        Self {
            base_diameter: 0.48,
            wheel_radius: 0.05,
            half_track: 0.15,
            turret_offset_a: 0.10,
            max_linear_speed: 0.6,
            max_turret_rate: PI,
            arm_gear_ratio: 83.8,
            arm_motor_torque_max: 0.15,
            arm_motor_speed_max_rps: 16.0,
            arm_abduction_limit: deg(70.0),
            arm_clutch_torque: 4.0,
            output_encoder_res_deg: 0.022,
            motor_encoder_res_deg: 0.075,
            waist_limits: WaistLimits::default(),
            waist_model: TorsoMassModel::default(),
            head_radius: 0.1,
            head_map: SphereMapCalibration::default(),
            projector: ProjectorSpec::default(),
            camera: CameraMount::default(),
            laser: LaserMount::default(),
            speaker: SpeakerSpec::default(),
            behavior: BehaviorParams::default(),
            mass_table,
            battery: BatterySpec::default(),
            sim_dt: 0.01,
        }
    }
}

impl PlatformConfig {
    /// Parse a `key = value` document. Lines are independent, `#` starts a
    /// comment, unknown keys are an error, missing keys keep defaults.
    pub fn load(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(key, value).map_err(|msg| ConfigError::Parse {
                line: line_no,
                msg,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num(value: &str) -> Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|_| format!("expected a number, got `{value}`"))
        }
        fn boolean(value: &str) -> Result<bool, String> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("expected true/false, got `{value}`")),
            }
        }

        if let Some(module) = key.strip_prefix("mass.") {
            if module.is_empty() {
                return Err("mass key needs a module name, e.g. `mass.base`".to_string());
            }
            self.mass_table.insert(module.to_string(), num(value)?);
            return Ok(());
        }

        match key {
            "base.diameter" => self.base_diameter = num(value)?,
            "base.wheel_radius" => self.wheel_radius = num(value)?,
            "base.half_track" => self.half_track = num(value)?,
            "base.turret_offset" => self.turret_offset_a = num(value)?,
            "base.max_linear_speed" => self.max_linear_speed = num(value)?,
            "base.max_turret_rate" => self.max_turret_rate = num(value)?,
            "arm.gear_ratio" => self.arm_gear_ratio = num(value)?,
            "arm.motor_torque_max" => self.arm_motor_torque_max = num(value)?,
            "arm.motor_speed_max_rps" => self.arm_motor_speed_max_rps = num(value)?,
            "arm.abduction_limit_deg" => self.arm_abduction_limit = deg(num(value)?),
            "arm.clutch_torque" => self.arm_clutch_torque = num(value)?,
            "arm.output_encoder_res_deg" => self.output_encoder_res_deg = num(value)?,
            "arm.motor_encoder_res_deg" => self.motor_encoder_res_deg = num(value)?,
            "waist.forward_limit_deg" => self.waist_limits.forward = deg(num(value)?),
            "waist.back_limit_deg" => self.waist_limits.back = deg(num(value)?),
            "waist.m_upper" => self.waist_model.m_upper = num(value)?,
            "waist.l_upper" => self.waist_model.l_upper = num(value)?,
            "waist.m_arm" => self.waist_model.m_arm = num(value)?,
            "waist.l_shoulder" => self.waist_model.l_shoulder = num(value)?,
            "waist.l_arm" => self.waist_model.l_arm = num(value)?,
            "waist.m_lower" => self.waist_model.m_lower = num(value)?,
            "waist.l_lower" => self.waist_model.l_lower = num(value)?,
            "waist.extra_inertia" => self.waist_model.extra_inertia = num(value)?,
            "waist.damper_torque" => self.waist_model.damper_torque = num(value)?,
            "head.radius" => self.head_radius = num(value)?,
            "head.rho_min_px" => self.head_map.rho_min = num(value)?,
            "head.rho_max_px" => self.head_map.rho_max = num(value)?,
            "head.theta_top_deg" => self.head_map.theta_top = deg(num(value)?),
            "head.theta_max_deg" => self.head_map.theta_max = deg(num(value)?),
            "projector.lumens" => self.projector.rated_lumens = num(value)?,
            "projector.lifetime_hours" => self.projector.lifetime_hours = num(value)?,
            "projector.width_px" => {
                self.projector.width_px = num(value)? as u32;
                self.head_map.image_width = self.projector.width_px;
            }
            "projector.height_px" => {
                self.projector.height_px = num(value)? as u32;
                self.head_map.image_height = self.projector.height_px;
            }
            "battery.voltage" => self.battery.voltage = num(value)?,
            "battery.capacity_ah" => self.battery.capacity_ah = num(value)?,
            "battery.mass_kg" => self.battery.mass_kg = num(value)?,
            "battery.chemistry" => self.battery.chemistry = value.to_string(),
            "camera.h_fov_deg" => self.camera.h_fov = deg(num(value)?),
            "camera.v_fov_deg" => self.camera.v_fov = deg(num(value)?),
            "camera.tilt_deg" => self.camera.manual_tilt = deg(num(value)?),
            "camera.tilt_range_deg" => self.camera.tilt_range = deg(num(value)?),
            "camera.mount_height" => self.camera.mount_height = num(value)?,
            "laser.range_max" => self.laser.range_max = num(value)?,
            "laser.mount_offset" => self.laser.mount_offset = num(value)?,
            "laser.intrinsic_fov_deg" => self.laser.intrinsic_fov_deg = num(value)?,
            "laser.occluders" => self.laser.occluders = parse_occluders(value)?,
            "speaker.reference_spl_db" => self.speaker.reference_spl_db = num(value)?,
            "speaker.reference_distance" => self.speaker.reference_distance = num(value)?,
            "behavior.greet_duration_s" => self.behavior.greet_duration = num(value)?,
            "behavior.bow_duration_s" => self.behavior.bow_duration = num(value)?,
            "behavior.greet_cooldown_s" => self.behavior.greet_cooldown = num(value)?,
            "behavior.dance_duration_s" => self.behavior.dance_duration = num(value)?,
            "behavior.dance_cooldown_s" => self.behavior.dance_cooldown = num(value)?,
            "behavior.sleep_timeout_s" => self.behavior.sleep_timeout = num(value)?,
            "behavior.turret_deadband_deg" => self.behavior.turret_deadband = deg(num(value)?),
            "behavior.track_gain" => self.behavior.track_gain = num(value)?,
            "behavior.museum_mode" => self.behavior.museum_mode = boolean(value)?,
            "behavior.visitor_chest_height" => self.behavior.visitor_chest_height = num(value)?,
            "sim.dt" => self.sim_dt = num(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Check every invariant, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    key: key.to_string(),
                    msg: format!("must be positive, got {v}"),
                })
            }
        }
        fn nonnegative(key: &str, v: f64) -> Result<(), ConfigError> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    key: key.to_string(),
                    msg: format!("must be nonnegative, got {v}"),
                })
            }
        }

        positive("base.diameter", self.base_diameter)?;
        positive("base.wheel_radius", self.wheel_radius)?;
        positive("base.half_track", self.half_track)?;
        positive("base.turret_offset", self.turret_offset_a)?;
        positive("base.max_linear_speed", self.max_linear_speed)?;
        positive("base.max_turret_rate", self.max_turret_rate)?;
        if self.arm_gear_ratio <= 1.0 {
            return Err(ConfigError::Invalid {
                key: "arm.gear_ratio".to_string(),
                msg: format!("total reduction must exceed 1, got {}", self.arm_gear_ratio),
            });
        }
        positive("arm.motor_torque_max", self.arm_motor_torque_max)?;
        positive("arm.motor_speed_max_rps", self.arm_motor_speed_max_rps)?;
        if !(self.arm_abduction_limit > 0.0 && self.arm_abduction_limit <= PI / 2.0) {
            return Err(ConfigError::Invalid {
                key: "arm.abduction_limit_deg".to_string(),
                msg: "abduction limit must be in (0, 90] degrees".to_string(),
            });
        }
        positive("arm.clutch_torque", self.arm_clutch_torque)?;
        let clutch_ceiling = self.arm_gear_ratio * self.arm_motor_torque_max;
        if self.arm_clutch_torque > clutch_ceiling {
            return Err(ConfigError::Invalid {
                key: "arm.clutch_torque".to_string(),
                msg: format!(
                    "clutch torque {} exceeds gear_ratio x motor_torque_max = {clutch_ceiling}",
                    self.arm_clutch_torque
                ),
            });
        }
        positive("arm.output_encoder_res_deg", self.output_encoder_res_deg)?;
        positive("arm.motor_encoder_res_deg", self.motor_encoder_res_deg)?;
        positive("waist.forward_limit_deg", self.waist_limits.forward)?;
        positive("waist.back_limit_deg", self.waist_limits.back)?;
        nonnegative("waist.m_upper", self.waist_model.m_upper)?;
        nonnegative("waist.l_upper", self.waist_model.l_upper)?;
        nonnegative("waist.m_arm", self.waist_model.m_arm)?;
        nonnegative("waist.l_shoulder", self.waist_model.l_shoulder)?;
        nonnegative("waist.l_arm", self.waist_model.l_arm)?;
        nonnegative("waist.m_lower", self.waist_model.m_lower)?;
        nonnegative("waist.l_lower", self.waist_model.l_lower)?;
        nonnegative("waist.extra_inertia", self.waist_model.extra_inertia)?;
        nonnegative("waist.damper_torque", self.waist_model.damper_torque)?;
        positive("head.radius", self.head_radius)?;
        self.head_map.validate().map_err(|msg| ConfigError::Invalid {
            key: "head.rho_min_px".to_string(),
            msg,
        })?;
        positive("projector.lumens", self.projector.rated_lumens)?;
        positive("projector.lifetime_hours", self.projector.lifetime_hours)?;
        positive("projector.width_px", self.projector.width_px as f64)?;
        positive("projector.height_px", self.projector.height_px as f64)?;
        positive("battery.voltage", self.battery.voltage)?;
        positive("battery.capacity_ah", self.battery.capacity_ah)?;
        nonnegative("battery.mass_kg", self.battery.mass_kg)?;
        positive("camera.h_fov_deg", self.camera.h_fov)?;
        positive("camera.v_fov_deg", self.camera.v_fov)?;
        if self.camera.manual_tilt.abs() > self.camera.tilt_range + 1e-12 {
            return Err(ConfigError::Invalid {
                key: "camera.tilt_deg".to_string(),
                msg: format!(
                    "manual tilt exceeds +/-{} degree mount range",
                    self.camera.tilt_range.to_degrees()
                ),
            });
        }
        positive("camera.mount_height", self.camera.mount_height)?;
        positive("laser.range_max", self.laser.range_max)?;
        nonnegative("laser.mount_offset", self.laser.mount_offset)?;
        if self.laser.mount_offset >= self.base_diameter / 2.0 {
            return Err(ConfigError::Invalid {
                key: "laser.mount_offset".to_string(),
                msg: "sensor offset must stay inside the base radius".to_string(),
            });
        }
        positive("laser.intrinsic_fov_deg", self.laser.intrinsic_fov_deg)?;
        for occ in &self.laser.occluders {
            if !(occ.width_deg > 0.0) {
                return Err(ConfigError::Invalid {
                    key: "laser.occluders".to_string(),
                    msg: "occluder widths must be positive".to_string(),
                });
            }
        }
        positive("speaker.reference_distance", self.speaker.reference_distance)?;
        for (module, mass) in &self.mass_table {
            nonnegative(&format!("mass.{module}"), *mass)?;
        }
        positive("behavior.greet_duration_s", self.behavior.greet_duration)?;
        positive("behavior.bow_duration_s", self.behavior.bow_duration)?;
        positive("behavior.greet_cooldown_s", self.behavior.greet_cooldown)?;
        positive("behavior.dance_duration_s", self.behavior.dance_duration)?;
        positive("behavior.dance_cooldown_s", self.behavior.dance_cooldown)?;
        positive("behavior.sleep_timeout_s", self.behavior.sleep_timeout)?;
        nonnegative("behavior.turret_deadband_deg", self.behavior.turret_deadband)?;
        positive("behavior.track_gain", self.behavior.track_gain)?;
        positive("behavior.visitor_chest_height", self.behavior.visitor_chest_height)?;
        positive("sim.dt", self.sim_dt)?;
        Ok(())
    }

    /// Emit the full configuration as a loadable document. `load(serialize(c))`
    /// reproduces `c` exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |key: &str, v: String| {
            let _ = writeln!(out, "{key} = {v}");
        };
        let f = |v: f64| format!("{v:?}");
        let d = |v: f64| format!("{:?}", v.to_degrees());
        kv("base.diameter", f(self.base_diameter));
        kv("base.wheel_radius", f(self.wheel_radius));
        kv("base.half_track", f(self.half_track));
        kv("base.turret_offset", f(self.turret_offset_a));
        kv("base.max_linear_speed", f(self.max_linear_speed));
        kv("base.max_turret_rate", f(self.max_turret_rate));
        kv("arm.gear_ratio", f(self.arm_gear_ratio));
        kv("arm.motor_torque_max", f(self.arm_motor_torque_max));
        kv("arm.motor_speed_max_rps", f(self.arm_motor_speed_max_rps));
        kv("arm.abduction_limit_deg", d(self.arm_abduction_limit));
        kv("arm.clutch_torque", f(self.arm_clutch_torque));
        kv("arm.output_encoder_res_deg", f(self.output_encoder_res_deg));
        kv("arm.motor_encoder_res_deg", f(self.motor_encoder_res_deg));
        kv("waist.forward_limit_deg", d(self.waist_limits.forward));
        kv("waist.back_limit_deg", d(self.waist_limits.back));
        kv("waist.m_upper", f(self.waist_model.m_upper));
        kv("waist.l_upper", f(self.waist_model.l_upper));
        kv("waist.m_arm", f(self.waist_model.m_arm));
        kv("waist.l_shoulder", f(self.waist_model.l_shoulder));
        kv("waist.l_arm", f(self.waist_model.l_arm));
        kv("waist.m_lower", f(self.waist_model.m_lower));
        kv("waist.l_lower", f(self.waist_model.l_lower));
        kv("waist.extra_inertia", f(self.waist_model.extra_inertia));
        kv("waist.damper_torque", f(self.waist_model.damper_torque));
        kv("head.radius", f(self.head_radius));
        kv("head.rho_min_px", f(self.head_map.rho_min));
        kv("head.rho_max_px", f(self.head_map.rho_max));
        kv("head.theta_top_deg", d(self.head_map.theta_top));
        kv("head.theta_max_deg", d(self.head_map.theta_max));
        kv("projector.lumens", f(self.projector.rated_lumens));
        kv("projector.lifetime_hours", f(self.projector.lifetime_hours));
        kv("projector.width_px", self.projector.width_px.to_string());
        kv("projector.height_px", self.projector.height_px.to_string());
        kv("battery.voltage", f(self.battery.voltage));
        kv("battery.capacity_ah", f(self.battery.capacity_ah));
        kv("battery.mass_kg", f(self.battery.mass_kg));
        kv("battery.chemistry", self.battery.chemistry.clone());
        kv("camera.h_fov_deg", d(self.camera.h_fov));
        kv("camera.v_fov_deg", d(self.camera.v_fov));
        kv("camera.tilt_deg", d(self.camera.manual_tilt));
        kv("camera.tilt_range_deg", d(self.camera.tilt_range));
        kv("camera.mount_height", f(self.camera.mount_height));
        kv("laser.range_max", f(self.laser.range_max));
        kv("laser.mount_offset", f(self.laser.mount_offset));
        kv("laser.intrinsic_fov_deg", f(self.laser.intrinsic_fov_deg));
        kv(
            "laser.occluders",
            self.laser
                .occluders
                .iter()
                .map(|o| format!("{:?}:{:?}", o.bearing_deg, o.width_deg))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("speaker.reference_spl_db", f(self.speaker.reference_spl_db));
        kv("speaker.reference_distance", f(self.speaker.reference_distance));
        kv("behavior.greet_duration_s", f(self.behavior.greet_duration));
        kv("behavior.bow_duration_s", f(self.behavior.bow_duration));
        kv("behavior.greet_cooldown_s", f(self.behavior.greet_cooldown));
        kv("behavior.dance_duration_s", f(self.behavior.dance_duration));
        kv("behavior.dance_cooldown_s", f(self.behavior.dance_cooldown));
        kv("behavior.sleep_timeout_s", f(self.behavior.sleep_timeout));
        kv("behavior.turret_deadband_deg", d(self.behavior.turret_deadband));
        kv("behavior.track_gain", f(self.behavior.track_gain));
        kv("behavior.museum_mode", self.behavior.museum_mode.to_string());
        kv(
            "behavior.visitor_chest_height",
            f(self.behavior.visitor_chest_height),
        );
        kv("sim.dt", f(self.sim_dt));
        for (module, mass) in &self.mass_table {
            let _ = writeln!(out, "mass.{module} = {mass:?}");
        }
        out
    }

    /// SHA-256 of the serialized configuration, for run-log headers.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.serialize().as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    /// Total platform mass in kg. The `arm` entry counts twice, one per arm.
    pub fn mass_total(&self) -> f64 {
        mass_table_total(&self.mass_table)
    }
}

/// Sum a module mass table; the `arm` entry counts twice.
pub fn mass_table_total(table: &BTreeMap<String, f64>) -> f64 {
    table
        .iter()
        .map(|(module, kg)| if module == "arm" { 2.0 * kg } else { *kg })
        .sum()
}

/// The bill of materials shipped with the platform.
pub fn shipped_bom_csv() -> &'static str {
    include_str!("../data/bom_table.csv")
}

/// The annotated default configuration document.
pub fn default_config_text() -> &'static str {
    include_str!("../data/default.cfg")
}

fn parse_occluders(value: &str) -> Result<Vec<Occluder>, String> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|pair| {
            let (bearing, width) = pair
                .split_once(':')
                .ok_or_else(|| format!("expected `bearing:width`, got `{pair}`"))?;
            Ok(Occluder {
                bearing_deg: bearing
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad occluder bearing `{bearing}`"))?,
                width_deg: width
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad occluder width `{width}`"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = PlatformConfig::load("").unwrap();
        assert_eq!(cfg, PlatformConfig::default());
        assert_eq!(cfg.max_linear_speed, 0.6);
        assert_eq!(cfg.max_turret_rate, PI);
        assert_eq!(cfg.battery.voltage, 12.0);
        assert_eq!(cfg.battery.capacity_ah, 40.0);
    }

    #[test]
    fn override_passes_through() {
        let cfg = PlatformConfig::load("base.wheel_radius = 0.06\n").unwrap();
        assert_eq!(cfg.wheel_radius, 0.06);
        let mut expected = PlatformConfig::default();
        expected.wheel_radius = 0.06;
        assert_eq!(cfg, expected);
    }

    #[test]
    fn zero_turret_offset_rejected() {
        let err = PlatformConfig::load("base.turret_offset = 0\n").unwrap_err();
        match err {
            ConfigError::Invalid { key, .. } => assert_eq!(key, "base.turret_offset"),
            other => panic!("expected invalid-key error, got {other}"),
        }
    }

    #[test]
    fn unknown_key_is_an_error_with_line() {
        let err = PlatformConfig::load("# fine\nbase.wheel_radius = 0.05\nbase.whel_radius = 0.05\n")
            .unwrap_err();
        match err {
            ConfigError::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("unknown key"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn garbage_line_reports_line_number() {
        let err = PlatformConfig::load("base.wheel_radius 0.05\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = PlatformConfig::load("\n# comment\nbase.half_track = 0.2 # trailing\n\n").unwrap();
        assert_eq!(cfg.half_track, 0.2);
    }

    #[test]
    fn serialize_load_is_a_fixed_point() {
        let cfg = PlatformConfig::default();
        let text = cfg.serialize();
        let reloaded = PlatformConfig::load(&text).unwrap();
        assert_eq!(reloaded, cfg);
        assert_eq!(reloaded.serialize(), text);
        // And again, with a non-default value that does not print cleanly.
        let cfg2 = PlatformConfig::load("base.half_track = 0.1234567890123\n").unwrap();
        let reloaded2 = PlatformConfig::load(&cfg2.serialize()).unwrap();
        assert_eq!(reloaded2, cfg2);
    }

    #[test]
    fn shipped_config_file_is_the_default() {
        let cfg = PlatformConfig::load(default_config_text()).unwrap();
        assert_eq!(cfg, PlatformConfig::default());
    }

    #[test]
    fn hash_tracks_content() {
        let a = PlatformConfig::default();
        let b = PlatformConfig::load("base.wheel_radius = 0.06\n").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), PlatformConfig::default().hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn default_mass_table_totals_45_5() {
        let cfg = PlatformConfig::default();
        assert!((cfg.mass_total() - 45.5).abs() < 1e-12);
    }

    #[test]
    fn mass_total_edge_cases() {
        assert_eq!(mass_table_total(&BTreeMap::new()), 0.0);
        let mut single = BTreeMap::new();
        single.insert("base".to_string(), 9.8);
        assert!((mass_table_total(&single) - 9.8).abs() < 1e-12);
    }

    #[test]
    fn mass_total_is_permutation_invariant_and_additive() {
        // BTreeMap already canonicalizes order; verify additivity over
        // disjoint table concatenation.
        let mut a = BTreeMap::new();
        a.insert("base".to_string(), 9.8);
        a.insert("head".to_string(), 2.0);
        let mut b = BTreeMap::new();
        b.insert("arm".to_string(), 2.1);
        b.insert("waist_torso".to_string(), 29.5);
        let mut ab = a.clone();
        ab.extend(b.clone());
        assert!(
            (mass_table_total(&ab) - (mass_table_total(&a) + mass_table_total(&b))).abs() < 1e-12
        );
    }

    #[test]
    fn bom_single_line_total() {
        let bom = BomTable::from_csv(
            "subsystem,item,qty,unit_cost_usd,subtotal_usd\nArms,Motor modules,4,105,420\n",
        )
        .unwrap();
        assert_eq!(bom.total_cents(), 42000);
        assert_eq!(bom.total_usd(), 420.0);
    }

    #[test]
    fn bom_empty_totals_zero() {
        let bom = BomTable::from_csv("subsystem,item,qty,unit_cost_usd,subtotal_usd\n").unwrap();
        assert_eq!(bom.total_cents(), 0);
    }

    #[test]
    fn bom_negative_entry_rejected() {
        let err = BomTable::from_csv(
            "subsystem,item,qty,unit_cost_usd,subtotal_usd\nArms,Motor modules,4,-105,-420\n",
        )
        .unwrap_err();
        assert!(matches!(err, BomError::Invalid { row: 2, .. }));
    }

    #[test]
    fn bom_inconsistent_subtotal_rejected() {
        let err = BomTable::from_csv(
            "subsystem,item,qty,unit_cost_usd,subtotal_usd\nArms,Motor modules,4,105,9999\n",
        )
        .unwrap_err();
        assert!(matches!(err, BomError::Invalid { .. }));
    }

    #[test]
    fn bom_total_additive_over_concatenation() {
        let head = "subsystem,item,qty,unit_cost_usd,subtotal_usd\n";
        let a = format!("{head}Arms,Motor modules,4,105,420\n");
        let b = format!("{head}Head,Mirror,1,5,5\n");
        let joined = format!("{head}Arms,Motor modules,4,105,420\nHead,Mirror,1,5,5\n");
        let ta = BomTable::from_csv(&a).unwrap().total_cents();
        let tb = BomTable::from_csv(&b).unwrap().total_cents();
        let tj = BomTable::from_csv(&joined).unwrap().total_cents();
        assert_eq!(tj, ta + tb);
    }

    #[test]
    fn power_runtime_hand_checked() {
        let battery = BatterySpec::default();
        assert!((power_runtime(&battery, 96.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((power_runtime(&battery, 480.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(power_runtime(&battery, 0.0).is_err());
        assert!(power_runtime(&battery, -3.0).is_err());
    }

    #[test]
    fn estop_cuts_motors_only() {
        let stopped = apply_estop(PowerState::all_on(), true);
        assert!(stopped.estop_engaged);
        assert!(!stopped.motor_bus_on);
        assert!(stopped.compute_bus_on);
        assert!(stopped.projector_on);
        assert!(stopped.is_consistent());
    }

    #[test]
    fn estop_release_requires_explicit_reenable() {
        let mut state = apply_estop(PowerState::all_on(), true);
        assert!(!enable_motor_bus(&mut state));
        state = apply_estop(state, false);
        assert!(!state.motor_bus_on);
        assert!(enable_motor_bus(&mut state));
        assert!(state.motor_bus_on);
    }

    #[test]
    fn estop_is_idempotent() {
        let once = apply_estop(PowerState::all_on(), true);
        let twice = apply_estop(once, true);
        assert_eq!(once, twice);
    }
}
