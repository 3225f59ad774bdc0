//! The rear-projected animated face.
//!
//! A pocket projector fires at a domed mirror inside the translucent
//! spherical head; the catadioptric path is collapsed into one calibrated
//! radial map between polar angle on the sphere and radius in the
//! projector image. Sphere latitude rings become concentric pixel circles
//! inside an annulus: the top of the head lands on the outer radius
//! (dense, over two thousand pixels per ring) and the neck cutoff on the
//! inner radius (sparse, around two hundred). Because the head is a
//! featureless sphere, rotating the projected face inside the annulus
//! fakes head rotation with no motors.

use std::f64::consts::PI;

use thiserror::Error;

use crate::raster::Image;

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("polar angle {theta:.4} rad outside coverage band [{top:.4}, {max:.4}]")]
    ThetaOutOfBand { theta: f64, top: f64, max: f64 },
    #[error("bad radial profile: {0}")]
    BadProfile(String),
}

/// Projector ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorSpec {
    pub rated_lumens: f64,
    pub lifetime_hours: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl Default for ProjectorSpec {
    fn default() -> Self {
        Self {
            rated_lumens: 300.0,
            lifetime_hours: 20_000.0,
            width_px: 1280,
            height_px: 720,
        }
    }
}

/// Light actually reaching the spherical surface: the head image is a
/// circle inscribed in the projection rectangle, so only that fraction of
/// the rated output is usable.
pub fn usable_lumens(spec: &ProjectorSpec) -> f64 {
    let w = spec.width_px as f64;
    let h = spec.height_px as f64;
    let radius = w.min(h) / 2.0;
    spec.rated_lumens * PI * radius * radius / (w * h)
}

/// Radial calibration between sphere polar angle and image radius.
///
/// The profile is strictly decreasing: the top of the head (small polar
/// angle) maps to the outer annulus radius. The default is linear between
/// the two endpoints; a measured table can replace it.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMapCalibration {
    pub image_width: u32,
    pub image_height: u32,
    pub center_u: f64,
    pub center_v: f64,
    /// Inner annulus radius (px), reached at `theta_max`.
    pub rho_min: f64,
    /// Outer annulus radius (px), reached at `theta_top`.
    pub rho_max: f64,
    /// Polar angle where coverage starts, measured from the top of the
    /// head (rad).
    pub theta_top: f64,
    /// Neck cutoff polar angle (rad).
    pub theta_max: f64,
    /// Measured profile as (theta, rho) knots, strictly decreasing in
    /// rho; empty means the linear default.
    pub profile: Vec<(f64, f64)>,
}

impl Default for SphereMapCalibration {
    fn default() -> Self {
        Self {
            image_width: 1280,
            image_height: 720,
            center_u: 640.0,
            center_v: 360.0,
            rho_min: 32.0,
            rho_max: 320.0,
            theta_top: 0.0,
            theta_max: 135f64.to_radians(),
            profile: Vec::new(),
        }
    }
}

impl SphereMapCalibration {
    pub fn validate(&self) -> Result<(), String> {
        let half_min = self.image_width.min(self.image_height) as f64 / 2.0;
        if !(self.rho_min > 0.0 && self.rho_min < self.rho_max && self.rho_max <= half_min) {
            return Err(format!(
                "annulus radii must satisfy 0 < rho_min < rho_max <= {half_min}, \
                 got [{}, {}]",
                self.rho_min, self.rho_max
            ));
        }
        if !(self.theta_top < self.theta_max) {
            return Err("coverage band must have theta_top < theta_max".to_string());
        }
        for pair in self.profile.windows(2) {
            if !(pair[1].0 > pair[0].0 && pair[1].1 < pair[0].1) {
                return Err("profile knots must be strictly monotone".to_string());
            }
        }
        Ok(())
    }

    /// Replace the linear profile with a measured two-column table
    /// (`theta_deg,rho_px` per line). Endpoints re-pin the coverage band
    /// and annulus.
    pub fn with_profile_csv(mut self, text: &str) -> Result<Self, HeadError> {
        let mut knots = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            // Tolerate a header row on the first data line.
            if idx == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
                continue;
            }
            let (theta, rho) = line
                .split_once(',')
                .ok_or_else(|| HeadError::BadProfile(format!("line {}: expected two columns", idx + 1)))?;
            let theta: f64 = theta.trim().parse().map_err(|_| {
                HeadError::BadProfile(format!("line {}: bad angle `{theta}`", idx + 1))
            })?;
            let rho: f64 = rho.trim().parse().map_err(|_| {
                HeadError::BadProfile(format!("line {}: bad radius `{rho}`", idx + 1))
            })?;
            knots.push((theta.to_radians(), rho));
        }
        if knots.len() < 2 {
            return Err(HeadError::BadProfile("need at least two knots".to_string()));
        }
        self.theta_top = knots.first().unwrap().0;
        self.theta_max = knots.last().unwrap().0;
        self.rho_max = knots.first().unwrap().1;
        self.rho_min = knots.last().unwrap().1;
        self.profile = knots;
        self.validate().map_err(HeadError::BadProfile)?;
        Ok(self)
    }

    pub fn in_band(&self, theta: f64) -> bool {
        (self.theta_top..=self.theta_max).contains(&theta)
    }

    /// Image radius for a polar angle within the coverage band.
    pub fn rho(&self, theta: f64) -> f64 {
        if self.profile.is_empty() {
            let t = (theta - self.theta_top) / (self.theta_max - self.theta_top);
            self.rho_max + t * (self.rho_min - self.rho_max)
        } else {
            interp(&self.profile, theta)
        }
    }

    /// Polar angle for an image radius inside the annulus.
    pub fn theta(&self, rho: f64) -> f64 {
        if self.profile.is_empty() {
            let t = (rho - self.rho_max) / (self.rho_min - self.rho_max);
            self.theta_top + t * (self.theta_max - self.theta_top)
        } else {
            // The table is strictly decreasing in rho; invert by the
            // mirrored interpolation.
            let inverted: Vec<(f64, f64)> =
                self.profile.iter().rev().map(|&(t, r)| (r, t)).collect();
            interp(&inverted, rho)
        }
    }
}

fn interp(knots: &[(f64, f64)], x: f64) -> f64 {
    let first = knots.first().unwrap();
    let last = knots.last().unwrap();
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    for pair in knots.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if x <= x1 {
            return y0 + (x - x0) / (x1 - x0) * (y1 - y0);
        }
    }
    last.1
}

/// Project a sphere point (polar `theta` from the head top, azimuth
/// `lambda`) to projector pixel coordinates.
pub fn sphere_to_image(
    theta: f64,
    lambda: f64,
    calib: &SphereMapCalibration,
) -> Result<(f64, f64), HeadError> {
    if !calib.in_band(theta) {
        return Err(HeadError::ThetaOutOfBand {
            theta,
            top: calib.theta_top,
            max: calib.theta_max,
        });
    }
    let rho = calib.rho(theta);
    Ok((
        calib.center_u + rho * lambda.cos(),
        calib.center_v + rho * lambda.sin(),
    ))
}

/// Where an image pixel lands on the sphere, if anywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereLookup {
    OnHead { theta: f64, lambda: f64 },
    /// Inside the inner hole or beyond the outer radius; not part of the
    /// face. Distinguishable from an error by design.
    OffHead { rho: f64 },
}

/// Invert [`sphere_to_image`] for a pixel position.
pub fn image_to_sphere(u: f64, v: f64, calib: &SphereMapCalibration) -> SphereLookup {
    let du = u - calib.center_u;
    let dv = v - calib.center_v;
    let rho = du.hypot(dv);
    if rho < calib.rho_min || rho > calib.rho_max {
        return SphereLookup::OffHead { rho };
    }
    SphereLookup::OnHead {
        theta: calib.theta(rho),
        lambda: dv.atan2(du),
    }
}

/// Number of distinct projector pixels on the latitude ring at `theta`.
pub fn ring_pixel_count(theta: f64, calib: &SphereMapCalibration) -> Result<u32, HeadError> {
    if !calib.in_band(theta) {
        return Err(HeadError::ThetaOutOfBand {
            theta,
            top: calib.theta_top,
            max: calib.theta_max,
        });
    }
    Ok((2.0 * PI * calib.rho(theta)).round() as u32)
}

/// Face content as an equirectangular raster over the coverage band:
/// columns span azimuth `[0, 2*PI)` (wrapping), rows span polar
/// `[theta_top, theta_max]` (clamping). Pose offsets rotate the rendered
/// face to fake head motion.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTexture {
    pub image: Image,
    /// Azimuth offset (rad); positive turns the face around the head.
    pub yaw_offset: f64,
    /// Polar offset (rad); positive nods the face downward.
    pub pitch_offset: f64,
}

impl FaceTexture {
    pub fn new(image: Image) -> Self {
        Self {
            image,
            yaw_offset: 0.0,
            pitch_offset: 0.0,
        }
    }

    /// Nearest-neighbor sample at sphere coordinates.
    fn sample(&self, theta: f64, lambda: f64, calib: &SphereMapCalibration) -> [u8; 3] {
        let w = self.image.width as f64;
        let h = self.image.height as f64;
        let col = (lambda.rem_euclid(2.0 * PI) / (2.0 * PI) * w).floor();
        let col = (col as i64).clamp(0, self.image.width as i64 - 1) as u32;
        let band = calib.theta_max - calib.theta_top;
        let frac = ((theta - calib.theta_top) / band).clamp(0.0, 1.0);
        let row = ((frac * h).floor() as i64).clamp(0, self.image.height as i64 - 1) as u32;
        self.image.get(col, row)
    }
}

/// Render the projector frame for a face texture.
///
/// Every annulus pixel is inverse-mapped to the sphere, shifted by the
/// pose offsets, and nearest-neighbor sampled; pixels off the annulus are
/// black. Yaw is normalized first so full turns reproduce the frame
/// byte-for-byte.
pub fn render_face(texture: &FaceTexture, calib: &SphereMapCalibration) -> Image {
    let yaw = texture.yaw_offset.rem_euclid(2.0 * PI);
    let mut frame = Image::filled(calib.image_width, calib.image_height, [0, 0, 0]);
    for y in 0..calib.image_height {
        for x in 0..calib.image_width {
            if let SphereLookup::OnHead { theta, lambda } =
                image_to_sphere(x as f64, y as f64, calib)
            {
                let color = texture.sample(theta - texture.pitch_offset, lambda - yaw, calib);
                frame.set(x, y, color);
            }
        }
    }
    frame
}
