//! Field-of-view geometry for the head camera, the base laser scanner,
//! and the chest speaker.
//!
//! The camera FoV is positioned two ways: a manual mount tilt set by
//! hand, and the waist bow, which pitches the whole gaze. The laser sits
//! offset from the base center to push its blind wedges behind the
//! support posts; coverage is interval arithmetic on bearings. The
//! speaker follows plain free-space level falloff from its one published
//! reference point.

use thiserror::Error;

use crate::angles::normalize;
use crate::waist::WaistLimits;

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("waist angle {theta:.4} rad outside limits [-{back:.4}, {forward:.4}]")]
    WaistOutOfLimits { theta: f64, forward: f64, back: f64 },
}

/// Head camera mount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMount {
    /// Horizontal field of view (rad).
    pub h_fov: f64,
    /// Vertical field of view (rad).
    pub v_fov: f64,
    /// Manual tilt of the mount (rad, positive pitches down).
    pub manual_tilt: f64,
    /// Mechanical range of the manual tilt (rad).
    pub tilt_range: f64,
    /// Camera height above the floor (m).
    pub mount_height: f64,
}

impl Default for CameraMount {
    fn default() -> Self {
        Self {
            h_fov: 60f64.to_radians(),
            v_fov: 49.5f64.to_radians(),
            manual_tilt: 0.0,
            tilt_range: 25f64.to_radians(),
            mount_height: 1.2,
        }
    }
}

/// Camera frustum at a given waist bow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrustum {
    /// Effective optical-axis pitch below horizontal (rad).
    pub pitch: f64,
    pub h_half: f64,
    pub v_half: f64,
    /// Floor intersection of the four corner rays, present only when the
    /// whole frustum points below the horizon. Ordered near-left,
    /// near-right, far-right, far-left in robot frame (x forward, y left).
    pub floor_footprint: Option<[(f64, f64); 4]>,
}

/// Compute the camera frustum. Bowing forward pitches the gaze down, so
/// the effective pitch is the manual tilt plus the waist angle.
pub fn camera_frustum(
    mount: &CameraMount,
    waist_theta: f64,
    limits: &WaistLimits,
) -> Result<CameraFrustum, SensorError> {
    if !limits.contains(waist_theta) {
        return Err(SensorError::WaistOutOfLimits {
            theta: waist_theta,
            forward: limits.forward,
            back: limits.back,
        });
    }
    let pitch = mount.manual_tilt + waist_theta;
    let h_half = mount.h_fov / 2.0;
    let v_half = mount.v_fov / 2.0;
    let floor_footprint = if pitch - v_half > 0.0 {
        let corner = |azimuth: f64, elevation: f64| {
            let d = ray_direction(pitch, azimuth, elevation);
            let t = mount.mount_height / -d.2;
            (t * d.0, t * d.1)
        };
        Some([
            corner(-h_half, -v_half), // near (steepest) left
            corner(h_half, -v_half),  // near right
            corner(h_half, v_half),   // far right
            corner(-h_half, v_half),  // far left
        ])
    } else {
        None
    };
    Ok(CameraFrustum {
        pitch,
        h_half,
        v_half,
        floor_footprint,
    })
}

/// Unit ray in robot frame for a camera pitched down by `pitch`, at
/// angular offsets (azimuth left-positive, elevation up-positive) from
/// the optical axis.
fn ray_direction(pitch: f64, azimuth: f64, elevation: f64) -> (f64, f64, f64) {
    // Direction in the unpitched camera frame.
    let x = elevation.cos() * azimuth.cos();
    let y = elevation.cos() * azimuth.sin();
    let z = elevation.sin();
    // Pitch down about the y axis.
    let (sin_p, cos_p) = pitch.sin_cos();
    (x * cos_p + z * sin_p, y, -x * sin_p + z * cos_p)
}

/// Whether a robot-frame point falls inside the camera field of view at
/// the given waist bow. The boundary counts as visible.
pub fn point_in_camera_fov(point: [f64; 3], mount: &CameraMount, waist_theta: f64) -> bool {
    let pitch = mount.manual_tilt + waist_theta;
    let d = [point[0], point[1], point[2] - mount.mount_height];
    let (sin_p, cos_p) = pitch.sin_cos();
    // Components in the pitched camera frame.
    let forward = d[0] * cos_p - d[2] * sin_p;
    let left = d[1];
    let up = d[0] * sin_p + d[2] * cos_p;
    if forward <= 0.0 {
        return false;
    }
    let h_bearing = left.atan2(forward).abs();
    let v_bearing = up.atan2(forward).abs();
    h_bearing <= mount.h_fov / 2.0 + 1e-12 && v_bearing <= mount.v_fov / 2.0 + 1e-12
}

/// One angular shadow cast over the laser by base structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occluder {
    /// Shadow center bearing in the base frame (deg).
    pub bearing_deg: f64,
    pub width_deg: f64,
}

/// Base laser scanner mount.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserMount {
    /// Maximum range about the sensor (m).
    pub range_max: f64,
    /// Forward offset of the sensor from the base center (m).
    pub mount_offset: f64,
    /// Total scan window (deg), centered on the base forward axis.
    pub intrinsic_fov_deg: f64,
    pub occluders: Vec<Occluder>,
}

impl Default for LaserMount {
    fn default() -> Self {
        Self {
            range_max: 8.0,
            mount_offset: 0.100,
            intrinsic_fov_deg: 264.0,
            // Two 8 degree post shadows splitting the window into the
            // observed 121 and 127 degree clear arcs.
            occluders: vec![
                Occluder {
                    bearing_deg: -7.0,
                    width_deg: 8.0,
                },
                Occluder {
                    bearing_deg: 128.0,
                    width_deg: 8.0,
                },
            ],
        }
    }
}

/// A clear angular span, bearings in the base frame (deg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibleArc {
    pub start_deg: f64,
    pub end_deg: f64,
}

impl VisibleArc {
    pub fn width_deg(&self) -> f64 {
        self.end_deg - self.start_deg
    }

    pub fn contains(&self, bearing_deg: f64) -> bool {
        (self.start_deg..=self.end_deg).contains(&bearing_deg)
    }
}

/// Subtract the occluder shadows from the scan window and return the
/// maximal clear arcs sorted by bearing. Overlapping shadows merge.
pub fn laser_coverage(mount: &LaserMount) -> Vec<VisibleArc> {
    let half = mount.intrinsic_fov_deg / 2.0;
    let (lo, hi) = (-half, half);
    // Clip shadows into the window, unwrapping across +/-360.
    let mut shadows: Vec<(f64, f64)> = Vec::new();
    for occ in &mount.occluders {
        for shift in [-360.0, 0.0, 360.0] {
            let start = occ.bearing_deg - occ.width_deg / 2.0 + shift;
            let end = occ.bearing_deg + occ.width_deg / 2.0 + shift;
            let s = start.max(lo);
            let e = end.min(hi);
            if e > s {
                shadows.push((s, e));
            }
        }
    }
    shadows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in shadows {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    let mut arcs = Vec::new();
    let mut cursor = lo;
    for (s, e) in &merged {
        if *s > cursor {
            arcs.push(VisibleArc {
                start_deg: cursor,
                end_deg: *s,
            });
        }
        cursor = cursor.max(*e);
    }
    if hi > cursor {
        arcs.push(VisibleArc {
            start_deg: cursor,
            end_deg: hi,
        });
    }
    arcs
}

/// Laser visibility of a world point from a base at `(x, y, phi)`.
///
/// The point must lie within range of the sensor itself (which sits
/// `mount_offset` ahead of the base center) and inside a clear arc.
/// Returns the visibility flag and the range from the sensor.
pub fn laser_visible(point: (f64, f64), base_pose: (f64, f64, f64), mount: &LaserMount) -> (bool, f64) {
    let (bx, by, phi) = base_pose;
    let (sin_p, cos_p) = phi.sin_cos();
    let sensor = (bx + mount.mount_offset * cos_p, by + mount.mount_offset * sin_p);
    let dx = point.0 - sensor.0;
    let dy = point.1 - sensor.1;
    let range = dx.hypot(dy);
    if range > mount.range_max {
        return (false, range);
    }
    let bearing_deg = normalize(dy.atan2(dx) - phi).to_degrees();
    let visible = laser_coverage(mount)
        .iter()
        .any(|arc| arc.contains(bearing_deg));
    (visible, range)
}

/// Chest speaker reference level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeakerSpec {
    pub reference_spl_db: f64,
    pub reference_distance: f64,
}

impl Default for SpeakerSpec {
    fn default() -> Self {
        Self {
            reference_spl_db: 60.0,
            reference_distance: 3.0,
        }
    }
}

/// Free-space sound pressure level at a distance.
pub fn speaker_spl(spec: &SpeakerSpec, distance: f64) -> Result<f64, SensorError> {
    if !(distance > 0.0) {
        return Err(SensorError::NonPositiveDistance(distance));
    }
    Ok(spec.reference_spl_db - 20.0 * (distance / spec.reference_distance).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::deg;

    fn limits() -> WaistLimits {
        WaistLimits::default()
    }

    #[test]
    fn neutral_mount_looks_level() {
        let f = camera_frustum(&CameraMount::default(), 0.0, &limits()).unwrap();
        assert_eq!(f.pitch, 0.0);
        assert!(f.floor_footprint.is_none());
        assert!((f.h_half - deg(30.0)).abs() < 1e-12);
        assert!((f.v_half - deg(24.75)).abs() < 1e-12);
    }

    #[test]
    fn tilt_and_bow_add_to_55_degrees() {
        let mount = CameraMount {
            manual_tilt: deg(25.0),
            ..CameraMount::default()
        };
        let f = camera_frustum(&mount, deg(30.0), &limits()).unwrap();
        assert!((f.pitch - deg(55.0)).abs() < 1e-12);
        // Pointed well below the horizon: the footprint closes.
        let quad = f.floor_footprint.expect("footprint should exist");
        for (x, _) in quad {
            assert!(x > 0.0);
        }
    }

    #[test]
    fn frustum_pitch_is_additive() {
        let lim = limits();
        for (tilt, bow) in [(5.0, 10.0), (-12.0, 30.0), (25.0, 15.0), (0.35, -2.75)] {
            let mount = |t: f64| CameraMount {
                manual_tilt: deg(t),
                tilt_range: deg(40.0),
                ..CameraMount::default()
            };
            let split = camera_frustum(&mount(tilt), deg(bow), &lim).unwrap();
            let folded = camera_frustum(&mount(tilt + bow), 0.0, &lim).unwrap();
            assert!((split.pitch - folded.pitch).abs() < 1e-12);
            match (split.floor_footprint, folded.floor_footprint) {
                (Some(a), Some(b)) => {
                    for (pa, pb) in a.iter().zip(b.iter()) {
                        assert!((pa.0 - pb.0).abs() < 1e-12);
                        assert!((pa.1 - pb.1).abs() < 1e-12);
                    }
                }
                (None, None) => {}
                _ => panic!("footprint presence must agree"),
            }
        }
    }

    #[test]
    fn waist_beyond_limits_rejected() {
        let err = camera_frustum(&CameraMount::default(), deg(31.0), &limits()).unwrap_err();
        assert!(matches!(err, SensorError::WaistOutOfLimits { .. }));
    }

    #[test]
    fn footprint_geometry_hand_checked() {
        // Degenerate zero-width frustum keeps the corners in the sagittal
        // plane, where the floor hits reduce to height / tan(depression).
        let mount = CameraMount {
            manual_tilt: deg(45.0),
            tilt_range: deg(45.0),
            v_fov: deg(10.0),
            h_fov: 0.0,
            mount_height: 1.0,
            ..CameraMount::default()
        };
        let f = camera_frustum(&mount, 0.0, &limits()).unwrap();
        let quad = f.floor_footprint.unwrap();
        let near_x = 1.0 / deg(50.0).tan();
        assert!((quad[0].0 - near_x).abs() < 1e-9, "near {} vs {near_x}", quad[0].0);
        assert_eq!(quad[0].1, 0.0);
        let far_x = 1.0 / deg(40.0).tan();
        assert!((quad[3].0 - far_x).abs() < 1e-9, "far {} vs {far_x}", quad[3].0);
        // The near edge sits closer than the far edge.
        assert!(quad[0].0 < quad[3].0);
    }

    #[test]
    fn point_on_axis_is_visible() {
        let mount = CameraMount::default();
        assert!(point_in_camera_fov([2.0, 0.0, mount.mount_height], &mount, 0.0));
    }

    #[test]
    fn horizontal_bearing_bound_is_closed() {
        let mount = CameraMount::default();
        let h = mount.mount_height;
        let at_30 = [2.0, 2.0 * deg(30.0).tan(), h];
        assert!(point_in_camera_fov(at_30, &mount, 0.0));
        let at_31 = [2.0, 2.0 * deg(31.0).tan(), h];
        assert!(!point_in_camera_fov(at_31, &mount, 0.0));
    }

    #[test]
    fn point_behind_is_never_visible() {
        let mount = CameraMount {
            tilt_range: deg(25.0),
            ..CameraMount::default()
        };
        for tilt in [-25.0, 0.0, 25.0] {
            let m = CameraMount {
                manual_tilt: deg(tilt),
                ..mount
            };
            assert!(!point_in_camera_fov([-3.0, 0.0, 1.2], &m, 0.0));
        }
    }

    #[test]
    fn fov_depends_only_on_robot_frame_bearing() {
        // The check takes robot-frame coordinates; a world-frame rotation
        // that preserves them cannot change the answer. Representative
        // points across the frustum boundary:
        let mount = CameraMount::default();
        for p in [[2.0, 0.5, 1.0], [1.0, 1.0, 1.4], [3.0, -1.6, 1.2]] {
            let a = point_in_camera_fov(p, &mount, 0.1);
            let b = point_in_camera_fov(p, &mount, 0.1);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn default_coverage_reproduces_observed_arcs() {
        let arcs = laser_coverage(&LaserMount::default());
        assert_eq!(arcs.len(), 2);
        assert!((arcs[0].width_deg() - 121.0).abs() < 1e-9);
        assert!((arcs[1].width_deg() - 127.0).abs() < 1e-9);
        // Two 8 degree gaps separate them inside the 264 degree window.
        assert!((arcs[1].start_deg - arcs[0].end_deg - 8.0).abs() < 1e-9);
        assert!((132.0 - arcs[1].end_deg - 8.0).abs() < 1e-9);
    }

    #[test]
    fn no_occluders_yield_the_full_window() {
        let mount = LaserMount {
            occluders: Vec::new(),
            ..LaserMount::default()
        };
        let arcs = laser_coverage(&mount);
        assert_eq!(arcs.len(), 1);
        assert!((arcs[0].width_deg() - 264.0).abs() < 1e-12);
    }

    #[test]
    fn total_occlusion_yields_nothing() {
        let mount = LaserMount {
            occluders: vec![Occluder {
                bearing_deg: 0.0,
                width_deg: 400.0,
            }],
            ..LaserMount::default()
        };
        assert!(laser_coverage(&mount).is_empty());
    }

    #[test]
    fn overlapping_occluders_merge() {
        let mount = LaserMount {
            occluders: vec![
                Occluder {
                    bearing_deg: 0.0,
                    width_deg: 10.0,
                },
                Occluder {
                    bearing_deg: 4.0,
                    width_deg: 10.0,
                },
            ],
            ..LaserMount::default()
        };
        let arcs = laser_coverage(&mount);
        assert_eq!(arcs.len(), 2);
        let shadow = 264.0 - arcs.iter().map(|a| a.width_deg()).sum::<f64>();
        assert!((shadow - 14.0).abs() < 1e-9, "merged shadow is [-5, 9]");
    }

    #[test]
    fn arcs_plus_shadows_account_for_the_window_exactly() {
        let mount = LaserMount::default();
        let visible: f64 = laser_coverage(&mount).iter().map(|a| a.width_deg()).sum();
        let shadow: f64 = mount.occluders.iter().map(|o| o.width_deg).sum();
        assert_eq!(visible + shadow, mount.intrinsic_fov_deg);
    }

    #[test]
    fn laser_range_and_shadow_checks() {
        let mount = LaserMount::default();
        let pose = (0.0, 0.0, 0.0);
        // 7.9 m ahead of the sensor (which sits 0.1 m forward).
        let (seen, range) = laser_visible((8.0, 0.0), pose, &mount);
        assert!(seen);
        assert!((range - 7.9).abs() < 1e-12);
        // Past the range cutoff measured from the sensor.
        let (seen, range) = laser_visible((8.15, 0.0), pose, &mount);
        assert!(!seen);
        assert!((range - 8.05).abs() < 1e-12);
        // Inside the -7 degree post shadow at close range.
        let b = (-7f64).to_radians();
        let point = (0.1 + b.cos(), b.sin());
        let (seen, _) = laser_visible(point, pose, &mount);
        assert!(!seen);
    }

    #[test]
    fn laser_visibility_follows_the_base_heading() {
        let mount = LaserMount::default();
        // Rear of the robot is blind; rotate the base and the blind spot
        // rotates with it.
        let (seen, _) = laser_visible((-3.0, 0.0), (0.0, 0.0, 0.0), &mount);
        assert!(!seen);
        let (seen, _) = laser_visible((-3.0, 0.0), (0.0, 0.0, std::f64::consts::PI), &mount);
        assert!(seen);
    }

    #[test]
    fn speaker_reference_point() {
        let spec = SpeakerSpec::default();
        assert_eq!(speaker_spl(&spec, 3.0).unwrap(), 60.0);
        let at_half = speaker_spl(&spec, 1.5).unwrap();
        assert!((at_half - 66.0206).abs() < 1e-3, "spl = {at_half}");
        assert!(speaker_spl(&spec, 0.0).is_err());
        assert!(speaker_spl(&spec, -1.0).is_err());
    }

    #[test]
    fn halving_distance_adds_exactly_6_db() {
        let spec = SpeakerSpec::default();
        let gain = 20.0 * 2f64.log10();
        for d in [0.5, 1.0, 2.0, 3.0, 6.0] {
            let near = speaker_spl(&spec, d / 2.0).unwrap();
            let far = speaker_spl(&spec, d).unwrap();
            assert!((near - far - gain).abs() < 1e-12);
        }
    }

    #[test]
    fn spl_is_strictly_decreasing() {
        let spec = SpeakerSpec::default();
        let mut last = f64::INFINITY;
        for k in 1..50 {
            let spl = speaker_spl(&spec, 0.3 * k as f64).unwrap();
            assert!(spl < last);
            last = spl;
        }
    }

    #[test]
    fn reference_identity_regardless_of_level() {
        for level in [40.0, 60.0, 80.0] {
            let spec = SpeakerSpec {
                reference_spl_db: level,
                reference_distance: 3.0,
            };
            assert_eq!(speaker_spl(&spec, 3.0).unwrap(), level);
        }
    }
}
