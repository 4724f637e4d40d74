//! Orbit camera around the origin, parameterized by elevation and azimuth.

use glam::{DMat4, DVec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RADIUS: f64 = 2.5;
pub const DEFAULT_FOVY: f64 = 50.0;
pub const DEFAULT_RESOLUTION: usize = 512;

#[derive(Debug, Error, PartialEq)]
#[error("invalid camera: {0}")]
pub struct CameraError(pub String);

/// Camera on a sphere around the origin, always looking at the origin.
///
/// Angles are in degrees. Azimuth 0 / elevation 0 sits on +Z looking toward
/// -Z; positive azimuth swings toward +X, positive elevation toward +Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitCamera {
    pub elevation: f64,
    pub azimuth: f64,
    pub radius: f64,
    pub fovy: f64,
    pub resolution: usize,
}

impl Default for OrbitCamera {
    fn default() -> Self {
        Self {
            elevation: 0.0,
            azimuth: 0.0,
            radius: DEFAULT_RADIUS,
            fovy: DEFAULT_FOVY,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_azimuth(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

impl OrbitCamera {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        Self { elevation, azimuth, ..Self::default() }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_lens(mut self, radius: f64, fovy: f64) -> Self {
        self.radius = radius;
        self.fovy = fovy;
        self
    }

    /// Checks the ranges and wraps azimuth into (-180, 180].
    pub fn validated(mut self) -> Result<Self, CameraError> {
        if !self.elevation.is_finite() || !(-90.0..=90.0).contains(&self.elevation) {
            return Err(CameraError(format!("elevation {} outside [-90, 90]", self.elevation)));
        }
        if !self.azimuth.is_finite() {
            return Err(CameraError("azimuth must be finite".into()));
        }
        self.azimuth = wrap_azimuth(self.azimuth);
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(CameraError(format!("radius {} must be positive", self.radius)));
        }
        if !(1.0..=120.0).contains(&self.fovy) {
            return Err(CameraError(format!("fovy {} outside [1, 120]", self.fovy)));
        }
        if self.resolution == 0 || !self.resolution.is_multiple_of(8) {
            return Err(CameraError(format!("resolution {} must be a positive multiple of 8", self.resolution)));
        }
        Ok(self)
    }

    pub fn transforms(&self) -> CameraTransforms {
        camera_from_orbit(self.elevation, self.azimuth, self.radius, self.fovy)
    }
}

/// World-space frame and matrices of a posed camera.
#[derive(Debug, Clone, Copy)]
pub struct CameraTransforms {
    pub position: DVec3,
    pub forward: DVec3,
    pub right: DVec3,
    pub up: DVec3,
    /// World to camera (right-handed, camera looks down its -Z).
    pub view: DMat4,
    /// OpenGL-style clip projection, square aspect.
    pub projection: DMat4,
    pub fovy_radians: f64,
}

pub const NEAR_PLANE: f64 = 0.01;
pub const FAR_PLANE: f64 = 100.0;

/// Builds the view and projection for an orbit pose. At the poles the up
/// vector is world -Z (top view) or +Z (bottom view) so screen-right stays +X
/// at azimuth 0.
pub fn camera_from_orbit(elevation: f64, azimuth: f64, radius: f64, fovy: f64) -> CameraTransforms {
    let (e, a) = (elevation.to_radians(), azimuth.to_radians());
    let position = radius * DVec3::new(e.cos() * a.sin(), e.sin(), e.cos() * a.cos());
    let forward = (-position).normalize();
    let world_up = if forward.cross(DVec3::Y).length() < 1e-6 {
        if forward.y < 0.0 {
            -DVec3::Z
        } else {
            DVec3::Z
        }
    } else {
        DVec3::Y
    };
    let right = forward.cross(world_up).normalize();
    let up = right.cross(forward);
    let view = DMat4::look_at_rh(position, DVec3::ZERO, up);
    let fovy_radians = fovy.to_radians();
    let projection = DMat4::perspective_rh_gl(fovy_radians, 1.0, NEAR_PLANE, FAR_PLANE);
    CameraTransforms { position, forward, right, up, view, projection, fovy_radians }
}
