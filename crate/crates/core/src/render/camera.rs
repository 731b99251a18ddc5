use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Ray, RenderError};
use crate::frame::Bounds;

/// Pinhole camera. Positions in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Camera {
    pub name: String,
    pub eye: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    /// Vertical field of view, degrees.
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

/// Precomputed per-render ray generation.
pub(crate) struct CameraBasis {
    eye: Vector3<f64>,
    forward: Vector3<f64>,
    right: Vector3<f64>,
    up: Vector3<f64>,
    half_h: f64,
    half_w: f64,
    width: f64,
    height: f64,
}

impl CameraBasis {
    /// Ray through the center of pixel (`col`, `row`), row 0 at the top.
    pub(crate) fn ray(&self, col: usize, row: usize) -> Ray {
        let sx = ((col as f64 + 0.5) / self.width * 2.0 - 1.0) * self.half_w;
        let sy = (1.0 - (row as f64 + 0.5) / self.height * 2.0) * self.half_h;
        let dir = (self.forward + self.right * sx + self.up * sy).normalize();
        Ray::new(self.eye, dir)
    }
}

fn v(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

impl Camera {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |reason: &str| {
            Err(RenderError::Camera {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.name.is_empty() {
            return bad("name is empty");
        }
        let all = self.eye.iter().chain(&self.look_at).chain(&self.up);
        if !all.copied().all(f64::is_finite) {
            return bad("non-finite vector component");
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return bad("fov must lie in (0, 180) degrees");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be positive");
        }
        let view = v(self.look_at) - v(self.eye);
        let up = v(self.up);
        if view.norm() == 0.0 {
            return bad("eye coincides with look_at");
        }
        if up.norm() == 0.0 || view.normalize().cross(&up.normalize()).norm() < 1e-9 {
            return bad("up is parallel to the view direction");
        }
        Ok(())
    }

    pub(crate) fn basis(&self) -> CameraBasis {
        let forward = (v(self.look_at) - v(self.eye)).normalize();
        let right = forward.cross(&v(self.up)).normalize();
        let up = right.cross(&forward);
        let half_h = (self.fov_deg.to_radians() * 0.5).tan();
        CameraBasis {
            eye: v(self.eye),
            forward,
            right,
            up,
            half_h,
            half_w: half_h * self.width as f64 / self.height as f64,
            width: self.width as f64,
            height: self.height as f64,
        }
    }

    pub fn ray(&self, col: usize, row: usize) -> Ray {
        self.basis().ray(col, row)
    }

    fn framing(bounds: &Bounds) -> (Vector3<f64>, f64) {
        let c = bounds.center();
        let center = Vector3::new(c[0], c[1], c.get(2).copied().unwrap_or(0.0));
        let fov = 40f64.to_radians();
        let dist = 0.6 * bounds.scale() / (fov * 0.5).tan() + bounds.scale() * 0.5;
        (center, dist)
    }

    fn looking(name: &str, center: Vector3<f64>, offset: Vector3<f64>, up: [f64; 3], width: u32, height: u32) -> Self {
        let eye = center + offset;
        Camera {
            name: name.to_string(),
            eye: [eye.x, eye.y, eye.z],
            look_at: [center.x, center.y, center.z],
            up,
            fov_deg: 40.0,
            width,
            height,
        }
    }

    /// Looks along -z at the domain: the cross-section of a planar collapse.
    pub fn side(bounds: &Bounds, width: u32, height: u32) -> Self {
        let (c, d) = Self::framing(bounds);
        Self::looking("side", c, Vector3::new(0.0, 0.0, d), [0.0, 1.0, 0.0], width, height)
    }

    /// Looks straight down (-y).
    pub fn top(bounds: &Bounds, width: u32, height: u32) -> Self {
        let (c, d) = Self::framing(bounds);
        Self::looking("top", c, Vector3::new(0.0, d, 0.0), [0.0, 0.0, -1.0], width, height)
    }

    /// Oblique view from above and in front.
    pub fn aerial(bounds: &Bounds, width: u32, height: u32) -> Self {
        let (c, d) = Self::framing(bounds);
        let offset = Vector3::new(0.45, 0.6, 0.66).normalize() * d;
        Self::looking("aerial", c, offset, [0.0, 1.0, 0.0], width, height)
    }

    /// The side, top and aerial presets, in that order.
    pub fn presets(bounds: &Bounds, width: u32, height: u32) -> Vec<Self> {
        vec![
            Self::side(bounds, width, height),
            Self::top(bounds, width, height),
            Self::aerial(bounds, width, height),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        let b = Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        for c in Camera::presets(&b, 64, 48) {
            c.validate().unwrap();
        }
    }

    #[test]
    fn rejects_degenerate() {
        let b = Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let mut c = Camera::side(&b, 8, 8);
        c.up = [0.0, 0.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = Camera::side(&b, 8, 8);
        c.fov_deg = 180.0;
        assert!(c.validate().is_err());
        let mut c = Camera::side(&b, 8, 8);
        c.width = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn center_pixel_looks_forward() {
        let c = Camera {
            name: "c".into(),
            eye: [0.0, 0.0, 0.0],
            look_at: [0.0, 0.0, 1.0],
            up: [0.0, 1.0, 0.0],
            fov_deg: 90.0,
            width: 1,
            height: 1,
        };
        let r = c.ray(0, 0);
        assert!((r.dir - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }
}
