//! Deterministic sphere ray tracer for particle frames.

mod accel;
mod camera;
mod colormap;
mod image;

pub use accel::{intersect_brute, intersect_sphere, AccelGrid, Hit, Ray};
pub use camera::Camera;
pub use colormap::Colormap;
pub use image::Image;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::frame::{ParticleFrame, ScalarField};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid camera {name:?}: {reason}")]
    Camera { name: String, reason: String },
    #[error("invalid colormap: {0}")]
    Colormap(String),
    #[error("particle radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("{got} scalars for {expected} particles")]
    ScalarCount { got: usize, expected: usize },
    #[error("malformed image: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const BACKGROUND: [f64; 3] = [0.08, 0.08, 0.1];
const AMBIENT: f64 = 0.25;

/// Direction towards the single directional light.
fn light_direction() -> Vector3<f64> {
    Vector3::new(0.3, 0.8, 0.5).normalize()
}

fn shade(base: [f64; 3], normal: &Vector3<f64>) -> [f64; 3] {
    let lambert = normal.dot(&light_direction()).max(0.0);
    let k = AMBIENT + (1.0 - AMBIENT) * lambert;
    [base[0] * k, base[1] * k, base[2] * k]
}

/// Renders spheres already indexed in `grid`, colored by `scalars`. Rows are
/// traced in parallel; the bytes do not depend on the thread count.
pub fn render_grid(
    grid: &AccelGrid,
    scalars: &[f64],
    camera: &Camera,
    colormap: &Colormap,
) -> Result<Image, RenderError> {
    camera.validate()?;
    colormap.validate()?;
    if scalars.len() != grid.num_spheres() {
        return Err(RenderError::ScalarCount {
            got: scalars.len(),
            expected: grid.num_spheres(),
        });
    }
    let (w, h) = (camera.width as usize, camera.height as usize);
    let basis = camera.basis();
    let mut image = Image::new(camera.width, camera.height);
    image.pixels.par_chunks_mut(w * 3).enumerate().for_each(|(row, out)| {
        for col in 0..w {
            let ray = basis.ray(col, row);
            let color = match grid.intersect(&ray) {
                Some(hit) => {
                    let p = ray.at(hit.t);
                    let normal = (p - grid.center(hit.id)).normalize();
                    shade(colormap.map_color(scalars[hit.id]), &normal)
                }
                None => BACKGROUND,
            };
            for (c, v) in color.iter().enumerate() {
                out[col * 3 + c] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        }
    });
    debug_assert_eq!(image.pixels.len(), w * h * 3);
    Ok(image)
}

/// Builds the acceleration grid and renders a frame in one call.
pub fn render(
    frame: &ParticleFrame,
    camera: &Camera,
    colormap: &Colormap,
    radius: f64,
    field: ScalarField,
) -> Result<Image, RenderError> {
    let centers: Vec<[f64; 3]> = (0..frame.len()).map(|i| frame.position3(i)).collect();
    let grid = AccelGrid::build(&centers, radius)?;
    render_grid(&grid, &frame.scalars(field), camera, colormap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera() -> Camera {
        Camera {
            name: "test".into(),
            eye: [0.0, 0.0, 5.0],
            look_at: [0.0, 0.0, 0.0],
            up: [0.0, 1.0, 0.0],
            fov_deg: 40.0,
            width: 32,
            height: 24,
        }
    }

    #[test]
    fn empty_frame_is_background() {
        let img = render(&ParticleFrame::empty(2), &camera(), &Colormap::grayscale(0.0, 1.0), 0.01, ScalarField::Displacement).unwrap();
        let bg: Vec<u8> = BACKGROUND.iter().map(|v| (v * 255.0).round() as u8).collect();
        assert!(img.pixels.chunks(3).all(|p| p == bg.as_slice()));
    }

    #[test]
    fn sphere_at_center_covers_middle_pixel() {
        let f = ParticleFrame::at_rest(0, 0.0, 3, vec![0.0, 0.0, 0.0]).unwrap();
        let img = render(&f, &camera(), &Colormap::grayscale(0.0, 1.0), 0.5, ScalarField::Displacement).unwrap();
        let bg: Vec<u8> = BACKGROUND.iter().map(|v| (v * 255.0).round() as u8).collect();
        assert_ne!(img.pixel(16, 12), bg.as_slice());
        assert_eq!(img.pixel(0, 0), bg.as_slice());
    }

    #[test]
    fn scalar_count_checked() {
        let grid = AccelGrid::build(&[[0.0; 3]], 0.1).unwrap();
        assert!(matches!(
            render_grid(&grid, &[], &camera(), &Colormap::grayscale(0.0, 1.0)),
            Err(RenderError::ScalarCount { .. })
        ));
    }
}
