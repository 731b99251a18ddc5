use nalgebra::Matrix3;

use super::{Material, MpmError};

/// Drucker–Prager cone `sqrt(J2) + alpha * p - k <= 0` with `p = tr(sigma)/3`
/// (tension positive), matched to Mohr–Coulomb in plane strain.
pub fn drucker_prager_coefficients(friction_angle_deg: f64, cohesion: f64) -> (f64, f64) {
    let t = friction_angle_deg.to_radians().tan();
    let denom = (9.0 + 12.0 * t * t).sqrt();
    (3.0 * t / denom, 3.0 * cohesion / denom)
}

fn split(stress: &Matrix3<f64>) -> (f64, Matrix3<f64>) {
    let p = stress.trace() / 3.0;
    (p, stress - Matrix3::identity() * p)
}

fn sqrt_j2(dev: &Matrix3<f64>) -> f64 {
    (0.5 * dev.component_mul(dev).sum()).sqrt()
}

/// Yield function value; non-positive means admissible. Always `-inf` for
/// purely elastic materials.
pub fn yield_function(stress: &Matrix3<f64>, material: &Material) -> f64 {
    match *material {
        Material::Elastic { .. } => f64::NEG_INFINITY,
        Material::DruckerPrager {
            friction_angle_deg,
            cohesion,
            ..
        } => {
            let (alpha, k) = drucker_prager_coefficients(friction_angle_deg, cohesion);
            let (p, dev) = split(stress);
            sqrt_j2(&dev) + alpha * p - k
        }
    }
}

/// Advances a Cauchy stress by one step of the velocity gradient `grad_v`:
/// Jaumann-rotated hypoelastic trial, then a radial return onto the cone
/// (or to its apex when the trial lies beyond it in tension).
pub fn constitutive_update(
    stress: &Matrix3<f64>,
    grad_v: &Matrix3<f64>,
    dt: f64,
    material: &Material,
) -> Result<Matrix3<f64>, MpmError> {
    let (lambda, mu) = material.lame();
    let strain_rate = (grad_v + grad_v.transpose()) * 0.5;
    let spin = (grad_v - grad_v.transpose()) * 0.5;
    let de = strain_rate * dt;
    let rotation = (spin * stress - stress * spin) * dt;
    let trial = stress + rotation + Matrix3::identity() * (lambda * de.trace()) + de * (2.0 * mu);

    let out = match *material {
        Material::Elastic { .. } => trial,
        Material::DruckerPrager {
            friction_angle_deg,
            cohesion,
            ..
        } => {
            let (alpha, k) = drucker_prager_coefficients(friction_angle_deg, cohesion);
            let (p, dev) = split(&trial);
            let q = sqrt_j2(&dev);
            if q + alpha * p - k <= 0.0 {
                trial
            } else {
                let allowed = k - alpha * p;
                if allowed <= 0.0 {
                    let apex = if alpha > 0.0 { k / alpha } else { 0.0 };
                    Matrix3::identity() * apex
                } else {
                    Matrix3::identity() * p + dev * (allowed / q)
                }
            }
        }
    };
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(MpmError::NonFiniteStress { step: 0 })
    }
}
