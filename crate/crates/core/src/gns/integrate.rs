/// Semi-implicit Euler: the velocity is advanced first and the new velocity
/// moves the position, `v' = v + dt a`, `x' = x + dt v'`.
pub fn euler_update(position: &[f64], velocity: &[f64], acceleration: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(dt > 0.0);
    let v_next: Vec<f64> = velocity.iter().zip(acceleration).map(|(v, a)| v + dt * a).collect();
    let x_next = position.iter().zip(&v_next).map(|(x, v)| x + dt * v).collect();
    (x_next, v_next)
}

/// Acceleration that takes `current` to `next` under [`euler_update`] given
/// the velocity implied by `previous`.
pub fn inverse_euler_acceleration(previous: &[f64], current: &[f64], next: &[f64], dt: f64) -> Vec<f64> {
    previous
        .iter()
        .zip(current)
        .zip(next)
        .map(|((p, c), n)| ((n - c) / dt - (c - p) / dt) / dt)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let (x, v) = euler_update(&[0.0], &[1.0], &[2.0], 0.1);
        assert!((v[0] - 1.2).abs() < 1e-12);
        assert!((x[0] - 0.12).abs() < 1e-12);
    }

    #[test]
    fn zero_acceleration_is_uniform_motion() {
        let (x, v) = euler_update(&[1.0, -2.0], &[0.5, 0.25], &[0.0, 0.0], 0.2);
        assert_eq!(v, vec![0.5, 0.25]);
        assert_eq!(x, vec![1.0 + 0.2 * 0.5, -2.0 + 0.2 * 0.25]);
    }

    #[test]
    fn gravity_step() {
        let (_, v) = euler_update(&[0.0; 3], &[0.0; 3], &[0.0, -9.81, 0.0], 0.0025);
        assert_eq!(v[0], 0.0);
        assert!((v[1] - (-0.0245)).abs() < 5e-5);
        assert!((v[1] - (-0.024525)).abs() < 1e-12);
    }

    #[test]
    fn inverse_recovers_acceleration() {
        let (x0, v0, a) = ([0.3, 0.1], [0.01, -0.02], [0.004, -0.003]);
        let prev: Vec<f64> = x0.iter().zip(&v0).map(|(x, v)| x - v).collect();
        let (x1, _) = euler_update(&x0, &v0, &a, 1.0);
        let back = inverse_euler_acceleration(&prev, &x0, &x1, 1.0);
        for (b, a) in back.iter().zip(a) {
            assert!((b - a).abs() < 1e-15);
        }
    }
}
