use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::scalar::{normalize_angle, Scalar};

/// Per-trajectory quantities behind the smoothness and progress rewards.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryFeatures<T> {
    pub time_to_goal: T,
    pub jerk: T,
    pub angular_acceleration: T,
    pub curvature: T,
}

fn mean_abs<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v.abs(), n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_usize(n).expect("count")
    }
}

/// Features of a sampled trajectory.
///
/// `positions`, `headings` and `speeds` are parallel arrays sampled every
/// `dt` seconds. `in_goal` reports whether a sample index lies inside the goal.
/// Jerk is the second difference of speed, angular acceleration the second
/// difference of heading, and curvature the heading change per metre travelled.
pub fn extract_features<T: Scalar>(
    positions: &[Point2<T>],
    headings: &[T],
    speeds: &[T],
    dt: T,
    in_goal: impl Fn(usize) -> bool,
) -> TrajectoryFeatures<T> {
    let n = positions.len();
    debug_assert!(n > 0 && headings.len() == n && speeds.len() == n);
    let reached = (0..n).find(|&i| in_goal(i));
    let last = reached.unwrap_or(n.saturating_sub(1));
    let time_to_goal = dt * T::from_usize(last).expect("index");
    let dt2 = dt * dt;
    let jerk = mean_abs((1..n.saturating_sub(1)).map(|i| (speeds[i + 1] - speeds[i] - speeds[i] + speeds[i - 1]) / dt2));
    let angular_acceleration = mean_abs((1..n.saturating_sub(1)).map(|i| {
        let d1 = normalize_angle(headings[i + 1] - headings[i]);
        let d0 = normalize_angle(headings[i] - headings[i - 1]);
        (d1 - d0) / dt2
    }));
    let eps = T::lit(1e-6);
    let curvature = mean_abs((0..n.saturating_sub(1)).filter_map(|i| {
        let ds = positions[i + 1].distance(positions[i]);
        (ds > eps).then(|| normalize_angle(headings[i + 1] - headings[i]) / ds)
    }));
    TrajectoryFeatures { time_to_goal, jerk, angular_acceleration, curvature }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize, v: f64, dt: f64) -> (Vec<Point2<f64>>, Vec<f64>, Vec<f64>) {
        let p = (0..n).map(|i| Point2::new(i as f64 * v * dt, 0.0)).collect();
        (p, vec![0.0; n], vec![v; n])
    }

    #[test]
    fn constant_velocity_line_has_zero_smoothness_terms() {
        let (p, h, v) = straight(101, 10.0, 0.1);
        let f = extract_features(&p, &h, &v, 0.1, |_| false);
        assert_eq!(f.jerk, 0.0);
        assert_eq!(f.angular_acceleration, 0.0);
        assert_eq!(f.curvature, 0.0);
        assert!((f.time_to_goal - 10.0).abs() < 1e-12);
    }

    #[test]
    fn time_to_goal_uses_first_inside_index() {
        let (p, h, v) = straight(101, 10.0, 0.1);
        let f = extract_features(&p, &h, &v, 0.1, |i| p[i].x >= 100.0 - 1e-6);
        assert!((f.time_to_goal - 10.0).abs() < 1e-9);
        let f = extract_features(&p, &h, &v, 0.1, |i| p[i].x >= 50.0 - 1e-6);
        assert!((f.time_to_goal - 5.0).abs() < 1e-9);
    }

    #[test]
    fn circle_curvature_matches_inverse_radius() {
        let r = 20.0;
        let v = 8.0;
        let dt = 0.1;
        let w = v / r;
        let n = 200;
        let p: Vec<_> = (0..n).map(|i| Point2::new(r * (w * i as f64 * dt).cos(), r * (w * i as f64 * dt).sin())).collect();
        let h: Vec<_> = (0..n).map(|i| normalize_angle(w * i as f64 * dt + std::f64::consts::FRAC_PI_2)).collect();
        let s = vec![v; n];
        let f = extract_features(&p, &h, &s, dt, |_| false);
        assert!((f.curvature - 0.05).abs() <= 0.05 * 0.02, "{}", f.curvature);
        assert!(f.angular_acceleration < 1e-9);
    }

    #[test]
    fn single_precision_features() {
        let p: Vec<Point2<f32>> = (0..11).map(|i| Point2::new(i as f32, 0.0)).collect();
        let f = extract_features(&p, &[0.0f32; 11], &[10.0f32; 11], 0.1, |_| false);
        assert!((f.time_to_goal - 1.0).abs() < 1e-6);
        assert_eq!(f.jerk, 0.0);
    }
}
