//! Planar points and polylines with arc-length parametrisation.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector at `heading` radians counter-clockwise from +x.
    pub fn from_heading(heading: T) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    /// Rotated by +90 degrees (points to the left of a direction).
    pub fn left_normal(self) -> Self {
        Self::new(-self.y, self.x)
    }
}

/// Foot point of a projection onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    /// Arc length of the foot point.
    pub s: T,
    /// Signed lateral offset, positive to the left of the direction of travel.
    pub offset: T,
    /// Euclidean distance from the query point to the foot point.
    pub distance: T,
}

/// Polyline with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline<T> {
    points: Vec<Point2<T>>,
    cumulative: Vec<T>,
}

impl<T: Scalar> Polyline<T> {
    /// Returns `None` for fewer than two points or zero total length.
    pub fn new(points: Vec<Point2<T>>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = T::zero();
        cumulative.push(acc);
        for w in points.windows(2) {
            acc = acc + w[0].distance(w[1]);
            cumulative.push(acc);
        }
        if !(acc > T::zero()) {
            return None;
        }
        Some(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn length(&self) -> T {
        *self.cumulative.last().expect("non-empty polyline")
    }

    fn segment_at(&self, s: T) -> usize {
        // index i such that cumulative[i] <= s < cumulative[i+1], skipping zero-length segments
        let n = self.points.len() - 1;
        let mut i = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        i = i.min(n - 1);
        while i < n - 1 && self.cumulative[i + 1] <= self.cumulative[i] {
            i += 1;
        }
        while i > 0 && self.cumulative[i + 1] <= self.cumulative[i] {
            i -= 1;
        }
        i
    }

    /// Point at arc length `s`, clamped to the polyline.
    pub fn point_at(&self, s: T) -> Point2<T> {
        let s = s.max(T::zero()).min(self.length());
        let i = self.segment_at(s);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        if seg <= T::zero() {
            return self.points[i];
        }
        let t = (s - self.cumulative[i]) / seg;
        self.points[i] + (self.points[i + 1] - self.points[i]).scale(t)
    }

    /// Tangent heading at arc length `s`.
    pub fn heading_at(&self, s: T) -> T {
        let s = s.max(T::zero()).min(self.length());
        let i = self.segment_at(s);
        let d = self.points[i + 1] - self.points[i];
        d.y.atan2(d.x)
    }

    /// Point at arc length `s` shifted `offset` to the left.
    pub fn offset_point(&self, s: T, offset: T) -> Point2<T> {
        let base = self.point_at(s);
        let n = Point2::from_heading(self.heading_at(s)).left_normal();
        base + n.scale(offset)
    }

    /// Nearest foot point over all segments.
    pub fn project(&self, p: Point2<T>) -> Projection<T> {
        let mut best: Option<Projection<T>> = None;
        for i in 0..self.points.len() - 1 {
            let a = self.points[i];
            let b = self.points[i + 1];
            let ab = b - a;
            let len2 = ab.dot(ab);
            if len2 <= T::zero() {
                continue;
            }
            let t = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
            let foot = a + ab.scale(t);
            let distance = p.distance(foot);
            let len = len2.sqrt();
            let offset = ab.cross(p - a) / len;
            let cand = Projection {
                s: self.cumulative[i] + t * len,
                offset,
                distance,
            };
            if best.is_none_or(|b| cand.distance < b.distance) {
                best = Some(cand);
            }
        }
        best.expect("polyline has a non-degenerate segment")
    }
}

/// Circular arc sampled as a polyline, turning left for positive `sweep`.
pub fn arc<T: Scalar>(centre: Point2<T>, radius: T, start_angle: T, sweep: T, segments: usize) -> Vec<Point2<T>> {
    let n = T::from_usize(segments.max(1)).expect("segment count");
    (0..=segments.max(1))
        .map(|k| {
            let a = start_angle + sweep * T::from_usize(k).expect("index") / n;
            Point2::new(centre.x + radius * a.cos(), centre.y + radius * a.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn straight() -> Polyline<f64> {
        Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), Point2::new(10.0, 10.0)]).unwrap()
    }

    #[test]
    fn degenerate_polylines_are_rejected() {
        assert!(Polyline::<f64>::new(vec![Point2::new(1.0, 1.0)]).is_none());
        assert!(Polyline::new(vec![Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)]).is_none());
    }

    #[test]
    fn left_offset_is_positive() {
        let pl = straight();
        let pr = pl.project(Point2::new(5.0, 1.75));
        assert!((pr.offset - 1.75).abs() < 1e-12);
        assert!((pr.s - 5.0).abs() < 1e-12);
        let pr = pl.project(Point2::new(11.0, 5.0));
        assert!((pr.offset + 1.0).abs() < 1e-12);
        assert!((pr.s - 15.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let pl = Polyline::new(vec![Point2::new(0.0f32, 0.0), Point2::new(4.0, 3.0)]).unwrap();
        assert!((pl.length() - 5.0).abs() < 1e-6);
        let p = pl.point_at(2.5);
        assert!((p.x - 2.0).abs() < 1e-6 && (p.y - 1.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn project_inverts_offset_point(s in 0.01f64..19.99, off in -1.5f64..1.5) {
            let pl = straight();
            // keep away from the corner where the offset curve folds
            prop_assume!((s - 10.0).abs() > 1.6);
            let p = pl.offset_point(s, off);
            let pr = pl.project(p);
            prop_assert!((pr.s - s).abs() < 1e-9);
            prop_assert!((pr.offset - off).abs() < 1e-9);
        }
    }
}
