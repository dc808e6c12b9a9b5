//! Planar points and tolerance-banded predicates.
//!
//! Everything uses plain `f64` arithmetic with a single absolute tolerance `eps`
//! per run. The thresholds upstream keep configurations far from the band, so no
//! exact arithmetic is needed.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Self, t: f64) -> Self {
        Self::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Equality in the tolerance sense: distance below `eps`.
    pub fn approx_eq(self, o: Self, tol: Tolerance) -> bool {
        self.dist(o) < tol.eps
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { eps: DEFAULT_EPS }
    }
}

impl Tolerance {
    pub fn new(eps: f64) -> Self {
        assert!(eps > 0.0 && eps.is_finite(), "tolerance must be positive");
        Self { eps }
    }

    /// `SBMT_EPS` from the environment when set and valid, else the default.
    pub fn from_env() -> Self {
        std::env::var("SBMT_EPS")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|e| *e > 0.0 && e.is_finite())
            .map(Self::new)
            .unwrap_or_default()
    }
}

/// Twice the signed area of `pqr`.
pub fn cross3(p: Point2, q: Point2, r: Point2) -> f64 {
    (q - p).cross(r - p)
}

pub fn triangle_area(p: Point2, q: Point2, r: Point2) -> f64 {
    0.5 * cross3(p, q, r)
}

/// +1 when `r` is left of the directed line `pq` by more than `eps`, -1 when right,
/// 0 inside the band.
pub fn orient2d(p: Point2, q: Point2, r: Point2, tol: Tolerance) -> i8 {
    let len = p.dist(q);
    let c = cross3(p, q, r);
    let band = if len > 0.0 { tol.eps * len } else { tol.eps };
    if c > band {
        1
    } else if c < -band {
        -1
    } else {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntersectKind {
    None,
    Point(Point2),
    /// Endpoints in the parametric order of the first segment.
    Overlap(Point2, Point2),
}

pub type Segment = (Point2, Point2);

fn check_segment(s: Segment, tol: Tolerance) -> Result<f64> {
    let len = s.0.dist(s.1);
    if len <= tol.eps || !s.0.is_finite() || !s.1.is_finite() {
        return Err(Error::DegenerateSegment);
    }
    Ok(len)
}

/// Distance from `p` to the closed segment, the nearest point, and whether that
/// point is an endpoint.
pub fn point_segment_distance(p: Point2, s: Segment) -> Result<(f64, Point2, bool)> {
    let d = s.1 - s.0;
    let l2 = d.norm2();
    if l2 == 0.0 || !l2.is_finite() {
        return Err(Error::DegenerateSegment);
    }
    let t = (p - s.0).dot(d) / l2;
    if t <= 0.0 {
        Ok((p.dist(s.0), s.0, true))
    } else if t >= 1.0 {
        Ok((p.dist(s.1), s.1, true))
    } else {
        let foot = s.0 + d * t;
        Ok((p.dist(foot), foot, false))
    }
}

/// Parameter of the projection of `p` on the line through `s`, with 0 at `s.0`.
pub fn project_param(p: Point2, s: Segment) -> f64 {
    let d = s.1 - s.0;
    (p - s.0).dot(d) / d.norm2()
}

/// Classifies the intersection of two closed segments.
///
/// An endpoint lying within `eps` of the other segment is reported at the
/// endpoint's own coordinates, so touching configurations never drift.
pub fn seg_seg_intersect(s1: Segment, s2: Segment, tol: Tolerance) -> Result<IntersectKind> {
    let l1 = check_segment(s1, tol)?;
    let l2 = check_segment(s2, tol)?;
    let eps = tol.eps;

    // Signed distances of each segment's endpoints from the other's line.
    let d1 = s1.1 - s1.0;
    let d2 = s2.1 - s2.0;
    let b0 = d1.cross(s2.0 - s1.0) / l1;
    let b1 = d1.cross(s2.1 - s1.0) / l1;
    let a0 = d2.cross(s1.0 - s2.0) / l2;
    let a1 = d2.cross(s1.1 - s2.0) / l2;

    let collinear = (b0.abs() <= eps && b1.abs() <= eps) || (a0.abs() <= eps && a1.abs() <= eps);
    if collinear {
        // Work in arc length along s1.
        let u = d1 * (1.0 / l1);
        let t0 = (s2.0 - s1.0).dot(u);
        let t1 = (s2.1 - s1.0).dot(u);
        let (lo2, hi2, plo, phi) = if t0 <= t1 { (t0, t1, s2.0, s2.1) } else { (t1, t0, s2.1, s2.0) };
        let (lo, lo_pt) = if lo2 > eps { (lo2, plo) } else { (0.0, s1.0) };
        let (hi, hi_pt) = if hi2 < l1 - eps { (hi2, phi) } else { (l1, s1.1) };
        if hi - lo > eps {
            return Ok(IntersectKind::Overlap(lo_pt, hi_pt));
        }
        if hi - lo >= -eps {
            return Ok(IntersectKind::Point(lo_pt));
        }
        return Ok(IntersectKind::None);
    }

    // Endpoint contacts first: the touching point keeps its own coordinates.
    for (p, other) in [(s1.0, s2), (s1.1, s2), (s2.0, s1), (s2.1, s1)] {
        let (d, _, _) = point_segment_distance(p, other)?;
        if d <= eps {
            return Ok(IntersectKind::Point(p));
        }
    }

    let straddle1 = (b0 > eps && b1 < -eps) || (b0 < -eps && b1 > eps);
    let straddle2 = (a0 > eps && a1 < -eps) || (a0 < -eps && a1 > eps);
    if straddle1 && straddle2 {
        let t = a0 / (a0 - a1);
        return Ok(IntersectKind::Point(s1.0.lerp(s1.1, t)));
    }
    Ok(IntersectKind::None)
}

/// Interior angle at `v` between the rays to `a` and `b`, in radians within `[0, pi]`.
pub fn angle_at(v: Point2, a: Point2, b: Point2) -> f64 {
    let u = a - v;
    let w = b - v;
    u.cross(w).abs().atan2(u.dot(w))
}

/// The three interior angles of a triangle in degrees.
pub fn triangle_angles_deg(p: [Point2; 3]) -> [f64; 3] {
    [
        angle_at(p[0], p[1], p[2]).to_degrees(),
        angle_at(p[1], p[2], p[0]).to_degrees(),
        angle_at(p[2], p[0], p[1]).to_degrees(),
    ]
}

pub fn min_angle_deg(p: [Point2; 3]) -> f64 {
    let a = triangle_angles_deg(p);
    a[0].min(a[1]).min(a[2])
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point2::new(f64::INFINITY, f64::INFINITY),
            max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point2>>(pts: I) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: Point2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn inflate(self, r: f64) -> Self {
        Self {
            min: Point2::new(self.min.x - r, self.min.y - r),
            max: Point2::new(self.max.x + r, self.max.y + r),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: Tolerance = Tolerance { eps: 1e-9 };

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn orient_examples() {
        assert_eq!(orient2d(p(0., 0.), p(1., 0.), p(0., 1.), T), 1);
        assert_eq!(orient2d(p(0., 0.), p(1., 0.), p(2., 0.), T), 0);
        assert_eq!(orient2d(p(0., 0.), p(1., 0.), p(0.5, -1e-12), T), 0);
        assert_eq!(orient2d(p(0., 0.), p(1., 0.), p(0.5, -1e-3), T), -1);
    }

    #[test]
    fn seg_seg_examples() {
        let k = seg_seg_intersect((p(0., 0.), p(2., 0.)), (p(1., -1.), p(1., 1.)), T).unwrap();
        assert_eq!(k, IntersectKind::Point(p(1., 0.)));
        let k = seg_seg_intersect((p(0., 0.), p(1., 0.)), (p(2., 0.), p(3., 0.)), T).unwrap();
        assert_eq!(k, IntersectKind::None);
        let k = seg_seg_intersect((p(0., 0.), p(2., 0.)), (p(1., 0.), p(3., 0.)), T).unwrap();
        assert_eq!(k, IntersectKind::Overlap(p(1., 0.), p(2., 0.)));
    }

    #[test]
    fn seg_seg_touching_endpoint_keeps_coordinates() {
        let q = p(0.3, 0.0);
        let k = seg_seg_intersect((p(0., 0.), p(1., 0.)), (q, p(0.5, 1.)), T).unwrap();
        assert_eq!(k, IntersectKind::Point(q));
    }

    #[test]
    fn seg_seg_degenerate() {
        assert!(matches!(
            seg_seg_intersect((p(0., 0.), p(0., 0.)), (p(1., 0.), p(2., 0.)), T),
            Err(Error::DegenerateSegment)
        ));
    }

    #[test]
    fn point_segment_examples() {
        let (d, f, c) = point_segment_distance(p(0., 1.), (p(-1., 0.), p(1., 0.))).unwrap();
        assert_eq!((d, f, c), (1.0, p(0., 0.), false));
        let (d, f, c) = point_segment_distance(p(2., 0.), (p(0., 0.), p(1., 0.))).unwrap();
        assert_eq!((d, f, c), (1.0, p(1., 0.), true));
        let (d, f, c) = point_segment_distance(p(0.5, 0.3), (p(0., 0.), p(1., 0.))).unwrap();
        assert!((d - 0.3).abs() < 1e-15 && f == p(0.5, 0.) && !c);
    }
}
