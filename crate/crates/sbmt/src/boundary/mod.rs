//! Boundary chains: bitmap ingestion, contour tracing and protocol enforcement.

pub mod bitmap;
pub mod protocol;
pub mod trace;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{seg_seg_intersect, Aabb, IntersectKind, Point2, Tolerance};

pub use bitmap::{load_bitmap, parse_bitmap, BitmapMask};
pub use protocol::{enforce_protocol, protocol_violations, ProtocolParams, Violation};
pub use trace::{trace_contours, trace_contours_detailed, TraceOutput};

/// An ordered polyline; segment `k` joins `points[k]` and `points[k + 1]`
/// (wrapping to `points[0]` when closed).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyChain {
    pub points: Vec<Point2>,
    pub closed: bool,
}

impl PolyChain {
    pub fn new(points: Vec<Point2>, closed: bool) -> Self {
        Self { points, closed }
    }

    pub fn num_segments(&self) -> usize {
        match (self.points.len(), self.closed) {
            (0 | 1, _) => 0,
            (n, true) => n,
            (n, false) => n - 1,
        }
    }

    pub fn segment(&self, k: usize) -> (Point2, Point2) {
        let n = self.points.len();
        (self.points[k], self.points[(k + 1) % n])
    }

    /// Shoelace area; positive for counter-clockwise in the `(x, y)` frame.
    pub fn signed_area(&self) -> f64 {
        if !self.closed || self.points.len() < 3 {
            return 0.0;
        }
        let n = self.points.len();
        0.5 * (0..n).map(|i| self.points[i].cross(self.points[(i + 1) % n])).sum::<f64>()
    }

    pub fn length(&self) -> f64 {
        (0..self.num_segments()).map(|k| {
            let (a, b) = self.segment(k);
            a.dist(b)
        }).sum()
    }

    pub fn min_segment_length(&self) -> f64 {
        (0..self.num_segments())
            .map(|k| {
                let (a, b) = self.segment(k);
                a.dist(b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn reversed(&self) -> Self {
        let mut p = self.points.clone();
        p.reverse();
        Self { points: p, closed: self.closed }
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(self.points.iter().copied())
    }

    /// Brute-force check that no two non-adjacent segments meet.
    pub fn is_simple(&self, tol: Tolerance) -> bool {
        let m = self.num_segments();
        for i in 0..m {
            for j in i + 1..m {
                let adjacent = j == i + 1 || (self.closed && i == 0 && j == m - 1);
                let k = match seg_seg_intersect(self.segment(i), self.segment(j), tol) {
                    Ok(k) => k,
                    Err(_) => return false,
                };
                match k {
                    IntersectKind::None => {}
                    IntersectKind::Point(p) if adjacent => {
                        let shared = if j == i + 1 { self.segment(i).1 } else { self.segment(i).0 };
                        if !p.approx_eq(shared, tol) {
                            return false;
                        }
                    }
                    _ => return false,
                }
            }
        }
        true
    }
}

/// Even-odd containment against a set of closed chains.
pub fn point_in_chains(p: Point2, chains: &[PolyChain]) -> bool {
    let mut inside = false;
    for c in chains.iter().filter(|c| c.closed) {
        for k in 0..c.num_segments() {
            let (a, b) = c.segment(k);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// All chains flattened into global vertex and segment ids, in (chain, index) order.
#[derive(Clone, Debug)]
pub struct Boundary {
    pub chains: Vec<PolyChain>,
    pub vertices: Vec<Point2>,
    /// `(chain, index within chain)` per global vertex.
    pub vertex_owner: Vec<(u32, u32)>,
    /// Global vertex ids of each segment's endpoints.
    pub segments: Vec<[u32; 2]>,
    pub seg_owner: Vec<(u32, u32)>,
    /// Segment ending at each vertex, and starting at it.
    vertex_in: Vec<u32>,
    vertex_out: Vec<u32>,
}

pub const NONE: u32 = u32::MAX;

impl Boundary {
    pub fn new(chains: Vec<PolyChain>) -> Self {
        let mut vertices = Vec::new();
        let mut vertex_owner = Vec::new();
        let mut segments = Vec::new();
        let mut seg_owner = Vec::new();
        for (ci, c) in chains.iter().enumerate() {
            let base = vertices.len() as u32;
            let n = c.points.len() as u32;
            for (k, p) in c.points.iter().enumerate() {
                vertices.push(*p);
                vertex_owner.push((ci as u32, k as u32));
            }
            for k in 0..c.num_segments() as u32 {
                segments.push([base + k, base + (k + 1) % n]);
                seg_owner.push((ci as u32, k));
            }
        }
        let mut vertex_in = vec![NONE; vertices.len()];
        let mut vertex_out = vec![NONE; vertices.len()];
        for (s, [a, b]) in segments.iter().enumerate() {
            vertex_out[*a as usize] = s as u32;
            vertex_in[*b as usize] = s as u32;
        }
        Self { chains, vertices, vertex_owner, segments, seg_owner, vertex_in, vertex_out }
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn seg(&self, s: u32) -> (Point2, Point2) {
        let [a, b] = self.segments[s as usize];
        (self.vertices[a as usize], self.vertices[b as usize])
    }

    pub fn seg_in(&self, v: u32) -> Option<u32> {
        Some(self.vertex_in[v as usize]).filter(|&s| s != NONE)
    }

    pub fn seg_out(&self, v: u32) -> Option<u32> {
        Some(self.vertex_out[v as usize]).filter(|&s| s != NONE)
    }

    /// Shared vertex when `s2` directly follows `s1` along a chain.
    pub fn junction(&self, s1: u32, s2: u32) -> Option<u32> {
        let end = self.segments[s1 as usize][1];
        (self.segments[s2 as usize][0] == end).then_some(end)
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    pub fn min_segment_length(&self) -> f64 {
        (0..self.segments.len() as u32)
            .map(|s| {
                let (a, b) = self.seg(s);
                a.dist(b)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Text format: one block per chain, a `closed` or `open` header line followed by
/// `x y` lines. Blank lines and `#` comments are ignored.
pub fn parse_chains(text: &str) -> Result<Vec<PolyChain>> {
    let mut out: Vec<PolyChain> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "closed" => out.push(PolyChain::new(Vec::new(), true)),
            "open" => out.push(PolyChain::new(Vec::new(), false)),
            _ => {
                let cur = out.last_mut().ok_or(Error::Parse { line: i + 1, msg: "coordinates before header".into() })?;
                let mut t = line.split_whitespace();
                let mut num = || -> Result<f64> {
                    t.next()
                        .and_then(|s| s.parse().ok())
                        .ok_or(Error::Parse { line: i + 1, msg: format!("expected `x y`, got {line:?}") })
                };
                let p = Point2::new(num()?, num()?);
                cur.points.push(p);
            }
        }
    }
    Ok(out)
}

pub fn chains_to_string(chains: &[PolyChain]) -> String {
    let mut s = String::new();
    for c in chains {
        let _ = writeln!(s, "{}", if c.closed { "closed" } else { "open" });
        for p in &c.points {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PolyChain {
        PolyChain::new(
            vec![Point2::new(0., 0.), Point2::new(2., 0.), Point2::new(2., 2.), Point2::new(0., 2.)],
            true,
        )
    }

    #[test]
    fn area_and_simplicity() {
        let c = square();
        assert_eq!(c.signed_area(), 4.0);
        assert_eq!(c.reversed().signed_area(), -4.0);
        assert!(c.is_simple(Tolerance::default()));
        let bow = PolyChain::new(
            vec![Point2::new(0., 0.), Point2::new(2., 2.), Point2::new(2., 0.), Point2::new(0., 2.)],
            true,
        );
        assert!(!bow.is_simple(Tolerance::default()));
    }

    #[test]
    fn text_roundtrip() {
        let chains = vec![square(), PolyChain::new(vec![Point2::new(0.5, 0.25), Point2::new(3., 1.)], false)];
        let back = parse_chains(&chains_to_string(&chains)).unwrap();
        assert_eq!(back, chains);
    }

    #[test]
    fn flattened_indices() {
        let b = Boundary::new(vec![square(), square()]);
        assert_eq!(b.num_segments(), 8);
        assert_eq!(b.segments[3], [3, 0]);
        assert_eq!(b.segments[4], [4, 5]);
        assert_eq!(b.junction(3, 0), Some(0));
        assert_eq!(b.junction(0, 3), None);
        assert_eq!(b.seg_in(0), Some(3));
    }

    #[test]
    fn even_odd() {
        let c = square();
        assert!(point_in_chains(Point2::new(1., 1.), std::slice::from_ref(&c)));
        assert!(!point_in_chains(Point2::new(3., 1.), &[c]));
    }
}
