//! Geometric protocol for boundary chains: every corner at least a right angle and
//! every segment longer than the grid edge.
//!
//! Angles are measured as the geometric angle between the two incident segments,
//! since the mesh lies on both sides of the chain.

use std::f64::consts::FRAC_PI_2;

use super::PolyChain;
use crate::error::{Error, Result};
use crate::geom::{angle_at, point_segment_distance, Aabb, Point2, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    /// Grid edge length; segments must be strictly longer.
    pub e: f64,
    /// Slack on the right-angle test, radians.
    pub eps_angle: f64,
    /// Hausdorff budget for simplification, pixels. One and a half pixels lets a
    /// one-pixel diagonal spur be cut.
    pub hausdorff: f64,
}

impl ProtocolParams {
    pub fn new(e: f64) -> Self {
        Self { e, eps_angle: 1e-6, hausdorff: 1.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    Angle { vertex: usize, degrees: f64 },
    Length { segment: usize, length: f64 },
}

fn corner_angle(pts: &[Point2], closed: bool, i: usize) -> Option<f64> {
    let n = pts.len();
    if n < 3 || (!closed && (i == 0 || i == n - 1)) {
        return None;
    }
    Some(angle_at(pts[i], pts[(i + n - 1) % n], pts[(i + 1) % n]))
}

pub fn protocol_violations(chain: &PolyChain, params: &ProtocolParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let pts = &chain.points;
    for i in 0..pts.len() {
        if let Some(a) = corner_angle(pts, chain.closed, i) {
            if a < FRAC_PI_2 - params.eps_angle {
                out.push(Violation::Angle { vertex: i, degrees: a.to_degrees() });
            }
        }
    }
    for k in 0..chain.num_segments() {
        let (a, b) = chain.segment(k);
        let l = a.dist(b);
        if l <= params.e {
            out.push(Violation::Length { segment: k, length: l });
        }
    }
    out
}

fn dist_to_chain(p: Point2, c: &PolyChain) -> f64 {
    (0..c.num_segments())
        .filter_map(|k| point_segment_distance(p, c.segment(k)).ok())
        .map(|(d, _, _)| d)
        .fold(f64::INFINITY, f64::min)
}

fn samples(c: &PolyChain, step: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    for k in 0..c.num_segments() {
        let (a, b) = c.segment(k);
        let n = (a.dist(b) / step).ceil().max(1.0) as usize;
        out.extend((0..n).map(|i| a.lerp(b, i as f64 / n as f64)));
    }
    if !c.closed {
        out.extend(c.points.last().copied());
    }
    out
}

/// Two-sided Hausdorff distance, sampled at `step` along both chains.
pub fn hausdorff(a: &PolyChain, b: &PolyChain, step: f64) -> f64 {
    let ab = samples(a, step).into_iter().map(|p| dist_to_chain(p, b)).fold(0.0, f64::max);
    let ba = samples(b, step).into_iter().map(|p| dist_to_chain(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

fn in_box(p: Point2, b: &Aabb) -> bool {
    p.x >= b.min.x && p.x <= b.max.x && p.y >= b.min.y && p.y <= b.max.y
}

/// Hausdorff distance between two chains restricted to samples inside `region`.
fn local_hausdorff(a: &PolyChain, b: &PolyChain, region: &Aabb) -> f64 {
    let ab = samples(a, 0.1).into_iter().filter(|p| in_box(*p, region)).map(|p| dist_to_chain(p, b)).fold(0.0, f64::max);
    let ba = samples(b, 0.1).into_iter().filter(|p| in_box(*p, region)).map(|p| dist_to_chain(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Drops the vertices `idx` (taken modulo the length), merging neighbours that
/// end up coincident, as happens when a spike that doubled back is cut.
fn without_all(c: &PolyChain, idx: &[usize]) -> Option<PolyChain> {
    let n = c.points.len();
    if !c.closed && idx.iter().any(|&i| i == 0 || i >= n - 1) {
        return None;
    }
    let drop: Vec<usize> = idx.iter().map(|i| i % n).collect();
    let mut p: Vec<Point2> = (0..n).filter(|i| !drop.contains(i)).map(|i| c.points[i]).collect();
    p.dedup_by(|a, b| a.dist(*b) < 1e-12);
    if c.closed && p.len() > 1 && p[0].dist(p[p.len() - 1]) < 1e-12 {
        p.pop();
    }
    Some(PolyChain::new(p, c.closed))
}

/// Replaces corner `i` by two points at distance `d` along its incident segments.
fn chamfer(c: &PolyChain, i: usize, e: f64) -> Option<PolyChain> {
    let n = c.points.len();
    let (prev, v, next) = (c.points[(i + n - 1) % n], c.points[i], c.points[(i + 1) % n]);
    let theta = angle_at(v, prev, next);
    let d = 1.05 * e / (2.0 * (theta / 2.0).sin());
    if d >= v.dist(prev) - e || d >= v.dist(next) - e {
        return None;
    }
    let u = v + (prev - v) * (d / v.dist(prev));
    let w = v + (next - v) * (d / v.dist(next));
    let mut p = c.points.clone();
    p.splice(i..=i, [u, w]);
    Some(PolyChain::new(p, c.closed))
}

/// Squares off corner `i`: keeps it and adds a point so that both new corners
/// are right angles, turning a thin spike into a one-step staircase. `forward`
/// picks which incident segment stays straight.
fn square(c: &PolyChain, i: usize, e: f64, forward: bool) -> Option<PolyChain> {
    let n = c.points.len();
    let (prev, v, next) = (c.points[(i + n - 1) % n], c.points[i], c.points[(i + 1) % n]);
    let (from, to) = if forward { (prev, next) } else { (next, prev) };
    let d = v - from;
    let perp = Point2::new(-d.y, d.x) * (1.0 / d.norm());
    let w = v + perp * (to - v).dot(perp);
    if v.dist(w) <= e || w.dist(to) <= e {
        return None;
    }
    let mut p = c.points.clone();
    if forward {
        p.insert(i + 1, w);
    } else {
        p.insert(i, w);
    }
    Some(PolyChain::new(p, c.closed))
}

/// Candidate repairs around vertex `i`: removing up to three consecutive
/// vertices that include it, chamfering it, or squaring it off.
fn repairs(c: &PolyChain, i: usize, e: f64, with_chamfer: bool) -> Vec<PolyChain> {
    let n = c.points.len();
    let mut out = Vec::new();
    for w in 1..=3usize {
        for s in 0..w {
            let idx: Vec<usize> = (0..w).map(|k| i + n + k - s).collect();
            if w < n {
                out.extend(without_all(c, &idx));
            }
        }
    }
    if with_chamfer {
        out.extend(chamfer(c, i, e));
        out.extend(square(c, i, e, true));
        out.extend(square(c, i, e, false));
    }
    out
}

/// Removes zero-width hairs: corners where the chain doubles back along its own
/// line, as a one-pixel-wide column traces. They enclose no area, so dropping
/// them does not move the domain.
pub fn strip_hairs(chain: &PolyChain) -> PolyChain {
    let mut c = chain.clone();
    let min_pts = if c.closed { 3 } else { 2 };
    loop {
        let n = c.points.len();
        if n <= min_pts {
            return c;
        }
        let hair = (0..n).find(|&i| {
            corner_angle(&c.points, c.closed, i).is_some_and(|_| {
                let (prev, v, next) = (c.points[(i + n - 1) % n], c.points[i], c.points[(i + 1) % n]);
                let (a, b) = (prev - v, next - v);
                a.cross(b).abs() <= 1e-12 * a.norm() * b.norm() && a.dot(b) > 0.0
            })
        });
        match hair.and_then(|i| without_all(&c, &[i])) {
            Some(next) => c = next,
            None => return c,
        }
    }
}

/// Simplifies `chain` until it meets the protocol, keeping within the Hausdorff
/// budget of the input. Each step repairs the first violation with the candidate
/// that leaves the fewest violations, then the smallest deviation; a step must
/// reduce the violation count.
pub fn enforce_protocol(chain: &PolyChain, params: &ProtocolParams) -> Result<PolyChain> {
    let tol = Tolerance::default();
    let chain = &strip_hairs(chain);
    let mut cur = chain.clone();
    let min_pts = if chain.closed { 3 } else { 2 };
    let cap = 10 * chain.points.len() + 10;
    for _ in 0..cap {
        let violations = protocol_violations(&cur, params);
        let Some(&v) = violations.first() else {
            return Ok(cur);
        };
        let n = cur.points.len();
        let centre = match v {
            Violation::Angle { vertex, .. } => vec![(vertex, true)],
            Violation::Length { segment, .. } => vec![(segment, false), ((segment + 1) % n, false)],
        };
        let mut region = Aabb::empty();
        for &(i, _) in &centre {
            for k in 0..9 {
                region.include(cur.points[(i + n + k - 4) % n]);
            }
        }
        let region = region.inflate(2.0 * params.hausdorff);
        let mut best: Option<(usize, f64, PolyChain)> = None;
        for &(i, ch) in &centre {
            for cand in repairs(&cur, i, params.e, ch) {
                if cand.points.len() < min_pts || cand.signed_area().signum() != chain.signed_area().signum() {
                    continue;
                }
                let h = local_hausdorff(chain, &cand, &region);
                if h > params.hausdorff + 1e-9 {
                    continue;
                }
                let nv = protocol_violations(&cand, params).len();
                if nv >= violations.len() {
                    continue;
                }
                if best.as_ref().is_none_or(|b| (nv, h) < (b.0, b.1)) && cand.is_simple(tol) {
                    best = Some((nv, h, cand));
                }
            }
        }
        match best {
            Some((_, _, c)) => cur = c,
            None => return Err(Error::ProtocolUnsatisfiable(format!("{v:?}"))),
        }
    }
    Err(Error::ProtocolUnsatisfiable("simplification did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaffold::SQRT_045;

    fn chain(p: &[(f64, f64)]) -> PolyChain {
        PolyChain::new(p.iter().map(|&(x, y)| Point2::new(x, y)).collect(), true)
    }

    fn params() -> ProtocolParams {
        ProtocolParams::new(SQRT_045)
    }

    #[test]
    fn zero_width_hair_is_stripped() {
        let c = chain(&[(0.0, 0.0), (6.0, 0.0), (6.0, 4.0), (3.0, 4.0), (3.0, 7.0), (3.0, 4.0), (0.0, 4.0)]);
        let s = strip_hairs(&c);
        assert_eq!(s.points.len(), 5);
        assert!((s.signed_area() - c.signed_area()).abs() < 1e-12);
        assert!(enforce_protocol(&c, &params()).is_ok());
    }

    #[test]
    fn rectangle_unchanged() {
        let c = chain(&[(0., 0.), (5., 0.), (5., 3.), (0., 3.)]);
        assert!(protocol_violations(&c, &params()).is_empty());
        assert_eq!(enforce_protocol(&c, &params()).unwrap(), c);
    }

    #[test]
    fn forty_five_degree_turn_is_fine() {
        let c = chain(&[(0., 0.), (6., 0.), (9., 3.), (9., 8.), (0., 8.)]);
        let v = protocol_violations(&c, &params());
        assert!(v.is_empty(), "{v:?}");
        assert!((angle_at(c.points[1], c.points[0], c.points[2]).to_degrees() - 135.0).abs() < 1e-9);
    }

    #[test]
    fn doubled_back_spur_is_removed() {
        let c = chain(&[(0., 0.), (6., 0.), (6., 5.), (3., 5.), (3., 6.), (3., 5.), (0., 5.)]);
        let out = enforce_protocol(&c, &params()).unwrap();
        assert_eq!(out, chain(&[(0., 0.), (6., 0.), (6., 5.), (3., 5.), (0., 5.)]));
    }

    #[test]
    fn sharp_spike_is_fixed_within_budget() {
        // A one-pixel spike: the tip angle is well below 90 degrees.
        let c = chain(&[(0., 0.), (4., 0.), (4., 4.), (2.5, 4.), (2., 5.), (1.5, 4.), (0., 4.)]);
        assert!(!protocol_violations(&c, &params()).is_empty());
        let out = enforce_protocol(&c, &params()).unwrap();
        assert!(protocol_violations(&out, &params()).is_empty());
        for i in 0..out.points.len() {
            assert!(corner_angle(&out.points, true, i).unwrap() >= FRAC_PI_2 - 1e-6);
        }
        assert!(out.min_segment_length() > SQRT_045);
        assert!(hausdorff(&c, &out, 0.05) <= 1.0 + 1e-9);
        assert_eq!(enforce_protocol(&out, &params()).unwrap(), out);
    }

    #[test]
    fn staircase_jog_merged() {
        // A sub-e jog on an otherwise straight edge.
        let c = chain(&[(0., 0.), (4., 0.), (4., 0.5), (8., 0.5), (8., 6.), (0., 6.)]);
        let out = enforce_protocol(&c, &params()).unwrap();
        let k = out.num_segments();
        for s in 0..k {
            let (a, b) = out.segment(s);
            assert!(a.dist(b) > SQRT_045);
        }
        assert!(protocol_violations(&out, &params()).is_empty());
        assert!(hausdorff(&c, &out, 0.05) <= 1.0 + 1e-9);
    }

    #[test]
    fn thin_needle_unsatisfiable() {
        let c = chain(&[(0., 0.), (20., 0.), (0., 0.4)]);
        assert!(matches!(enforce_protocol(&c, &params()), Err(Error::ProtocolUnsatisfiable(_))));
    }
}
