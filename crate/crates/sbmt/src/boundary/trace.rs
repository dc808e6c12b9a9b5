//! Moore-neighbour contour tracing with Jacob's stopping criterion.
//!
//! Foreground is 8-connected and background 4-connected. Each foreground
//! component yields one outer contour and each enclosed background component one
//! hole contour, both through pixel centres.

use std::collections::VecDeque;

use super::{BitmapMask, PolyChain};
use crate::error::{Error, Result};
use crate::geom::Point2;

/// Clockwise in image space (y down), starting west.
const DIRS: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

fn dir_index(d: (i64, i64)) -> usize {
    DIRS.iter().position(|&x| x == d).expect("backtrack must be an 8-neighbour")
}

#[derive(Clone, Debug, Default)]
pub struct TraceOutput {
    pub chains: Vec<PolyChain>,
    /// Components whose contour encloses less than one pixel of area.
    pub rejected: usize,
}

fn moore(mask: &BitmapMask, start: (i64, i64), back_dir: usize) -> Vec<(i64, i64)> {
    let fg = |p: (i64, i64)| mask.get_i(p.0, p.1);
    let start_b = (start.0 + DIRS[back_dir].0, start.1 + DIRS[back_dir].1);
    let mut out = vec![start];
    let (mut p, mut b) = (start, start_b);
    let cap = 4 * (mask.width + 2) * (mask.height + 2) + 16;
    for _ in 0..cap {
        let d0 = dir_index((b.0 - p.0, b.1 - p.1));
        let mut next = None;
        for k in 1..=8 {
            let d = (d0 + k) % 8;
            let c = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
            if fg(c) {
                let pd = DIRS[(d + 7) % 8];
                next = Some((c, (p.0 + pd.0, p.1 + pd.1)));
                break;
            }
        }
        let Some((c, nb)) = next else { return out };
        if c == start && nb == start_b {
            break;
        }
        out.push(c);
        p = c;
        b = nb;
    }
    out
}

/// Drops vertices that continue straight on; keeps reversals.
pub(crate) fn merge_collinear(pts: &[Point2], closed: bool) -> Vec<Point2> {
    let mut v: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts {
        if v.last() != Some(&p) {
            v.push(p);
        }
    }
    if closed {
        while v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
    }
    loop {
        let n = v.len();
        if n < 3 {
            return v;
        }
        let straight = |i: usize| -> bool {
            let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            let (u, w) = (b - a, c - b);
            u.cross(w) == 0.0 && u.dot(w) > 0.0
        };
        let range = if closed { 0..n } else { 1..n - 1 };
        let keep: Vec<bool> = (0..n).map(|i| !(range.contains(&i) && straight(i))).collect();
        if keep.iter().all(|k| *k) {
            return v;
        }
        v = v.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
    }
}

fn to_chain(pixels: &[(i64, i64)], outer: bool) -> Option<PolyChain> {
    let pts: Vec<Point2> = pixels.iter().map(|&(x, y)| Point2::new(x as f64, y as f64)).collect();
    let merged = merge_collinear(&pts, true);
    let mut c = PolyChain::new(merged, true);
    let a = c.signed_area();
    if c.points.len() < 3 || a.abs() < 1.0 {
        return None;
    }
    if (a > 0.0) != outer {
        c = c.reversed();
    }
    Some(c)
}

fn flood(mask: &BitmapMask, label: &mut [u32], seed: (usize, usize), id: u32, want: bool, eight: bool) {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let mut q = VecDeque::from([seed]);
    label[seed.1 * mask.width + seed.0] = id;
    let nbrs: &[(i64, i64)] = if eight { &DIRS } else { &[(-1, 0), (1, 0), (0, -1), (0, 1)] };
    while let Some((x, y)) = q.pop_front() {
        for &(dx, dy) in nbrs {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let (ux, uy) = (nx as usize, ny as usize);
            let i = uy * mask.width + ux;
            if label[i] == 0 && mask.get(ux, uy) == want {
                label[i] = id;
                q.push_back((ux, uy));
            }
        }
    }
}

pub fn trace_contours_detailed(mask: &BitmapMask) -> Result<TraceOutput> {
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let (w, h) = (mask.width, mask.height);
    let mut out = TraceOutput::default();

    let mut fg_label = vec![0u32; w * h];
    let mut next = 1;
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) && fg_label[y * w + x] == 0 {
                flood(mask, &mut fg_label, (x, y), next, true, true);
                next += 1;
                match to_chain(&moore(mask, (x as i64, y as i64), 0), true) {
                    Some(c) => out.chains.push(c),
                    None => out.rejected += 1,
                }
            }
        }
    }

    // Background reachable from the image border is exterior; the rest are holes.
    let mut bg_label = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            if border && !mask.get(x, y) && bg_label[y * w + x] == 0 {
                flood(mask, &mut bg_label, (x, y), 1, false, false);
            }
        }
    }
    let mut hole_id = 2;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) && bg_label[y * w + x] == 0 {
                flood(mask, &mut bg_label, (x, y), hole_id, false, false);
                hole_id += 1;
                // First hole pixel in raster order: its north neighbour is foreground.
                let start = (x as i64, y as i64 - 1);
                match to_chain(&moore(mask, start, 6), false) {
                    Some(c) => out.chains.push(c),
                    None => out.rejected += 1,
                }
            }
        }
    }
    Ok(out)
}

/// Closed chains for every component; degenerate contours are dropped.
pub fn trace_contours(mask: &BitmapMask) -> Result<Vec<PolyChain>> {
    Ok(trace_contours_detailed(mask)?.chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Tolerance;

    #[test]
    fn solid_square_gives_four_corners() {
        let m = BitmapMask::from_fn(5, 5, |x, y| (1..4).contains(&x) && (1..4).contains(&y));
        let c = trace_contours(&m).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].points.len(), 4);
        assert!(c[0].signed_area() > 0.0);
        assert_eq!(c[0].signed_area(), 4.0);
    }

    #[test]
    fn single_pixel_rejected() {
        let m = BitmapMask::from_fn(3, 3, |x, y| x == 1 && y == 1);
        let t = trace_contours_detailed(&m).unwrap();
        assert!(t.chains.is_empty());
        assert_eq!(t.rejected, 1);
    }

    #[test]
    fn empty_mask_errors() {
        assert!(matches!(trace_contours(&BitmapMask::new(4, 4)), Err(Error::EmptyMask)));
    }

    #[test]
    fn ring_has_outer_and_hole() {
        let m = BitmapMask::from_fn(12, 12, |x, y| {
            let (dx, dy) = (x as f64 - 5.5, y as f64 - 5.5);
            let r = (dx * dx + dy * dy).sqrt();
            (2.0..5.0).contains(&r)
        });
        let c = trace_contours(&m).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c[0].signed_area() > 0.0);
        assert!(c[1].signed_area() < 0.0);
        for ch in &c {
            assert!(ch.is_simple(Tolerance::default()));
        }
    }

    #[test]
    fn diagonal_staircase_turns_are_multiples_of_45() {
        let m = BitmapMask::from_fn(20, 20, |x, y| x + y < 20 && x > 1 && y > 1);
        let c = trace_contours(&m).unwrap();
        let ch = &c[0];
        let n = ch.points.len();
        for i in 0..n {
            let (a, b, d) = (ch.points[(i + n - 1) % n], ch.points[i], ch.points[(i + 1) % n]);
            let ang = crate::geom::angle_at(b, a, d).to_degrees();
            let r = (ang / 45.0).round() * 45.0;
            assert!((ang - r).abs() < 1e-9, "angle {ang}");
        }
    }
}
