//! Procedural test bitmaps: a five-point star, a droplet, a Y glyph, a star with a
//! hole, and a mirror-symmetric trapezoid for the solver.

use crate::boundary::{BitmapMask, PolyChain};
use crate::geom::{Aabb, Point2};
use crate::scaffold::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixture {
    Star,
    Droplet,
    Y,
    StarWithHole,
}

impl Fixture {
    pub const MAIN: [Fixture; 3] = [Fixture::Star, Fixture::Droplet, Fixture::Y];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Star => "star",
            Fixture::Droplet => "droplet",
            Fixture::Y => "y",
            Fixture::StarWithHole => "star_hole",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Fixture::Star, Fixture::Droplet, Fixture::Y, Fixture::StarWithHole].into_iter().find(|f| f.name() == s)
    }

    /// The bitmap at `size × size` pixels.
    pub fn mask(self, size: usize) -> BitmapMask {
        match self {
            Fixture::Star => star(size),
            Fixture::Droplet => droplet(size),
            Fixture::Y => y_glyph(size),
            Fixture::StarWithHole => star_with_hole(size),
        }
    }
}

fn star_vertices(cx: f64, cy: f64, outer: f64, inner: f64) -> Vec<Point2> {
    (0..10)
        .map(|k| {
            let r = if k % 2 == 0 { outer } else { inner };
            let t = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
            Point2::new(cx + r * t.cos(), cy - r * t.sin())
        })
        .collect()
}

fn inside_polygon(p: Point2, poly: &[Point2]) -> bool {
    crate::boundary::point_in_chains(p, &[PolyChain::new(poly.to_vec(), true)])
}

pub fn star(size: usize) -> BitmapMask {
    let s = size as f64;
    let poly = star_vertices(s / 2.0, s / 2.0 + 0.03 * s, 0.44 * s, 0.2 * s);
    BitmapMask::from_fn(size, size, |x, y| inside_polygon(Point2::new(x as f64, y as f64), &poly))
}

pub fn star_with_hole(size: usize) -> BitmapMask {
    let s = size as f64;
    let c = Point2::new(s / 2.0, s / 2.0 + 0.03 * s);
    let mut m = star(size);
    for y in 0..size {
        for x in 0..size {
            if Point2::new(x as f64, y as f64).dist(c) < 0.09 * s {
                m.set(x, y, false);
            }
        }
    }
    m
}

/// A superellipse body with a pointed top.
pub fn droplet(size: usize) -> BitmapMask {
    let s = size as f64;
    let (cx, cy) = (s / 2.0, 0.6 * s);
    let (a, b, n) = (0.32 * s, 0.3 * s, 2.6);
    BitmapMask::from_fn(size, size, |x, y| {
        let (dx, dy) = ((x as f64 - cx) / a, (y as f64 - cy) / b);
        let body = dx.abs().powf(n) + dy.abs().powf(n) <= 1.0;
        // Cone from the tip down to the body's widest row.
        let tip_y = 0.08 * s;
        let t = (y as f64 - tip_y) / (cy - tip_y);
        let cone = (0.0..=1.0).contains(&t) && (x as f64 - cx).abs() <= t * a * 0.85;
        body || cone
    })
}

fn capsule(p: Point2, a: Point2, b: Point2, r: f64) -> bool {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm2()).clamp(0.0, 1.0);
    p.dist(a + ab * t) <= r
}

pub fn y_glyph(size: usize) -> BitmapMask {
    let s = size as f64;
    let j = Point2::new(0.5 * s, 0.5 * s);
    let arms = [Point2::new(0.18 * s, 0.12 * s), Point2::new(0.82 * s, 0.12 * s), Point2::new(0.5 * s, 0.9 * s)];
    let r = 0.085 * s;
    BitmapMask::from_fn(size, size, |x, y| {
        let p = Point2::new(x as f64, y as f64);
        arms.iter().any(|&a| capsule(p, j, a, r))
    })
}

/// A trapezoid symmetric under `x -> 2 axis - x` on a grid with a fixed origin,
/// for the solver. Every side runs along grid lines: the patch of the corner-cut
/// key that a slanted or mid-row side produces is not mirror-symmetric, so any
/// other choice breaks the mesh's symmetry.
#[derive(Clone, Debug)]
pub struct MirrorFixture {
    pub chain: PolyChain,
    pub axis: f64,
    pub grid: GridSpec,
}

/// Base half-width `half_cells + 1/2` edges, height `rows` rows.
pub fn mirror_trapezoid(e: f64, half_cells: usize, rows: usize) -> MirrorFixture {
    let h = e * 3f64.sqrt() / 2.0;
    let cols = 2 * half_cells + 4;
    let axis = cols as f64 * e / 2.0;
    let y0 = 2.0 * h;
    let y1 = y0 + rows as f64 * h;
    let w0 = (half_cells as f64 + 0.5) * e;
    let w1 = w0 - rows as f64 * e / 2.0;
    assert!(w1 > e, "trapezoid top too narrow");
    let pts = vec![
        Point2::new(axis - w0, y0),
        Point2::new(axis + w0, y0),
        Point2::new(axis + w1, y1),
        Point2::new(axis - w1, y1),
    ];
    let bbox = Aabb { min: Point2::new(0.0, 0.0), max: Point2::new(2.0 * axis, y1 + 2.0 * h) };
    let grid = GridSpec { origin: Some(Point2::new(0.0, 0.0)), ..GridSpec::new(bbox, e) };
    MirrorFixture { chain: PolyChain::new(pts, true), axis, grid }
}
