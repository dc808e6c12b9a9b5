//! Uniform bucket grid for proximity queries.

use crate::geom::{Aabb, Point2};

/// Dense uniform grid of cells, each holding item ids whose boxes overlap it.
#[derive(Clone, Debug)]
pub struct BucketGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl BucketGrid {
    pub fn new(bounds: Aabb, cell: f64) -> Self {
        assert!(cell > 0.0);
        let b = if bounds.is_empty() {
            Aabb { min: Point2::default(), max: Point2::default() }
        } else {
            bounds
        };
        let nx = (((b.max.x - b.min.x) / cell).floor() as usize + 1).max(1);
        let ny = (((b.max.y - b.min.y) / cell).floor() as usize + 1).max(1);
        Self { origin: b.min, cell, nx, ny, cells: vec![Vec::new(); nx * ny] }
    }

    fn clamp_range(&self, lo: f64, hi: f64, origin: f64, n: usize) -> Option<(usize, usize)> {
        let a = ((lo - origin) / self.cell).floor();
        let b = ((hi - origin) / self.cell).floor();
        if b < 0.0 || a >= n as f64 {
            return None;
        }
        let a = a.max(0.0) as usize;
        let b = (b as usize).min(n - 1);
        Some((a, b))
    }

    fn cell_range(&self, b: &Aabb) -> Option<(usize, usize, usize, usize)> {
        let (x0, x1) = self.clamp_range(b.min.x, b.max.x, self.origin.x, self.nx)?;
        let (y0, y1) = self.clamp_range(b.min.y, b.max.y, self.origin.y, self.ny)?;
        Some((x0, x1, y0, y1))
    }

    pub fn insert(&mut self, id: u32, b: Aabb) {
        if let Some((x0, x1, y0, y1)) = self.cell_range(&b) {
            for j in y0..=y1 {
                for i in x0..=x1 {
                    self.cells[j * self.nx + i].push(id);
                }
            }
        }
    }

    pub fn insert_point(&mut self, id: u32, p: Point2) {
        self.insert(id, Aabb { min: p, max: p });
    }

    /// Calls `f` for every id stored in a cell touched by `b`. An id may be
    /// reported more than once when its box spans several cells.
    pub fn query<F: FnMut(u32)>(&self, b: Aabb, mut f: F) {
        if let Some((x0, x1, y0, y1)) = self.cell_range(&b) {
            for j in y0..=y1 {
                for i in x0..=x1 {
                    for &id in &self.cells[j * self.nx + i] {
                        f(id);
                    }
                }
            }
        }
    }

    /// Sorted, deduplicated ids near `b`.
    pub fn query_unique(&self, b: Aabb) -> Vec<u32> {
        let mut out = Vec::new();
        self.query(b, |id| out.push(id));
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn query_radius(&self, p: Point2, r: f64) -> Vec<u32> {
        self.query_unique(Aabb { min: p, max: p }.inflate(r))
    }
}

/// Merges points closer than `eps`; quantized at `eps/2` with neighbor probing.
#[derive(Debug, Default)]
pub struct Welder {
    eps: f64,
    map: std::collections::HashMap<(i64, i64), Vec<u32>>,
    pub points: Vec<Point2>,
}

impl Welder {
    pub fn new(eps: f64) -> Self {
        Self { eps, map: Default::default(), points: Vec::new() }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        let q = self.eps * 0.5;
        ((p.x / q).floor() as i64, (p.y / q).floor() as i64)
    }

    pub fn find(&self, p: Point2) -> Option<u32> {
        let (kx, ky) = self.key(p);
        let mut best: Option<(f64, u32)> = None;
        for dy in -2..=2 {
            for dx in -2..=2 {
                if let Some(ids) = self.map.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let d = self.points[id as usize].dist(p);
                        if d < self.eps && best.is_none_or(|(bd, bid)| (d, id) < (bd, bid)) {
                            best = Some((d, id));
                        }
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }

    pub fn insert(&mut self, p: Point2) -> u32 {
        if let Some(id) = self.find(p) {
            return id;
        }
        let id = self.points.len() as u32;
        self.points.push(p);
        let k = self.key(p);
        self.map.entry(k).or_default().push(id);
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_query_finds_inserted() {
        let mut g = BucketGrid::new(Aabb::from_points([Point2::new(0., 0.), Point2::new(10., 10.)]), 1.0);
        g.insert_point(7, Point2::new(3.2, 4.7));
        assert_eq!(g.query_radius(Point2::new(3.0, 4.5), 0.5), vec![7]);
        assert!(g.query_radius(Point2::new(8.0, 8.0), 0.5).is_empty());
    }

    #[test]
    fn welder_merges_within_eps() {
        let mut w = Welder::new(1e-9);
        let a = w.insert(Point2::new(1.0, 1.0));
        let b = w.insert(Point2::new(1.0 + 4e-10, 1.0));
        let c = w.insert(Point2::new(1.0 + 3e-9, 1.0));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
