//! ASCII OFF and OBJ for planar triangle meshes (z written as 0, ignored on read).

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::HalfEdgeMesh;
use crate::error::{Error, Result};
use crate::geom::Point2;

pub fn off_string(mesh: &HalfEdgeMesh) -> String {
    let mut s = String::with_capacity(32 * (mesh.num_vertices() + mesh.num_faces()));
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.num_vertices(), mesh.num_faces());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", p.x, p.y);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn obj_string(mesh: &HalfEdgeMesh) -> String {
    let mut s = String::with_capacity(32 * (mesh.num_vertices() + mesh.num_faces()));
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} 0", p.x, p.y);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_off<W: Write>(mesh: &HalfEdgeMesh, mut w: W) -> Result<()> {
    w.write_all(off_string(mesh).as_bytes())?;
    Ok(())
}

pub fn write_obj<W: Write>(mesh: &HalfEdgeMesh, mut w: W) -> Result<()> {
    w.write_all(obj_string(mesh).as_bytes())?;
    Ok(())
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.ok_or_else(|| perr(line, "missing value"))?
        .parse()
        .map_err(|_| perr(line, "bad number"))
}

/// Reads the OFF subset written by [`write_off`]: triangles only, comments allowed.
pub fn read_off<R: BufRead>(r: R) -> Result<HalfEdgeMesh> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty() && !s.trim_start().starts_with('#')).unwrap_or(true));
    let (ln, head) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let head = head?;
    let mut counts_line = None;
    let head_t = head.trim();
    if head_t != "OFF" {
        if let Some(rest) = head_t.strip_prefix("OFF") {
            counts_line = Some((ln, rest.to_string()));
        } else {
            return Err(perr(ln, "missing OFF header"));
        }
    }
    let (ln, counts) = match counts_line {
        Some(c) => c,
        None => {
            let (l, s) = lines.next().ok_or_else(|| perr(ln, "missing counts"))?;
            (l, s?)
        }
    };
    let mut it = counts.split_whitespace();
    let nv: usize = num(it.next(), ln)?;
    let nf: usize = num(it.next(), ln)?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines.next().ok_or_else(|| perr(ln, "truncated vertex list"))?;
        let s = s?;
        let mut t = s.split_whitespace();
        verts.push(Point2::new(num(t.next(), l)?, num(t.next(), l)?));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = lines.next().ok_or_else(|| perr(ln, "truncated face list"))?;
        let s = s?;
        let mut t = s.split_whitespace();
        let k: usize = num(t.next(), l)?;
        if k != 3 {
            return Err(perr(l, "only triangles are supported"));
        }
        faces.push([num(t.next(), l)?, num(t.next(), l)?, num(t.next(), l)?]);
    }
    HalfEdgeMesh::from_indexed(verts, faces)
}

/// Reads `v` and `f` records of an OBJ file; faces must be triangles.
pub fn read_obj<R: BufRead>(r: R) -> Result<HalfEdgeMesh> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let l = i + 1;
        let mut t = line.split_whitespace();
        match t.next() {
            Some("v") => verts.push(Point2::new(num(t.next(), l)?, num(t.next(), l)?)),
            Some("f") => {
                let idx: Vec<u32> = t
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        head.parse::<u32>().map_err(|_| perr(l, "bad index")).and_then(|v| {
                            v.checked_sub(1).ok_or_else(|| perr(l, "OBJ indices are 1-based"))
                        })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(perr(l, "only triangles are supported"));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    HalfEdgeMesh::from_indexed(verts, faces)
}

pub fn read_mesh_file(path: &std::path::Path) -> Result<HalfEdgeMesh> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(e) if e == "obj" => read_obj(f),
        _ => read_off(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> HalfEdgeMesh {
        HalfEdgeMesh::from_indexed(
            vec![Point2::new(0., 0.), Point2::new(1., 0.), Point2::new(0.1, 0.7), Point2::new(1.3, 1.1)],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn off_header_and_roundtrip() {
        let m = sample();
        let s = off_string(&m);
        assert!(s.starts_with("OFF\n4 2 0\n"));
        let back = read_off(s.as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn obj_is_one_based_and_roundtrips() {
        let m = sample();
        let s = obj_string(&m);
        assert!(s.contains("f 1 2 3\n"));
        assert_eq!(read_obj(s.as_bytes()).unwrap(), m);
    }
}
