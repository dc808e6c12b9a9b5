//! Binary masks and the PGM/PBM subset used for input.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major occupancy; pixel `(x, y)` is the unit square centred at `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitmapMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BitmapMask {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1);
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn from_fn<F: Fn(usize, usize) -> bool>(width: usize, height: usize, f: F) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.bits[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-range coordinates read as background.
    pub fn get_i(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn invert(&mut self) {
        for b in &mut self.bits {
            *b = !*b;
        }
    }

    /// Binary PGM, foreground black.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 0u8 } else { 255u8 }));
        out
    }
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() && self.data[self.pos] != b'#' {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::CorruptHeader("unexpected end of header".into()));
        }
        std::str::from_utf8(&self.data[start..self.pos]).map_err(|_| Error::CorruptHeader("non-ASCII header".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| Error::CorruptHeader(format!("bad {what}: {t:?}")))
    }
}

/// Parses binary PGM (P5, maxval 255, dark below 128) or ASCII PBM (P1).
/// Foreground is dark unless `invert` is set.
pub fn parse_bitmap(data: &[u8], invert: bool) -> Result<BitmapMask> {
    let mut h = Header { data, pos: 0 };
    let magic = h.token().map_err(|_| Error::CorruptHeader("missing magic".into()))?;
    let mut mask = match magic {
        "P5" => {
            let w = h.number("width")?;
            let ht = h.number("height")?;
            let maxval = h.number("maxval")?;
            if maxval != 255 {
                return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval}")));
            }
            if w == 0 || ht == 0 {
                return Err(Error::CorruptHeader("zero dimension".into()));
            }
            // Exactly one whitespace byte separates the header from the raster.
            let start = h.pos + 1;
            let need = w * ht;
            if data.len() < start + need {
                return Err(Error::CorruptHeader("raster shorter than declared".into()));
            }
            let raster = &data[start..start + need];
            BitmapMask { width: w, height: ht, bits: raster.iter().map(|&v| v < 128).collect() }
        }
        "P1" => {
            let w = h.number("width")?;
            let ht = h.number("height")?;
            if w == 0 || ht == 0 {
                return Err(Error::CorruptHeader("zero dimension".into()));
            }
            let mut bits = Vec::with_capacity(w * ht);
            while bits.len() < w * ht {
                h.skip_ws();
                match data.get(h.pos) {
                    Some(b'1') => bits.push(true),
                    Some(b'0') => bits.push(false),
                    Some(_) => return Err(Error::CorruptHeader("PBM raster must be 0/1".into())),
                    None => return Err(Error::CorruptHeader("raster shorter than declared".into())),
                }
                h.pos += 1;
            }
            BitmapMask { width: w, height: ht, bits }
        }
        other => return Err(Error::UnsupportedFormat(format!("magic {other:?}"))),
    };
    if invert {
        mask.invert();
    }
    Ok(mask)
}

pub fn load_bitmap(path: &Path, invert: bool) -> Result<BitmapMask> {
    parse_bitmap(&std::fs::read(path)?, invert)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbm_two_by_two() {
        let m = parse_bitmap(b"P1\n2 2\n1 0\n0 1\n", false).unwrap();
        assert_eq!(m.count(), 2);
        assert!(m.get(0, 0) && m.get(1, 1));
    }

    #[test]
    fn pgm_16bit_unsupported() {
        assert!(matches!(parse_bitmap(b"P5\n1 1\n65535\n\0\0", false), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn corrupt_header() {
        assert!(matches!(parse_bitmap(b"P5\nx 1\n255\n\0", false), Err(Error::CorruptHeader(_))));
        assert!(matches!(parse_bitmap(b"P5\n4 4\n255\n\0", false), Err(Error::CorruptHeader(_))));
    }

    #[test]
    fn pgm_roundtrip_and_invert() {
        let m = BitmapMask::from_fn(5, 3, |x, y| (x + y) % 2 == 0);
        let back = parse_bitmap(&m.to_pgm(), false).unwrap();
        assert_eq!(back, m);
        let inv = parse_bitmap(&m.to_pgm(), true).unwrap();
        assert_eq!(inv.count(), 15 - m.count());
    }

    #[test]
    fn header_comments() {
        let m = parse_bitmap(b"P1\n# comment\n1 1\n1\n", false).unwrap();
        assert_eq!(m.count(), 1);
    }
}
