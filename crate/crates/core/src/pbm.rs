//! Portable bitmap (PBM) reading and writing.
//!
//! Both the ASCII (`P1`) and packed binary (`P4`) variants are read; `P4` is
//! written. `1` is black, as in the PBM convention. `P4` rows are padded to a
//! byte boundary; padding bits are ignored on read and zeroed on write.

use std::fs;
use std::path::Path;

use crate::codec::BinaryImage;
use crate::error::{Error, Result};

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(start, format!("{what} is out of range")))
    }
}

/// Parses a `P1` or `P4` bitmap.
pub fn parse_pbm(data: &[u8]) -> Result<BinaryImage> {
    if data.len() < 2 || data[0] != b'P' {
        return Err(Error::parse(0, "missing PBM magic number"));
    }
    let binary = match data[1] {
        b'1' => false,
        b'4' => true,
        _ => return Err(Error::parse(1, "only P1 and P4 bitmaps are supported")),
    };
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let total = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(cur.pos, "image dimensions overflow"))?;
    let mut pixels = Vec::with_capacity(total);
    if binary {
        match data.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::parse(cur.pos, "expected whitespace before raster")),
        }
        let row_bytes = width.div_ceil(8);
        let needed = row_bytes * height;
        let raster = &data[cur.pos..];
        if raster.len() < needed {
            return Err(Error::parse(
                data.len(),
                format!("raster truncated: {} of {needed} bytes", raster.len()),
            ));
        }
        for y in 0..height {
            let row = &raster[y * row_bytes..(y + 1) * row_bytes];
            for x in 0..width {
                pixels.push((row[x / 8] >> (7 - x % 8)) & 1);
            }
        }
    } else {
        while pixels.len() < total {
            cur.skip_whitespace_and_comments();
            match data.get(cur.pos) {
                Some(b'0') => pixels.push(0),
                Some(b'1') => pixels.push(1),
                Some(&other) => {
                    return Err(Error::parse(
                        cur.pos,
                        format!("unexpected byte {:?} in raster", other as char),
                    ))
                }
                None => {
                    return Err(Error::parse(
                        cur.pos,
                        format!("raster truncated: {} of {total} pixels", pixels.len()),
                    ))
                }
            }
            cur.pos += 1;
        }
    }
    BinaryImage::new(width, height, pixels)
}

/// Encodes as `P4`.
pub fn encode_p4(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", img.width(), img.height()).into_bytes();
    let row_bytes = img.width().div_ceil(8);
    for y in 0..img.height() {
        let mut row = vec![0u8; row_bytes];
        for x in 0..img.width() {
            if img.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

/// Encodes as `P1`, one raster row per line.
pub fn encode_p1(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P1\n{} {}\n", img.width(), img.height());
    for y in 0..img.height() {
        let row: Vec<&str> = (0..img.width())
            .map(|x| if img.get(x, y) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn read_pbm(path: impl AsRef<Path>) -> Result<BinaryImage> {
    parse_pbm(&fs::read(path)?)
}

pub fn write_pbm(img: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_p4(img))?;
    Ok(())
}
