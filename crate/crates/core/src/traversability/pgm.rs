//! Binary PGM (P5) import/export: 255 = traversable, 0 = not.

use super::TraversabilityMask;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed PGM: {0}")]
    Malformed(String),
}

pub fn write_pgm<W: Write>(mut w: W, mask: &TraversabilityMask) -> Result<(), PgmError> {
    write_gray_pgm(
        &mut w,
        mask.width(),
        mask.height(),
        &mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect::<Vec<u8>>(),
    )
}

/// Raw 8-bit grayscale writer, also used for debug overlays.
pub fn write_gray_pgm<W: Write>(w: &mut W, width: usize, height: usize, data: &[u8]) -> Result<(), PgmError> {
    if data.len() != width * height {
        return Err(PgmError::Malformed("data length does not match dimensions".into()));
    }
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(data)?;
    Ok(())
}

/// Reads a P5 image; any sample at or above half of maxval is traversable.
pub fn read_pgm<R: Read>(mut r: R) -> Result<TraversabilityMask, PgmError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments between header tokens
        while pos < buf.len() {
            if buf[pos].is_ascii_whitespace() {
                pos += 1;
            } else if buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::Malformed("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&buf[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(PgmError::Malformed(format!("unsupported magic {}", fields[0])));
    }
    let parse = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| PgmError::Malformed(format!("bad {what}: {s}")))
    };
    let width = parse(&fields[1], "width")?;
    let height = parse(&fields[2], "height")?;
    let maxval = parse(&fields[3], "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::Malformed(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    if buf.len() < pos + n {
        return Err(PgmError::Malformed("truncated raster".into()));
    }
    let half = (maxval as u16 + 1) / 2;
    let bits = buf[pos..pos + n].iter().map(|&b| b as u16 >= half).collect();
    Ok(TraversabilityMask::from_bits(width, height, bits).expect("length checked"))
}
