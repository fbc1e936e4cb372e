//! `FWF1` binary field files.
//!
//! Layout (little-endian): magic `FWF1`, `u32` dimension, `u32` points per
//! axis, `f64` half-width, `f64` operator order, then `Nⁿ` interleaved
//! `(re, im)` `f64` pairs in row-major order.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Field, GridError, GridSpec};

pub const MAGIC: &[u8; 4] = b"FWF1";

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error("bad magic bytes {0:?}, expected \"FWF1\"")]
    Magic([u8; 4]),
    #[error("truncated field payload: {0}")]
    Truncated(io::Error),
    #[error("invalid grid in header: {0}")]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(io::Error),
}

/// A field together with the operator order it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: Field,
    pub order: f64,
}

pub fn write_field<W: Write>(mut w: W, field: &Field, order: f64) -> Result<(), FieldIoError> {
    let spec = field.spec();
    let mut buf = Vec::with_capacity(24 + 16 * spec.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(spec.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(spec.points() as u32).to_le_bytes());
    buf.extend_from_slice(&spec.half_width().to_le_bytes());
    buf.extend_from_slice(&order.to_le_bytes());
    for z in field.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf).map_err(FieldIoError::Io)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), FieldIoError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            FieldIoError::Truncated(e)
        } else {
            FieldIoError::Io(e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, FieldIoError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, FieldIoError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_field<R: Read>(mut r: R) -> Result<FieldFile, FieldIoError> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(FieldIoError::Magic(magic));
    }
    let dim = read_u32(&mut r)? as usize;
    let points = read_u32(&mut r)? as usize;
    let half_width = read_f64(&mut r)?;
    let order = read_f64(&mut r)?;
    let spec = GridSpec::new(dim, points, half_width)?;
    let mut payload = vec![0u8; 16 * spec.len()];
    read_exact(&mut r, &mut payload)?;
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok(FieldFile {
        field: Field::new(spec, values)?,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let spec = GridSpec::new(2, 8, 1.5).unwrap();
        Field::from_fn(spec, |x| Complex64::new(x[0], -x[1] * 0.5)).unwrap()
    }

    #[test]
    fn header_layout_is_bit_exact() {
        let mut bytes = Vec::new();
        write_field(&mut bytes, &sample(), 0.75).unwrap();
        assert_eq!(&bytes[..4], b"FWF1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0.75);
        assert_eq!(bytes.len(), 28 + 64 * 16);
        // second point of the first row: x = -1.5, y = -1.125
        let re = f64::from_le_bytes(bytes[44..52].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[52..60].try_into().unwrap());
        assert_eq!((re, im), (-1.5, 0.5625));
    }

    #[test]
    fn round_trip() {
        let mut bytes = Vec::new();
        write_field(&mut bytes, &sample(), 0.5).unwrap();
        let back = read_field(bytes.as_slice()).unwrap();
        assert_eq!(back.field, sample());
        assert_eq!(back.order, 0.5);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut bytes = Vec::new();
        write_field(&mut bytes, &sample(), 0.5).unwrap();
        let mut wrong = bytes.clone();
        wrong[3] = b'2';
        assert!(matches!(
            read_field(wrong.as_slice()),
            Err(FieldIoError::Magic(_))
        ));
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            read_field(bytes.as_slice()),
            Err(FieldIoError::Truncated(_))
        ));
        assert!(matches!(
            read_field(&b"FW"[..]),
            Err(FieldIoError::Truncated(_))
        ));
    }
}
