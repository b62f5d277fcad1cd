//! STGF binary tensor format.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "STGF" (53 54 47 46)
//! 4       4           u32 version = 1
//! 8       16          u32 M, N, T, d
//! 24      4*M*N*T*d   f32 values, (lat, lon, time, feature) row-major
//! ```
//!
//! All integers and floats are little-endian. NaN marks a missing cell.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridError, SpatioTemporalTensor};

pub const MAGIC: [u8; 4] = *b"STGF";
pub const VERSION: u32 = 1;

pub fn write<W: Write>(tensor: &SpatioTemporalTensor, mut w: W) -> Result<(), GridError> {
    let (m, n, t, d) = tensor.dims();
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for dim in [m, n, t, d] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    for v in tensor.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_bytes(tensor: &SpatioTemporalTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 4 * tensor.values().len());
    write(tensor, &mut out).expect("writing to a Vec cannot fail");
    out
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, GridError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Reads one tensor and requires the stream to end right after it.
pub fn read<R: Read>(mut r: R) -> Result<SpatioTemporalTensor, GridError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(GridError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(GridError::VersionUnsupported(version));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = read_u32(&mut r)? as usize;
    }
    let [m, n, t, d] = dims;
    if m == 0 || n == 0 || t == 0 || d == 0 {
        return Err(GridError::InvalidDims { m, n, t_len: t, d });
    }
    let count = m
        .checked_mul(n)
        .and_then(|x| x.checked_mul(t))
        .and_then(|x| x.checked_mul(d))
        .ok_or(GridError::TruncatedFile)?;
    let mut raw = Vec::new();
    r.by_ref().take(4 * count as u64).read_to_end(&mut raw)?;
    if raw.len() != 4 * count {
        return Err(GridError::TruncatedFile);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(GridError::TrailingBytes(rest.len()));
    }
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    SpatioTemporalTensor::new(m, n, t, d, values)
}

pub fn save(tensor: &SpatioTemporalTensor, path: impl AsRef<Path>) -> Result<(), GridError> {
    write(tensor, BufWriter::new(File::create(path)?))
}

pub fn load(path: impl AsRef<Path>) -> Result<SpatioTemporalTensor, GridError> {
    read(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let x = SpatioTemporalTensor::new(1, 2, 1, 1, vec![1.5, f32::NAN]).unwrap();
        let b = to_bytes(&x);
        assert_eq!(&b[..4], &[0x53, 0x54, 0x47, 0x46]);
        assert_eq!(&b[4..8], &[1, 0, 0, 0]);
        assert_eq!(&b[8..24], &[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&b[24..28], &1.5f32.to_le_bytes());
        assert_eq!(b.len(), 32);
        assert!(read(&b[..]).unwrap().bit_eq(&x));
    }

    #[test]
    fn error_paths() {
        let x = SpatioTemporalTensor::filled(2, 2, 2, 1, 3.0).unwrap();
        let good = to_bytes(&x);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(read(&bad[..]), Err(GridError::BadMagic));

        let mut bad = good.clone();
        bad[4] = 7;
        assert_eq!(read(&bad[..]), Err(GridError::VersionUnsupported(7)));

        assert_eq!(read(&good[..good.len() - 1]), Err(GridError::TruncatedFile));
        assert_eq!(read(&good[..10]), Err(GridError::TruncatedFile));

        let mut long = good.clone();
        long.push(0);
        assert_eq!(read(&long[..]), Err(GridError::TrailingBytes(1)));
    }
}
