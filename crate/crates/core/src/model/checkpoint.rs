//! DGC1 checkpoint format.
//!
//! ```text
//! magic   "DGC1" (44 47 43 31)
//! u32     version = 1
//! u32 x6  p, h, d, enc_dim, hidden_dim, attn_dim
//! blocks  repeated, fixed order (see below):
//!           u16 name length, name bytes (UTF-8)
//!           u32 rank, rank x u32 dims
//!           f64 values, row-major
//! ```
//!
//! Everything is little-endian. Block order is the 48 learnable blocks in
//! slot order ([`DginParameters::block_names`]; weights rank 2
//! `[rows, cols]`, biases rank 1 `[rows]`) followed by `norm.mean` and
//! `norm.scale`, both rank 1 `[d]`. The file ends right after the last block.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DginHyperparams, DginParameters, ModelError, Normalizer};
use crate::ndiff::Tensor2;

pub const MAGIC: [u8; 4] = *b"DGC1";
pub const VERSION: u32 = 1;

/// Biases are stored rank 1, everything else rank 2.
fn block_dims(name: &str, block: &Tensor2) -> Vec<usize> {
    if name.ends_with(".bias") || name.contains(".b_") {
        vec![block.rows()]
    } else {
        vec![block.rows(), block.cols()]
    }
}

fn write_block<W: Write>(w: &mut W, name: &str, dims: &[usize], values: &[f64]) -> Result<(), ModelError> {
    w.write_all(&(name.len() as u16).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        w.write_all(&(*d as u32).to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write<W: Write>(params: &DginParameters, mut w: W) -> Result<(), ModelError> {
    let hp = params.hyper();
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [hp.p, hp.h, hp.d, hp.enc_dim, hp.hidden_dim, hp.attn_dim] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    for (block, name) in params.blocks().into_iter().zip(DginParameters::block_names()) {
        write_block(&mut w, &name, &block_dims(&name, block), block.data())?;
    }
    let d = params.norm.mean.len();
    write_block(&mut w, "norm.mean", &[d], &params.norm.mean)?;
    write_block(&mut w, "norm.scale", &[d], &params.norm.scale)?;
    w.flush()?;
    Ok(())
}

pub fn to_bytes(params: &DginParameters) -> Vec<u8> {
    let mut out = Vec::new();
    write(params, &mut out).expect("writing to a Vec cannot fail");
    out
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_block<R: Read>(r: &mut R, expected_name: &str, expected: &[usize]) -> Result<Vec<f64>, ModelError> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len)?;
    let mut name = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut name)?;
    if name != expected_name.as_bytes() {
        return Err(ModelError::ShapeMismatch(format!(
            "expected block {expected_name}, found {}",
            String::from_utf8_lossy(&name)
        )));
    }
    let rank = read_u32(r)? as usize;
    if rank != expected.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{expected_name}: rank {rank}, expected {}",
            expected.len()
        )));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(read_u32(r)? as usize);
    }
    if dims != expected {
        return Err(ModelError::ShapeMismatch(format!("{expected_name}: dims {dims:?}, expected {expected:?}")));
    }
    let count: usize = dims.iter().product();
    let mut raw = vec![0u8; 8 * count];
    r.read_exact(&mut raw)?;
    Ok(raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn read<R: Read>(mut r: R) -> Result<DginParameters, ModelError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(ModelError::VersionUnsupported(version));
    }
    let mut h = [0usize; 6];
    for v in &mut h {
        *v = read_u32(&mut r)? as usize;
    }
    let hyper = DginHyperparams {
        p: h[0],
        h: h[1],
        d: h[2],
        enc_dim: h[3],
        hidden_dim: h[4],
        attn_dim: h[5],
    };
    hyper.validate()?;

    let template = DginParameters::zeros(hyper)?;
    let mut blocks = Vec::with_capacity(template.blocks().len());
    for (slot, name) in template.blocks().into_iter().zip(DginParameters::block_names()) {
        let values = read_block(&mut r, &name, &block_dims(&name, slot))?;
        blocks.push(Tensor2::new(slot.rows(), slot.cols(), values)?);
    }
    let mean = read_block(&mut r, "norm.mean", &[hyper.d])?;
    let scale = read_block(&mut r, "norm.scale", &[hyper.d])?;

    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(ModelError::ShapeMismatch(format!("{} bytes after the last block", rest.len())));
    }
    DginParameters::from_blocks(hyper, blocks, Normalizer { mean, scale })
}

pub fn save(params: &DginParameters, path: impl AsRef<Path>) -> Result<(), ModelError> {
    write(params, BufWriter::new(File::create(path)?))
}

pub fn load(path: impl AsRef<Path>) -> Result<DginParameters, ModelError> {
    read(BufReader::new(File::open(path)?))
}
