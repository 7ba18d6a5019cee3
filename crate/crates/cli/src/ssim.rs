//! Similarity matrix files.
//!
//! Little-endian layout: `"SSIM"`, u32 |V|, u32 length + UTF-8 source tag,
//! then the upper triangle including the diagonal as f32, row-major. Masked
//! (all-zero) words are recovered from their zero diagonal.

use std::path::Path;

use assocgeom_core::similarity::{SimilarityMatrix, SourceTag};

use crate::binio::{put_f32, put_string, put_u32, Cursor};
use crate::error::{Error, Result};
use crate::fsutil;

pub const MAGIC: &[u8; 4] = b"SSIM";

pub fn encode(s: &SimilarityMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + s.packed().len() * 4);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, s.len() as u32);
    put_string(&mut out, &s.tag().to_string());
    for &x in s.packed() {
        put_f32(&mut out, x as f32);
    }
    out
}

pub fn decode(path: &Path, bytes: &[u8]) -> Result<SimilarityMatrix> {
    let mut c = Cursor::new(path, bytes);
    if c.take(4)? != MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf(), expected: "SSIM" });
    }
    let n = c.u32()? as usize;
    let tag = SourceTag::parse(&c.string()?);
    let values = c.f32s(SimilarityMatrix::packed_len(n))?;
    c.finish()?;
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::malformed(path, "non-finite similarity value"));
    }
    Ok(SimilarityMatrix::from_packed_unit_diagonal(n, values.iter().map(|&x| x as f64).collect(), tag)?)
}

pub fn write(path: &Path, s: &SimilarityMatrix) -> Result<()> {
    let bytes = encode(s);
    fsutil::write_atomic(path, |w| w.write_all(&bytes).map_err(|e| Error::io(path, e)))
}

pub fn read(path: &Path) -> Result<SimilarityMatrix> {
    decode(path, &fsutil::read_bytes(path)?)
}
