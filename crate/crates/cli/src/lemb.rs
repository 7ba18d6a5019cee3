//! Layer embedding files: one file per (model, strategy, layer).
//!
//! Little-endian layout: `"LEMB"`, u32 version (1), u32 |V|, u32 d,
//! u32 layer, u8 strategy code, u32 length + UTF-8 model id, then |V| rows
//! of d f32 values in vocabulary order.

use std::path::{Path, PathBuf};

use assocgeom_core::hidden::{LayerEmbeddings, Strategy};

use crate::binio::{put_f32, put_string, put_u32, Cursor};
use crate::error::{Error, Result};
use crate::fsutil;

pub const MAGIC: &[u8; 4] = b"LEMB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LembHeader {
    pub n_words: usize,
    pub dim: usize,
    pub layer: u32,
    pub strategy: Strategy,
    pub model_id: String,
}

pub fn encode(e: &LayerEmbeddings) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + e.vectors().len() * 4);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, e.n_words() as u32);
    put_u32(&mut out, e.dim() as u32);
    put_u32(&mut out, e.layer);
    out.push(e.strategy.code());
    put_string(&mut out, &e.model_id);
    for &x in e.vectors() {
        put_f32(&mut out, x as f32);
    }
    out
}

fn header(c: &mut Cursor<'_>, path: &Path) -> Result<LembHeader> {
    if c.take(4)? != MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf(), expected: "LEMB" });
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion { path: path.to_path_buf(), format: "LEMB", version });
    }
    let n_words = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let layer = c.u32()?;
    let code = c.u8()?;
    let strategy =
        Strategy::from_code(code).ok_or_else(|| Error::malformed(path, format!("unknown strategy code {code}")))?;
    let model_id = c.string()?;
    Ok(LembHeader { n_words, dim, layer, strategy, model_id })
}

pub fn decode(path: &Path, bytes: &[u8]) -> Result<LayerEmbeddings> {
    let mut c = Cursor::new(path, bytes);
    let h = header(&mut c, path)?;
    let values = c.f32s(h.n_words * h.dim)?;
    c.finish()?;
    Ok(LayerEmbeddings::from_f32(h.model_id, h.strategy, h.layer, h.n_words, h.dim, &values)?)
}

pub fn write(path: &Path, e: &LayerEmbeddings) -> Result<()> {
    let bytes = encode(e);
    fsutil::write_atomic(path, |w| w.write_all(&bytes).map_err(|err| Error::io(path, err)))
}

pub fn read(path: &Path) -> Result<LayerEmbeddings> {
    decode(path, &fsutil::read_bytes(path)?)
}

/// Reads and checks the word count against the vocabulary in use.
pub fn read_for_vocab(path: &Path, vocab_size: usize) -> Result<LayerEmbeddings> {
    let e = read(path)?;
    if e.n_words() != vocab_size {
        return Err(Error::malformed(
            path,
            format!("file covers {} words but the vocabulary has {vocab_size}", e.n_words()),
        ));
    }
    Ok(e)
}

pub fn read_header(path: &Path) -> Result<LembHeader> {
    use std::io::Read;
    let mut buf = Vec::new();
    fsutil::open(path)?.take(4096).read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    header(&mut Cursor::new(path, &buf), path)
}

/// `<dir>/<model>/<strategy>/layer_<NNN>.lemb`
pub fn layer_path(dir: &Path, model: &str, strategy: Strategy, layer: u32) -> PathBuf {
    dir.join(model).join(strategy.as_str()).join(format!("layer_{layer:03}.lemb"))
}

pub const LAYER_PATTERN: &str = "<embeddings_dir>/<model>/<strategy>/layer_<NNN>.lemb";

/// Layer files of one model and strategy, in layer order.
pub fn discover_layers(dir: &Path, model: &str, strategy: Strategy) -> Result<Vec<(u32, PathBuf)>> {
    let sub = dir.join(model).join(strategy.as_str());
    let missing = || Error::Missing {
        what: format!("embeddings for model {model:?}, strategy {}", strategy.as_str()),
        pattern: LAYER_PATTERN
            .replace("<model>", model)
            .replace("<strategy>", strategy.as_str())
            .replace("<embeddings_dir>", &dir.display().to_string()),
    };
    let entries = std::fs::read_dir(&sub).map_err(|_| missing())?;
    let mut layers = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&sub, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(num) = name.strip_prefix("layer_").and_then(|s| s.strip_suffix(".lemb")) {
            if let Ok(l) = num.parse::<u32>() {
                layers.push((l, entry.path()));
            }
        }
    }
    if layers.is_empty() {
        return Err(missing());
    }
    layers.sort();
    Ok(layers)
}

/// Static reference vectors: `<dir>/references/<name>.lemb`.
pub fn reference_path(dir: &Path, name: &str) -> PathBuf {
    dir.join("references").join(format!("{name}.lemb"))
}
