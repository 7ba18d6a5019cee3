//! Cue-response count matrices on disk: a coordinate CSV
//! (`row_word,col_word,value`) that is the source of truth, plus a binary
//! cache tagged with the CSV's hash.

use std::path::{Path, PathBuf};

use assocgeom_core::behavior::CueResponseMatrix;
use assocgeom_core::vocab::Vocabulary;

use crate::binio::{put_string, put_u32, put_u64, Cursor};
use crate::error::{Error, Result};
use crate::fsutil;

pub const CACHE_MAGIC: &[u8; 4] = b"LCOO";

pub fn cache_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("bin")
}

pub fn write_csv(path: &Path, m: &CueResponseMatrix, vocab: &Vocabulary) -> Result<()> {
    fsutil::write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::malformed(path, e.to_string());
        out.write_record(["row_word", "col_word", "value"]).map_err(err)?;
        for (i, j, v) in m.triplets() {
            out.write_record([vocab.word(i), &m.columns()[j], &v.to_string()]).map_err(err)?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    })
}

pub fn read_csv(path: &Path, vocab: &Vocabulary) -> Result<CueResponseMatrix> {
    let mut rdr = csv::Reader::from_reader(fsutil::open(path)?);
    let mut columns: Vec<String> = Vec::new();
    let mut index = std::collections::BTreeMap::new();
    let mut trip = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::malformed(path, e.to_string()))?;
        let bad = |msg: &str| Error::malformed(path, format!("row {}: {msg}", line + 2));
        if rec.len() != 3 {
            return Err(bad("expected row_word,col_word,value"));
        }
        let cue = vocab.require_id(&assocgeom_core::vocab::normalize_word(&rec[0]))?;
        let response = assocgeom_core::vocab::normalize_word(&rec[1]);
        let value: u64 = rec[2].trim().parse().map_err(|_| bad("value is not a non-negative integer"))?;
        let col = *index.entry(response.clone()).or_insert_with(|| {
            columns.push(response);
            columns.len() - 1
        });
        trip.push((cue, col, value));
    }
    Ok(CueResponseMatrix::from_triplets(vocab.len(), columns, &trip)?)
}

fn encode_cache(m: &CueResponseMatrix, csv_hash: &str) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CACHE_MAGIC);
    put_string(&mut out, csv_hash);
    put_u32(&mut out, m.n_rows() as u32);
    put_u32(&mut out, m.n_cols() as u32);
    for c in m.columns() {
        put_string(&mut out, c);
    }
    put_u64(&mut out, m.nnz() as u64);
    for (i, j, v) in m.triplets() {
        put_u32(&mut out, i as u32);
        put_u32(&mut out, j as u32);
        put_u64(&mut out, v);
    }
    out
}

fn decode_cache(path: &Path, bytes: &[u8]) -> Result<(String, CueResponseMatrix)> {
    let mut c = Cursor::new(path, bytes);
    if c.take(4)? != CACHE_MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf(), expected: "count cache" });
    }
    let hash = c.string()?;
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let columns = (0..cols).map(|_| c.string()).collect::<Result<Vec<_>>>()?;
    let nnz = c.u64()? as usize;
    let mut trip = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        trip.push((c.u32()? as usize, c.u32()? as usize, c.u64()?));
    }
    c.finish()?;
    Ok((hash, CueResponseMatrix::from_triplets(rows, columns, &trip)?))
}

/// Writes the CSV and its cache.
pub fn write(csv_path: &Path, m: &CueResponseMatrix, vocab: &Vocabulary) -> Result<()> {
    write_csv(csv_path, m, vocab)?;
    let hash = fsutil::sha256_file(csv_path)?;
    let cache = cache_path(csv_path);
    let bytes = encode_cache(m, &hash);
    fsutil::write_atomic(&cache, |w| w.write_all(&bytes).map_err(|e| Error::io(&cache, e)))
}

/// Loads through the cache when it matches the CSV, otherwise parses the
/// CSV and refreshes the cache.
pub fn read(csv_path: &Path, vocab: &Vocabulary) -> Result<CueResponseMatrix> {
    let hash = fsutil::sha256_file(csv_path)?;
    let cache = cache_path(csv_path);
    if let Ok(bytes) = std::fs::read(&cache) {
        if let Ok((h, m)) = decode_cache(&cache, &bytes) {
            if h == hash && m.n_rows() == vocab.len() {
                return Ok(m);
            }
        }
        log::info!("count cache {} is stale; re-reading CSV", cache.display());
    }
    let m = read_csv(csv_path, vocab)?;
    let bytes = encode_cache(&m, &hash);
    fsutil::write_atomic(&cache, |w| w.write_all(&bytes).map_err(|e| Error::io(&cache, e)))?;
    Ok(m)
}
