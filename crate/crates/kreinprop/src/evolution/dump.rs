//! Kernel dump files: a JSON header line, (i, j, matrix) records in JSON
//! lines or little-endian binary, and a trailing `sha256:<hex>` checksum line
//! covering every preceding byte.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TimeGrid;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

pub const DUMP_FORMAT: &str = "kreinprop-kernel";
pub const DUMP_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DumpFormat {
    Json,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DumpBlock {
    #[serde(rename = "full")]
    Full,
    /// n×n upper-right block of a 2n×2n kernel (spacetime propagators).
    #[serde(rename = "upper-right")]
    UpperRight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub format: String,
    pub version: u32,
    pub encoding: DumpFormat,
    pub tag: String,
    pub block: DumpBlock,
    pub rows: usize,
    pub cols: usize,
    pub grid: TimeGrid,
    pub records: usize,
}

impl DumpHeader {
    pub fn new(tag: &str, block: DumpBlock, rows: usize, cols: usize, grid: TimeGrid, encoding: DumpFormat) -> Self {
        DumpHeader {
            format: DUMP_FORMAT.into(),
            version: DUMP_VERSION,
            encoding,
            tag: tag.into(),
            block,
            rows,
            cols,
            grid,
            records: (grid.n + 1) * (grid.n + 1),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    i: usize,
    j: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// A dump read back into memory.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDump {
    pub header: DumpHeader,
    pub records: Vec<(usize, usize, CMat)>,
    pub checksum: String,
}

impl KernelDump {
    pub fn get(&self, i: usize, j: usize) -> Option<&CMat> {
        let n = self.header.grid.n + 1;
        self.records.get(i * n + j).filter(|r| r.0 == i && r.1 == j).map(|r| &r.2)
    }
}

struct Hashing<W: Write> {
    inner: W,
    hash: Sha256,
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let k = self.inner.write(buf)?;
        self.hash.update(&buf[..k]);
        Ok(k)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Streams all node pairs (i, j) in row-major order; returns the checksum.
pub fn write_dump<W: Write>(
    out: W,
    header: &DumpHeader,
    mut eval: impl FnMut(usize, usize) -> CMat,
) -> Result<String> {
    let mut w = Hashing { inner: out, hash: Sha256::new() };
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    let n = header.grid.n + 1;
    for i in 0..n {
        for j in 0..n {
            let m = eval(i, j);
            if m.shape() != (header.rows, header.cols) {
                return Err(Error::Dump(format!("record ({i},{j}) has shape {:?}", m.shape())));
            }
            match header.encoding {
                DumpFormat::Json => {
                    let rec = JsonRecord {
                        i,
                        j,
                        re: row_major(&m).map(|z| z.re).collect(),
                        im: row_major(&m).map(|z| z.im).collect(),
                    };
                    serde_json::to_writer(&mut w, &rec)?;
                    w.write_all(b"\n")?;
                }
                DumpFormat::Binary => {
                    w.write_all(&(i as u64).to_le_bytes())?;
                    w.write_all(&(j as u64).to_le_bytes())?;
                    for z in row_major(&m) {
                        w.write_all(&z.re.to_le_bytes())?;
                    }
                    for z in row_major(&m) {
                        w.write_all(&z.im.to_le_bytes())?;
                    }
                }
            }
        }
    }
    let digest = hex::encode(w.hash.finalize());
    let mut inner = w.inner;
    writeln!(inner, "sha256:{digest}")?;
    inner.flush()?;
    Ok(digest)
}

fn row_major(m: &CMat) -> impl Iterator<Item = crate::C64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

/// Reads and verifies a dump written by [`write_dump`].
pub fn read_dump<R: Read>(mut input: R) -> Result<KernelDump> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    const TRAILER: usize = "sha256:".len() + 64 + 1;
    if bytes.len() < TRAILER {
        return Err(Error::Dump("file too short".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - TRAILER);
    let trailer = std::str::from_utf8(trailer).map_err(|_| Error::Dump("bad checksum line".into()))?;
    let checksum = trailer
        .strip_prefix("sha256:")
        .and_then(|s| s.strip_suffix('\n'))
        .ok_or_else(|| Error::Dump("missing checksum line".into()))?
        .to_string();
    let actual = hex::encode(Sha256::digest(body));
    if actual != checksum {
        return Err(Error::Dump(format!("checksum mismatch: file {checksum}, computed {actual}")));
    }
    let nl = body.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Dump("missing header".into()))?;
    let header: DumpHeader = serde_json::from_slice(&body[..nl])?;
    if header.format != DUMP_FORMAT || header.version != DUMP_VERSION {
        return Err(Error::Dump(format!("unsupported format {} v{}", header.format, header.version)));
    }
    let payload = &body[nl + 1..];
    let (rows, cols) = (header.rows, header.cols);
    let mut records = Vec::with_capacity(header.records);
    match header.encoding {
        DumpFormat::Json => {
            for line in payload.split(|&b| b == b'\n').filter(|l| !l.is_empty()) {
                let r: JsonRecord = serde_json::from_slice(line)?;
                if r.re.len() != rows * cols || r.im.len() != rows * cols {
                    return Err(Error::Dump(format!("record ({},{}) has wrong length", r.i, r.j)));
                }
                let m = CMat::from_fn(rows, cols, |a, b| c(r.re[a * cols + b], r.im[a * cols + b]));
                records.push((r.i, r.j, m));
            }
        }
        DumpFormat::Binary => {
            let rec_len = 16 + 16 * rows * cols;
            if payload.len() != rec_len * header.records {
                return Err(Error::Dump("binary payload length does not match the header".into()));
            }
            for chunk in payload.chunks_exact(rec_len) {
                let u = |k: usize| u64::from_le_bytes(chunk[k..k + 8].try_into().expect("8 bytes")) as usize;
                let f = |k: usize| f64::from_le_bytes(chunk[k..k + 8].try_into().expect("8 bytes"));
                let (i, j) = (u(0), u(8));
                let im0 = 16 + 8 * rows * cols;
                let m = CMat::from_fn(rows, cols, |a, b| {
                    let k = a * cols + b;
                    c(f(16 + 8 * k), f(im0 + 8 * k))
                });
                records.push((i, j, m));
            }
        }
    }
    if records.len() != header.records {
        return Err(Error::Dump(format!("expected {} records, found {}", header.records, records.len())));
    }
    Ok(KernelDump { header, records, checksum })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(i: usize, j: usize) -> CMat {
        CMat::from_fn(2, 2, |a, b| c((i * 7 + j) as f64 / 3.0 + a as f64, (b as f64 - j as f64).exp()))
    }

    #[test]
    fn round_trip_both_encodings() {
        let grid = TimeGrid::new(-1.0, 1.0, 5).unwrap();
        for enc in [DumpFormat::Json, DumpFormat::Binary] {
            let h = DumpHeader::new("PJ", DumpBlock::Full, 2, 2, grid, enc);
            let mut buf = Vec::new();
            let sum = write_dump(&mut buf, &h, sample).unwrap();
            let d = read_dump(buf.as_slice()).unwrap();
            assert_eq!(d.checksum, sum);
            assert_eq!(d.records.len(), 36);
            for (i, j, m) in &d.records {
                assert_eq!(*m, sample(*i, *j));
            }
        }
    }

    #[test]
    fn corruption_is_detected() {
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let h = DumpHeader::new("F", DumpBlock::UpperRight, 2, 2, grid, DumpFormat::Json);
        let mut buf = Vec::new();
        write_dump(&mut buf, &h, sample).unwrap();
        let k = buf.len() / 2;
        buf[k] ^= 1;
        assert!(matches!(read_dump(buf.as_slice()), Err(Error::Dump(_)) | Err(Error::Json(_))));
    }
}
