//! Dataset file layout (little-endian):
//!
//! ```text
//! magic "PRACHDS\0" | version u32 | n_zc u32 | feature_dim u32 | layout u8
//! row_count u64 | config sha256 [32] | n_channels u16, (len u16, utf8)*
//! n_snr u16, f64* | rows | crc32 of everything before it
//! row: label u16 | snr_db f64 | channel u16 | antenna u8 | seed u64 | f32 * feature_dim
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Layout, RowMeta};

const MAGIC: &[u8; 8] = b"PRACHDS\0";
pub const DATASET_VERSION: u32 = 1;
const ROW_COUNT_OFFSET: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub n_zc: usize,
    pub feature_dim: usize,
    pub layout: Layout,
    pub row_count: u64,
    /// Hex sha256 of the generation config.
    pub config_hash: String,
    pub channels: Vec<String>,
    pub snr_grid: Vec<f64>,
}

impl DatasetHeader {
    fn encode(&self) -> Result<Vec<u8>> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        b.extend_from_slice(&(self.n_zc as u32).to_le_bytes());
        b.extend_from_slice(&(self.feature_dim as u32).to_le_bytes());
        b.push(self.layout.tag());
        debug_assert_eq!(b.len(), ROW_COUNT_OFFSET);
        b.extend_from_slice(&self.row_count.to_le_bytes());
        b.extend_from_slice(&hash_bytes(&self.config_hash)?);
        b.extend_from_slice(&(self.channels.len() as u16).to_le_bytes());
        for c in &self.channels {
            b.extend_from_slice(&(c.len() as u16).to_le_bytes());
            b.extend_from_slice(c.as_bytes());
        }
        b.extend_from_slice(&(self.snr_grid.len() as u16).to_le_bytes());
        for s in &self.snr_grid {
            b.extend_from_slice(&s.to_le_bytes());
        }
        Ok(b)
    }

    fn row_bytes(&self) -> usize {
        2 + 8 + 2 + 1 + 8 + 4 * self.feature_dim
    }
}

fn hash_bytes(hex: &str) -> Result<[u8; 32]> {
    let mut out = [0u8; 32];
    if hex.len() != 64 {
        return Err(Error::format(format!("config hash must be 64 hex digits, got {}", hex.len())));
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
            .map_err(|_| Error::format("config hash is not hex"))?;
    }
    Ok(out)
}

/// Header plus rows held in memory at 64-bit precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub matrix: FeatureMatrix,
}

/// Streams rows to disk; the row count is fixed up front.
pub struct DatasetWriter {
    out: BufWriter<File>,
    crc: crc32fast::Hasher,
    header: DatasetHeader,
    written: u64,
}

impl DatasetWriter {
    pub fn create(path: &Path, header: DatasetHeader) -> Result<Self> {
        let bytes = header.encode()?;
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&bytes)?;
        let mut crc = crc32fast::Hasher::new();
        crc.update(&bytes);
        Ok(Self { out, crc, header, written: 0 })
    }

    pub fn push(&mut self, features: &[f64], label: usize, meta: &RowMeta) -> Result<()> {
        if features.len() != self.header.feature_dim {
            return Err(Error::Shape { expected: self.header.feature_dim, got: features.len() });
        }
        if self.written >= self.header.row_count {
            return Err(Error::format("more rows than the header declares"));
        }
        let bytes = encode_row(features, label, meta)?;
        self.crc.update(&bytes);
        self.out.write_all(&bytes)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<DatasetHeader> {
        if self.written != self.header.row_count {
            return Err(Error::format(format!(
                "wrote {} rows, header declares {}",
                self.written, self.header.row_count
            )));
        }
        self.out.write_all(&self.crc.clone().finalize().to_le_bytes())?;
        self.out.flush()?;
        Ok(self.header)
    }
}

fn encode_row(features: &[f64], label: usize, meta: &RowMeta) -> Result<Vec<u8>> {
    let label = u16::try_from(label).map_err(|_| Error::format(format!("label {label} exceeds u16")))?;
    let mut b = Vec::with_capacity(21 + 4 * features.len());
    b.extend_from_slice(&label.to_le_bytes());
    b.extend_from_slice(&meta.snr_db.to_le_bytes());
    b.extend_from_slice(&meta.channel.to_le_bytes());
    b.push(meta.antenna);
    b.extend_from_slice(&meta.seed.to_le_bytes());
    for &f in features {
        let v = f as f32;
        if !v.is_finite() {
            return Err(Error::format("non-finite feature"));
        }
        b.extend_from_slice(&v.to_le_bytes());
    }
    Ok(b)
}

/// Write `matrix` with `header`'s metadata; dimension and count come from the matrix.
pub fn write_dataset(path: &Path, header: &DatasetHeader, matrix: &FeatureMatrix) -> Result<DatasetHeader> {
    let h = DatasetHeader { feature_dim: matrix.dim(), row_count: matrix.len() as u64, ..header.clone() };
    let mut w = DatasetWriter::create(path, h)?;
    for i in 0..matrix.len() {
        w.push(matrix.row(i), matrix.labels()[i], &matrix.meta()[i])?;
    }
    w.finish()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format("truncated dataset"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode_header(c: &mut Cursor) -> Result<DatasetHeader> {
    if c.take(8)? != MAGIC {
        return Err(Error::format("not a dataset file"));
    }
    let version = c.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::format(format!("dataset version {version}, expected {DATASET_VERSION}")));
    }
    let n_zc = c.u32()? as usize;
    let feature_dim = c.u32()? as usize;
    let layout = Layout::from_tag(c.take(1)?[0])?;
    let row_count = c.u64()?;
    let config_hash = c.take(32)?.iter().map(|b| format!("{b:02x}")).collect();
    let n_channels = c.u16()? as usize;
    let mut channels = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let n = c.u16()? as usize;
        channels.push(String::from_utf8(c.take(n)?.to_vec()).map_err(|_| Error::format("channel name is not UTF-8"))?);
    }
    let n_snr = c.u16()? as usize;
    let snr_grid = (0..n_snr).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    Ok(DatasetHeader { n_zc, feature_dim, layout, row_count, config_hash, channels, snr_grid })
}

fn checked_body(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 4 {
        return Err(Error::format("truncated dataset"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::format("dataset checksum mismatch"));
    }
    Ok(body)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let body = checked_body(bytes)?;
    let mut c = Cursor { buf: body, pos: 0 };
    let header = decode_header(&mut c)?;
    let expected = c.pos as u128 + header.row_count as u128 * header.row_bytes() as u128;
    if expected != body.len() as u128 {
        return Err(Error::format(format!("dataset body is {} bytes, header implies {expected}", body.len())));
    }
    let n = header.row_count as usize;
    let dim = header.feature_dim;
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    let mut meta = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(c.u16()? as usize);
        let snr_db = c.f64()?;
        let channel = c.u16()?;
        let antenna = c.take(1)?[0];
        let seed = c.u64()?;
        if channel as usize >= header.channels.len() {
            return Err(Error::format(format!("row channel {channel} outside the channel list")));
        }
        if !header.snr_grid.iter().any(|s| s.to_bits() == snr_db.to_bits()) {
            return Err(Error::format(format!("row SNR {snr_db} outside the declared grid")));
        }
        for f in c.take(4 * dim)?.chunks_exact(4) {
            let v = f32::from_le_bytes(f.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::format("non-finite feature"));
            }
            data.push(v as f64);
        }
        meta.push(RowMeta { snr_db, channel, antenna, seed });
    }
    let mut matrix = FeatureMatrix::from_rows(dim, data, labels, meta)?;
    matrix.channels = header.channels.clone();
    Ok(Dataset { header, matrix })
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?)
}

/// Header only; the checksum is still verified.
pub fn read_header(path: &Path) -> Result<DatasetHeader> {
    let bytes = fs::read(path)?;
    decode_header(&mut Cursor { buf: checked_body(&bytes)?, pos: 0 })
}

/// Append rows of `extra` to the file at `path`. Dimension, layout and
/// `n_zc` must match; channel lists and SNR grids are merged and the config
/// hash becomes the hash of both hashes when they differ.
pub fn append_dataset(path: &Path, extra: &Dataset) -> Result<DatasetHeader> {
    let mut existing = read_dataset(path)?;
    let h = &existing.header;
    if h.feature_dim != extra.header.feature_dim || h.n_zc != extra.header.n_zc || h.layout != extra.header.layout {
        return Err(Error::Shape { expected: h.feature_dim, got: extra.header.feature_dim });
    }
    let mut header = existing.header.clone();
    let remap: Vec<u16> = extra
        .header
        .channels
        .iter()
        .map(|c| match header.channels.iter().position(|x| x == c) {
            Some(i) => i as u16,
            None => {
                header.channels.push(c.clone());
                (header.channels.len() - 1) as u16
            }
        })
        .collect();
    for s in &extra.header.snr_grid {
        if !header.snr_grid.iter().any(|x| x.to_bits() == s.to_bits()) {
            header.snr_grid.push(*s);
        }
    }
    if header.config_hash != extra.header.config_hash {
        header.config_hash = crate::codec::sha256_hex(format!("{}{}", header.config_hash, extra.header.config_hash).as_bytes());
    }
    let m = &extra.matrix;
    for i in 0..m.len() {
        let mut meta = m.meta()[i];
        meta.channel = remap[meta.channel as usize];
        existing.matrix.push(m.row(i), m.labels()[i], meta)?;
    }
    let tmp = path.with_extension("tmp");
    let written = write_dataset(&tmp, &header, &existing.matrix)?;
    fs::rename(&tmp, path)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(dim: usize) -> DatasetHeader {
        DatasetHeader {
            n_zc: 839,
            feature_dim: dim,
            layout: Layout::Blocked,
            row_count: 0,
            config_hash: "ab".repeat(32),
            channels: vec!["AWGN".into(), "EPA".into()],
            snr_grid: vec![-5.0, 0.0, 5.0],
        }
    }

    fn rows(n: usize, dim: usize) -> FeatureMatrix {
        let mut m = FeatureMatrix::new(dim);
        for i in 0..n {
            let f: Vec<f64> = (0..dim).map(|j| ((i * dim + j) as f32 * 0.37).sin() as f64).collect();
            let meta = RowMeta { snr_db: [-5.0, 0.0, 5.0][i % 3], channel: (i % 2) as u16, antenna: (i % 2) as u8, seed: i as u64 * 31 };
            m.push(&f, i % 7, meta).unwrap();
        }
        m.channels = vec!["AWGN".into(), "EPA".into()];
        m
    }

    #[test]
    fn write_read_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.bin");
        let m = rows(25, 6);
        let h = write_dataset(&p, &header(6), &m).unwrap();
        assert_eq!(h.row_count, 25);
        let back = read_dataset(&p).unwrap();
        assert_eq!(back.header, h);
        assert_eq!(back.matrix, m);
        assert_eq!(read_header(&p).unwrap(), h);
        let bytes = fs::read(&p).unwrap();
        write_dataset(&p, &header(6), &back.matrix).unwrap();
        assert_eq!(fs::read(&p).unwrap(), bytes);
    }

    #[test]
    fn corruption_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.bin");
        write_dataset(&p, &header(3), &rows(4, 3)).unwrap();
        let good = fs::read(&p).unwrap();
        let mut bad = good.clone();
        bad[60] ^= 1;
        assert!(decode_dataset(&bad).is_err());
        let mut v2 = good[..good.len() - 4].to_vec();
        v2[8] = 2;
        let crc = crc32fast::hash(&v2);
        v2.extend_from_slice(&crc.to_le_bytes());
        let err = decode_dataset(&v2).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn append_merges_and_checks_dimension() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.bin");
        write_dataset(&p, &header(4), &rows(5, 4)).unwrap();
        let mut extra_h = header(4);
        extra_h.channels = vec!["EPA".into(), "ETU".into()];
        let extra = Dataset { header: extra_h, matrix: rows(3, 4) };
        let h = append_dataset(&p, &extra).unwrap();
        assert_eq!(h.row_count, 8);
        assert_eq!(h.channels, vec!["AWGN", "EPA", "ETU"]);
        let back = read_dataset(&p).unwrap();
        assert_eq!(back.matrix.meta()[5].channel, 1);
        assert_eq!(back.matrix.meta()[6].channel, 2);
        let wrong = Dataset { header: header(5), matrix: rows(2, 5) };
        assert!(append_dataset(&p, &wrong).is_err());
        assert_eq!(read_dataset(&p).unwrap().header.row_count, 8);
    }

    #[test]
    fn writer_enforces_declared_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.bin");
        let mut h = header(2);
        h.row_count = 2;
        let mut w = DatasetWriter::create(&p, h).unwrap();
        let meta = RowMeta { snr_db: 0.0, channel: 0, antenna: 0, seed: 0 };
        w.push(&[1.0, 2.0], 0, &meta).unwrap();
        assert!(w.finish().is_err());
    }
}
