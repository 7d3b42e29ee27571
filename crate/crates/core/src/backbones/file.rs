//! Binary embeddings file.
//!
//! Little-endian, no padding: magic `TLRL`, u32 version (1), u32 rows,
//! u32 dim, then `rows` u32 labels, then `rows × dim` f32 values row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TLRL";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 16;

/// A labelled embedding matrix in its on-disk precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub values: Array2<f32>,
    pub labels: Vec<u32>,
}

impl EmbeddingSet {
    pub fn new(values: Array2<f32>, labels: Vec<u32>) -> Result<Self> {
        if values.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Format(format!("label {bad} is not 0 or 1")));
        }
        Ok(Self { values, labels })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_BYTES + 4 * self.rows() + 4 * self.rows() * self.dim()
    }

    fn payload(&self) -> impl Iterator<Item = [u8; 4]> + '_ {
        self.labels
            .iter()
            .map(|l| l.to_le_bytes())
            .chain(self.values.iter().map(|v| v.to_le_bytes()))
    }

    /// SHA-256 over labels and values exactly as they are laid out on disk.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(u32::try_from(self.rows()).unwrap_or(u32::MAX).to_le_bytes());
        hasher.update(u32::try_from(self.dim()).unwrap_or(u32::MAX).to_le_bytes());
        for chunk in self.payload() {
            hasher.update(chunk);
        }
        hex::encode(hasher.finalize())
    }

    pub fn features_f64(&self) -> Array2<f64> {
        self.values.mapv(f64::from)
    }

    pub fn labels_usize(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        let rows = u32::try_from(self.rows())
            .map_err(|_| Error::Dimension("too many rows for the embeddings format".into()))?;
        let dim = u32::try_from(self.dim())
            .map_err(|_| Error::Dimension("dimension too large for the embeddings format".into()))?;
        w.write_all(MAGIC)?;
        for v in [FORMAT_VERSION, rows, dim] {
            w.write_all(&v.to_le_bytes())?;
        }
        for chunk in self.payload() {
            w.write_all(&chunk)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut header = [0u8; HEADER_BYTES];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format("truncated embeddings header".into()))?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic: not an embeddings file".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
        let (version, rows, dim) = (word(1), word(2) as usize, word(3) as usize);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported embeddings version {version}")));
        }

        let mut read_u32s = |count: usize, what: &str| -> Result<Vec<[u8; 4]>> {
            let mut buf = vec![0u8; count * 4];
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format(format!("truncated embeddings {what}")))?;
            Ok(buf.chunks_exact(4).map(|c| c.try_into().unwrap()).collect())
        };
        let labels: Vec<u32> = read_u32s(rows, "labels")?.into_iter().map(u32::from_le_bytes).collect();
        let values: Vec<f32> = read_u32s(rows * dim, "values")?
            .into_iter()
            .map(f32::from_le_bytes)
            .collect();
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after embeddings payload".into()));
        }
        let values = Array2::from_shape_vec((rows, dim), values)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::new(values, labels)
    }
}

pub fn write_embeddings(path: impl AsRef<Path>, set: &EmbeddingSet) -> Result<()> {
    set.write_to(File::create(path)?)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    EmbeddingSet::read_from(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingSet {
        let values = Array2::from_shape_fn((3, 4), |(i, j)| (i as f32) * 0.5 - j as f32 / 3.0);
        EmbeddingSet::new(values, vec![0, 1, 1]).unwrap()
    }

    #[test]
    fn round_trip_in_memory() {
        let set = sample();
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), set.encoded_len());
        assert_eq!(&buf[..4], b"TLRL");
        assert_eq!(EmbeddingSet::read_from(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn header_errors() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(EmbeddingSet::read_from(bad.as_slice()), Err(Error::Format(_))));

        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(EmbeddingSet::read_from(bad.as_slice()), Err(Error::Format(_))));

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(EmbeddingSet::read_from(truncated), Err(Error::Format(_))));

        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(EmbeddingSet::read_from(long.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn count_mismatch_rejected() {
        assert!(EmbeddingSet::new(Array2::zeros((2, 3)), vec![0]).is_err());
        assert!(EmbeddingSet::new(Array2::zeros((1, 3)), vec![4]).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.values[[0, 0]] += 1.0;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
