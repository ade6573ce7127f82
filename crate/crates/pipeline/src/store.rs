//! Per-subject training vectors, nearest-neighbour classification, and the
//! MARFTSv1 file format.
//!
//! A MARFTSv1 file is little-endian throughout:
//!
//! ```text
//! magic        8 bytes  "MARFTSv1"
//! algorithm    u8       0 empty store, 1 lpc, 2 fft, 3 minmax
//! poles        u32
//! window_len   u32
//! subjects     u32
//! per subject, ascending id:
//!   id         u32
//!   count      u32
//!   count × FeatureKind::len() × f64
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::features::{Algorithm, FeatureKind, FeatureVector};
use crate::StageError;

pub const MAGIC: &[u8; 8] = b"MARFTSv1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("not a MARFTSv1 file")]
    BadMagic,
    #[error("unknown algorithm code {0}")]
    UnknownAlgorithm(u8),
    #[error("file ends early or has trailing bytes")]
    Truncated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    kind: Option<FeatureKind>,
    subjects: BTreeMap<u32, Vec<Vec<f64>>>,
}

/// Subjects ranked by distance, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub ranked: Vec<(u32, f64)>,
}

impl ResultSet {
    pub fn top(&self) -> Option<(u32, f64)> {
        self.ranked.first().copied()
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kind(&self) -> Option<FeatureKind> {
        self.kind
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    /// Total number of stored vectors.
    pub fn record_count(&self) -> usize {
        self.subjects.values().map(Vec::len).sum()
    }

    pub fn vectors(&self, subject: u32) -> &[Vec<f64>] {
        self.subjects.get(&subject).map_or(&[], Vec::as_slice)
    }

    fn check(&self, fv: &FeatureVector) -> Result<(), StageError> {
        let incompatible = |expected: String| StageError::IncompatibleFeatures { expected, got: fv.kind.to_string() };
        if fv.features.len() != fv.kind.len() {
            return Err(incompatible(format!("{} features", fv.kind.len())));
        }
        match self.kind {
            Some(k) if k != fv.kind => Err(incompatible(k.to_string())),
            _ => Ok(()),
        }
    }

    pub fn train(&mut self, subject: u32, fv: &FeatureVector) -> Result<(), StageError> {
        self.check(fv)?;
        self.kind = Some(fv.kind);
        self.subjects.entry(subject).or_default().push(fv.features.clone());
        Ok(())
    }

    /// Per subject, the smallest Euclidean distance from `fv` to one of its
    /// vectors. Ties rank by subject id.
    pub fn classify(&self, fv: &FeatureVector) -> Result<ResultSet, StageError> {
        if self.subjects.is_empty() {
            return Err(StageError::EmptyTrainingSet);
        }
        self.check(fv)?;
        let mut ranked: Vec<(u32, f64)> = self
            .subjects
            .iter()
            .map(|(&id, vs)| (id, vs.iter().map(|v| euclidean(v, &fv.features)).fold(f64::INFINITY, f64::min)))
            .collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(ResultSet { ranked })
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        let k = self.kind.unwrap_or(FeatureKind { algorithm: Algorithm::MinMax, poles: 0, window_len: 0 });
        w.write_u8(if self.kind.is_some() { k.algorithm.code() } else { 0 })?;
        w.write_u32::<LE>(k.poles)?;
        w.write_u32::<LE>(k.window_len)?;
        w.write_u32::<LE>(self.subjects.len() as u32)?;
        for (&id, vs) in &self.subjects {
            w.write_u32::<LE>(id)?;
            w.write_u32::<LE>(vs.len() as u32)?;
            for x in vs.iter().flatten() {
                w.write_f64::<LE>(*x)?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(mut b: &[u8]) -> Result<TrainingSet, StoreError> {
        let eof =
            |e: io::Error| if e.kind() == io::ErrorKind::UnexpectedEof { StoreError::Truncated } else { e.into() };
        let mut magic = [0u8; 8];
        b.read_exact(&mut magic).map_err(eof)?;
        if &magic != MAGIC {
            return Err(StoreError::BadMagic);
        }
        let code = b.read_u8().map_err(eof)?;
        let poles = b.read_u32::<LE>().map_err(eof)?;
        let window_len = b.read_u32::<LE>().map_err(eof)?;
        let kind = match code {
            0 => None,
            c => Some(FeatureKind {
                algorithm: Algorithm::from_code(c).ok_or(StoreError::UnknownAlgorithm(c))?,
                poles,
                window_len,
            }),
        };
        let width = kind.map_or(0, |k| k.len());
        let n = b.read_u32::<LE>().map_err(eof)?;
        let mut subjects = BTreeMap::new();
        for _ in 0..n {
            let id = b.read_u32::<LE>().map_err(eof)?;
            let count = b.read_u32::<LE>().map_err(eof)? as usize;
            // a corrupt count must not trigger a huge allocation
            if count.saturating_mul(width).saturating_mul(8) > b.len() {
                return Err(StoreError::Truncated);
            }
            let mut vs = Vec::with_capacity(count);
            for _ in 0..count {
                let mut v = vec![0.0; width];
                b.read_f64_into::<LE>(&mut v).map_err(eof)?;
                vs.push(v);
            }
            subjects.insert(id, vs);
        }
        if !b.is_empty() {
            return Err(StoreError::Truncated);
        }
        Ok(TrainingSet { kind, subjects })
    }

    /// Writes a sibling temporary file and renames it over `path`, so a
    /// reader never observes a partial file.
    pub fn save(&self, path: &Path) -> Result<u64, StoreError> {
        let bytes = self.to_bytes();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        drop(f);
        fs::rename(&tmp, path)?;
        Ok(bytes.len() as u64)
    }

    pub fn load(path: &Path) -> Result<TrainingSet, StoreError> {
        TrainingSet::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(kind: FeatureKind, features: &[f64]) -> FeatureVector {
        FeatureVector { kind, features: features.to_vec() }
    }

    #[test]
    fn train_and_classify() {
        let k = FeatureKind::minmax();
        let mut s = TrainingSet::new();
        assert_eq!(s.classify(&fv(k, &[0.0, 0.0])), Err(StageError::EmptyTrainingSet));
        s.train(1, &fv(k, &[0.0, 0.0])).unwrap();
        assert_eq!((s.subject_count(), s.record_count()), (1, 1));
        s.train(2, &fv(k, &[10.0, 10.0])).unwrap();
        let r = s.classify(&fv(k, &[1.0, 1.0])).unwrap();
        assert_eq!(r.top().unwrap().0, 1);
        assert_eq!(s.classify(&fv(k, &[10.0, 10.0])).unwrap().top(), Some((2, 0.0)));
        let lpc = fv(FeatureKind::lpc(2, 16), &[0.1, 0.2]);
        assert!(matches!(s.train(3, &lpc), Err(StageError::IncompatibleFeatures { .. })));
        assert!(matches!(s.classify(&lpc), Err(StageError::IncompatibleFeatures { .. })));
    }

    #[test]
    fn file_round_trip() {
        let mut s = TrainingSet::new();
        assert_eq!(TrainingSet::from_bytes(&s.to_bytes()).unwrap(), s);
        let k = FeatureKind::lpc(3, 32);
        for subject in [7, 2] {
            for j in 0..2 {
                s.train(subject, &fv(k, &[subject as f64, j as f64, -0.5])).unwrap();
            }
        }
        let bytes = s.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes.len(), 8 + 1 + 4 * 3 + 2 * (8 + 2 * 3 * 8));
        assert_eq!(TrainingSet::from_bytes(&bytes).unwrap(), s);
        assert!(matches!(TrainingSet::from_bytes(&bytes[..bytes.len() - 1]), Err(StoreError::Truncated)));
        assert!(matches!(TrainingSet::from_bytes(b"MARFTSv2"), Err(StoreError::BadMagic)));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.bin");
        assert_eq!(s.save(&path).unwrap(), bytes.len() as u64);
        assert_eq!(TrainingSet::load(&path).unwrap(), s);
        assert!(!dir.path().join("train.bin.tmp").exists());
    }
}
