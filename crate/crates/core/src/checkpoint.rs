//! Binary checkpoint format, little-endian, no padding:
//!
//! ```text
//! "MSCL"  u32 version  u32 feature_count  u64 schema_fingerprint
//! u32 norm_count   norm_count x (f32 mean, f32 std)
//! u32 tensor_count tensor_count x (u16 name_len, name, u8 ndim, ndim x u32 dim, values as f32)
//! ```

use std::fs;
use std::path::Path;

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::tensor::Tensor;

pub const MAGIC: [u8; 4] = *b"MSCL";
pub const FORMAT_VERSION: u32 = 1;

/// Trained weights plus what is needed to apply them to new data.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub params: ModelParams<f32>,
    pub norm_stats: NormStats,
    pub fingerprint: u64,
}

impl Checkpoint {
    pub fn new(params: ModelParams<f32>, norm_stats: NormStats, fingerprint: u64) -> Result<Self> {
        if norm_stats.len() != params.feature_count() {
            return Err(Error::Schema(format!(
                "{} normalization entries for a {}-feature model",
                norm_stats.len(),
                params.feature_count()
            )));
        }
        Ok(Self {
            version: FORMAT_VERSION,
            params,
            norm_stats,
            fingerprint,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.params.feature_count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(self.feature_count() as u32).to_le_bytes());
        out.extend_from_slice(&self.fingerprint.to_le_bytes());
        out.extend_from_slice(&(self.norm_stats.len() as u32).to_le_bytes());
        for (&m, &s) in self.norm_stats.mean.iter().zip(&self.norm_stats.std) {
            out.extend_from_slice(&(m as f32).to_le_bytes());
            out.extend_from_slice(&(s as f32).to_le_bytes());
        }
        let tensors = self.params.named_tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.rank() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(Error::NotCheckpoint(magic));
        }
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let feature_count = r.u32("feature count")? as usize;
        let fingerprint = r.u64("fingerprint")?;

        let norm_count = r.u32("normalization count")? as usize;
        if norm_count != feature_count {
            return Err(r.error(format!(
                "{norm_count} normalization entries for {feature_count} features"
            )));
        }
        let mut mean = Vec::with_capacity(norm_count);
        let mut std = Vec::with_capacity(norm_count);
        for _ in 0..norm_count {
            mean.push(r.f32("normalization mean")?);
            std.push(r.f32("normalization std")?);
        }

        let tensor_count = r.u32("tensor count")? as usize;
        let mut tensors = Vec::new();
        for _ in 0..tensor_count {
            let name_len = r.u16("tensor name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
                .map_err(|_| r.error("tensor name is not UTF-8".into()))?
                .to_string();
            let ndim = r.u8("tensor rank")? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u32("tensor dimension")? as usize);
            }
            let count = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|&c| c > 0 && ndim > 0)
                .ok_or_else(|| r.error(format!("invalid shape {shape:?} for {name}")))?;
            let raw = r.take(
                count.checked_mul(4).ok_or_else(|| r.error("tensor too large".into()))?,
                "tensor values",
            )?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            tensors.push((name, Tensor::new(&shape, data)?));
        }
        if r.pos != bytes.len() {
            return Err(r.error(format!("{} trailing bytes", bytes.len() - r.pos)));
        }

        let end = r.pos;
        let params = ModelParams::from_named(feature_count, tensors).map_err(|e| Error::Format {
            offset: end,
            message: e.to_string(),
        })?;
        Ok(Self {
            version,
            params,
            norm_stats: NormStats::from_f32(&mean, &std)?,
            fingerprint,
        })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, message: String) -> Error {
        Error::Format {
            offset: self.pos,
            message,
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            self.error(format!(
                "truncated while reading {what}: need {n} bytes, {} left",
                self.bytes.len() - self.pos
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::forward;
    use proptest::prelude::*;

    fn sample(f: usize, seed: u64) -> Checkpoint {
        let params = ModelParams::<f32>::build(f, seed).unwrap();
        let stats = NormStats {
            mean: (0..f).map(|i| i as f64 * 0.5).collect(),
            std: (0..f).map(|i| 1.0 + i as f64 * 0.25).collect(),
        };
        Checkpoint::new(params, stats, 0xdead_beef_0123_4567).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = sample(8, 1).to_bytes();
        assert_eq!(&bytes[..4], b"MSCL");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 0xdead_beef_0123_4567);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 8);
        // 14 tensors after the 8 (mean, std) pairs.
        assert_eq!(u32::from_le_bytes(bytes[88..92].try_into().unwrap()), 14);
        let name_len = u16::from_le_bytes(bytes[92..94].try_into().unwrap()) as usize;
        assert_eq!(&bytes[94..94 + name_len], b"conv_a.kernel");
    }

    #[test]
    fn round_trip_preserves_forward_output() {
        let ckpt = sample(8, 2);
        let back = Checkpoint::from_bytes(&ckpt.to_bytes()).unwrap();
        assert_eq!(back, ckpt);
        let x = Tensor::new(&[8, 1], vec![0.3, -1.0, 2.0, 0.0, 0.5, 0.25, -0.75, 1.5]).unwrap();
        let (a, _) = forward(&ckpt.params, &x).unwrap();
        let (b, _) = forward(&back.params, &x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = sample(4, 1).to_bytes();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::NotCheckpoint(m)) if &m == b"XXXX"));
    }

    #[test]
    fn header_only_is_truncated() {
        let bytes = sample(4, 1).to_bytes();
        match Checkpoint::from_bytes(&bytes[..20]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("expected truncation error, got {other:?}"),
        }
        assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Format { .. })));
        assert!(matches!(Checkpoint::from_bytes(&[]), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn unknown_version() {
        let mut bytes = sample(4, 1).to_bytes();
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::Version { found: 7, expected: 1 })));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = sample(4, 1).to_bytes();
        bytes.push(0);
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/model.ckpt");
        let ckpt = sample(5, 3);
        save_checkpoint(&ckpt, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ckpt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn save_load_save_is_byte_identical(f in 2usize..14, seed in any::<u64>()) {
            let bytes = sample(f, seed).to_bytes();
            let again = Checkpoint::from_bytes(&bytes).unwrap().to_bytes();
            prop_assert_eq!(bytes, again);
        }
    }
}
