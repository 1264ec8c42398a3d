//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian):
//! `CPLXCKPT`, u32 version, then length-prefixed UTF-8 strings for the
//! config fingerprint and the `key=value` config text, a string list of
//! training languages, a string list of vocabulary entries in id order, and
//! finally u32 tensor count followed by `(name, u32 ndim, u64 dims…, f64
//! data…)` per tensor.

use std::path::Path;

use ndarray::Array2;

use crate::corpus::Language;
use crate::normalize::Vocabulary;

use super::network::Params;
use super::{ClassifierConfig, ClassifierModel, ModelError};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CPLXCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end =
            end.ok_or_else(|| ModelError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn string(&mut self) -> Result<String, ModelError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| ModelError::Checkpoint("invalid UTF-8".into()))
    }

    fn strings(&mut self) -> Result<Vec<String>, ModelError> {
        let n = self.u32()? as usize;
        (0..n).map(|_| self.string()).collect()
    }
}

impl ClassifierModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        put_u32(&mut out, CHECKPOINT_VERSION);
        put_str(&mut out, &self.fingerprint());
        put_str(&mut out, &self.config.to_kv_string());
        put_u32(&mut out, self.languages.len() as u32);
        for l in &self.languages {
            put_str(&mut out, l.tag());
        }
        put_u32(&mut out, self.vocab.len() as u32);
        for e in self.vocab.entries() {
            put_str(&mut out, e);
        }
        let names = self.params.names();
        put_u32(&mut out, names.len() as u32);
        for (name, t) in names.iter().zip(self.params.tensors()) {
            put_str(&mut out, name);
            put_u32(&mut out, 2);
            for d in t.shape() {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for x in t.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(ModelError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported version {version}"
            )));
        }
        let fingerprint = r.string()?;
        let config = ClassifierConfig::from_kv_str(&r.string()?)?;
        config.validate()?;
        if config.fingerprint() != fingerprint {
            return Err(ModelError::Checkpoint("config fingerprint mismatch".into()));
        }
        let languages = r
            .strings()?
            .iter()
            .map(|s| Language::from(s.as_str()))
            .collect();
        let vocab = Vocabulary::from_entries(r.strings()?)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        let mut names = Vec::with_capacity(count);
        for _ in 0..count {
            names.push(r.string()?);
            if r.u32()? != 2 {
                return Err(ModelError::Checkpoint("expected rank-2 tensors".into()));
            }
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| ModelError::Checkpoint("tensor too large".into()))?;
            let raw = r.take(
                n.checked_mul(8)
                    .ok_or_else(|| ModelError::Checkpoint("tensor too large".into()))?,
            )?;
            let data: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push(Array2::from_shape_vec((rows, cols), data).expect("length checked"));
        }
        if r.pos != bytes.len() {
            return Err(ModelError::Checkpoint("trailing bytes".into()));
        }
        let params = Params::from_tensors(
            tensors,
            config.num_attention_layers,
            config.ffnn_hidden_dims.len(),
        );
        let expected = Params::init(
            &ClassifierConfig {
                seed: 0,
                ..config.clone()
            },
            vocab.len(),
        );
        let shapes_match = params.names() == names
            && params.tensors().len() == expected.tensors().len()
            && params
                .tensors()
                .iter()
                .zip(expected.tensors())
                .all(|(a, b)| a.dim() == b.dim());
        if !shapes_match {
            return Err(ModelError::Checkpoint(
                "tensor layout does not match config".into(),
            ));
        }
        Ok(ClassifierModel {
            config,
            vocab,
            languages,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CodeSample, Corpus};
    use crate::normalize::build_vocab;

    fn model() -> ClassifierModel {
        let c = Corpus::new(vec![CodeSample::new("a", Language::Python, "x = 1")]).unwrap();
        let v = build_vocab(&[&c], 64).unwrap();
        let cfg = ClassifierConfig {
            embed_dim: 8,
            num_heads: 2,
            num_attention_layers: 1,
            ffnn_hidden_dims: vec![4],
            ..ClassifierConfig::default()
        };
        let mut m = ClassifierModel::initialize(&cfg, &v).unwrap();
        m.languages = vec![Language::Python];
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = m.to_bytes();
        let back = ClassifierModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = model().to_bytes();
        assert!(ClassifierModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ClassifierModel::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(ClassifierModel::from_bytes(&extra).is_err());
    }
}
