//! Binary checkpoint format.
//!
//! ```text
//! magic      8 bytes   "CLMXCKPT"
//! version    u8        currently 1
//! meta_len   u32 LE
//! metadata   meta_len bytes of UTF-8 JSON
//! count      u32 LE    number of tensor blocks
//! per tensor:
//!   name_len u16 LE
//!   name     name_len bytes UTF-8
//!   flags    u8        bit 0 = trainable
//!   ndim     u8
//!   dims     ndim x u32 LE
//!   values   product(dims) x f64 LE (IEEE-754 bit patterns, row-major)
//! ```
//!
//! Values are stored bit-exactly so a save/load round trip reproduces every
//! parameter exactly.

use std::collections::HashSet;
use std::io::{Cursor, Read};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{ParamStore, Tensor};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CLMXCKPT";
pub const CHECKPOINT_VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub trainable: bool,
    pub value: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub metadata: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore, metadata: serde_json::Value) -> Self {
        let tensors = store
            .iter()
            .map(|(_, p)| NamedTensor {
                name: p.name.clone(),
                trainable: p.trainable,
                value: p.value.clone(),
            })
            .collect();
        Checkpoint { metadata, tensors }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut seen = HashSet::new();
        for t in &self.tensors {
            if !seen.insert(t.name.as_str()) {
                return Err(Error::Checkpoint(format!("duplicate tensor name `{}`", t.name)));
            }
        }
        let meta = serde_json::to_vec(&self.metadata).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.push(CHECKPOINT_VERSION);
        out.write_u32::<LittleEndian>(meta.len() as u32).unwrap();
        out.extend_from_slice(&meta);
        out.write_u32::<LittleEndian>(self.tensors.len() as u32).unwrap();
        for t in &self.tensors {
            let name = t.name.as_bytes();
            let name_len = u16::try_from(name.len())
                .map_err(|_| Error::Checkpoint(format!("tensor name too long: `{}`", t.name)))?;
            out.write_u16::<LittleEndian>(name_len).unwrap();
            out.extend_from_slice(name);
            out.push(u8::from(t.trainable));
            out.push(t.value.shape().len() as u8);
            for &d in t.value.shape() {
                out.write_u32::<LittleEndian>(d as u32).unwrap();
            }
            for v in t.value.data() {
                out.write_u64::<LittleEndian>(v.to_bits()).unwrap();
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = |what: &str| Error::Checkpoint(format!("truncated input while reading {what}"));
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| truncated("magic"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic bytes)".into()));
        }
        let version = r.read_u8().map_err(|_| truncated("version"))?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        let meta_len = r.read_u32::<LittleEndian>().map_err(|_| truncated("metadata length"))? as usize;
        let mut meta = vec![0u8; meta_len.min(bytes.len())];
        r.read_exact(&mut meta).map_err(|_| truncated("metadata"))?;
        if meta.len() != meta_len {
            return Err(truncated("metadata"));
        }
        let metadata = serde_json::from_slice(&meta).map_err(|e| Error::Checkpoint(format!("metadata: {e}")))?;
        let count = r.read_u32::<LittleEndian>().map_err(|_| truncated("tensor count"))?;
        let mut tensors = Vec::new();
        let mut seen = HashSet::new();
        for _ in 0..count {
            let name_len = r.read_u16::<LittleEndian>().map_err(|_| truncated("tensor name"))? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name).map_err(|_| truncated("tensor name"))?;
            let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            let flags = r.read_u8().map_err(|_| truncated(&name))?;
            let ndim = r.read_u8().map_err(|_| truncated(&name))? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.read_u32::<LittleEndian>().map_err(|_| truncated(&name))? as usize);
            }
            let n: usize = shape.iter().product();
            let remaining = bytes.len() - r.position() as usize;
            if n.saturating_mul(8) > remaining {
                return Err(truncated(&name));
            }
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(f64::from_bits(r.read_u64::<LittleEndian>().map_err(|_| truncated(&name))?));
            }
            let value = Tensor::new(shape, data).map_err(|e| Error::Checkpoint(format!("tensor `{name}`: {e}")))?;
            if !seen.insert(name.clone()) {
                return Err(Error::Checkpoint(format!("duplicate tensor name `{name}`")));
            }
            tensors.push(NamedTensor {
                name,
                trainable: flags & 1 == 1,
                value,
            });
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
        }
        Ok(Checkpoint { metadata, tensors })
    }

    /// Copies checkpoint tensors into `store`, skipping names for which
    /// `exclude` returns true. Every other checkpoint tensor must exist in
    /// the store with the same shape, and every non-excluded store
    /// parameter must be present in the checkpoint. Returns the restored
    /// names.
    pub fn restore_into(&self, store: &mut ParamStore, exclude: impl Fn(&str) -> bool) -> Result<Vec<String>> {
        let mut restored = Vec::new();
        for t in self.tensors.iter().filter(|t| !exclude(&t.name)) {
            let id = store
                .id(&t.name)
                .ok_or_else(|| Error::Checkpoint(format!("unknown parameter name `{}`", t.name)))?;
            let target = store.value(id).shape().to_vec();
            if target != t.value.shape() {
                return Err(Error::Checkpoint(format!(
                    "shape mismatch for `{}`: checkpoint {:?}, model {:?}",
                    t.name,
                    t.value.shape(),
                    target
                )));
            }
            restored.push(t.name.clone());
        }
        let names: HashSet<&str> = self.tensors.iter().map(|t| t.name.as_str()).collect();
        for (_, p) in store.iter() {
            if !exclude(&p.name) && !names.contains(p.name.as_str()) {
                return Err(Error::Checkpoint(format!("checkpoint is missing tensor `{}`", p.name)));
            }
        }
        for t in self.tensors.iter().filter(|t| !exclude(&t.name)) {
            let id = store.id(&t.name).expect("checked above");
            store.get_mut(id).value = t.value.clone();
        }
        Ok(restored)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ParamStore {
        let mut s = ParamStore::new();
        s.add("enc.w", Tensor::matrix(2, 3, vec![0.1, -0.2, 1e-300, f64::MAX, -0.0, 3.0]).unwrap())
            .unwrap();
        s.add("head.b", Tensor::vector(vec![1.0, 2.0])).unwrap();
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let ck = Checkpoint::from_store(&s, serde_json::json!({"k": 2}));
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.metadata, serde_json::json!({"k": 2}));
        for (a, b) in ck.tensors.iter().zip(&back.tensors) {
            assert_eq!(a.name, b.name);
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.value), bits(&b.value));
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let mut bytes = Checkpoint::from_store(&sample(), serde_json::json!({})).to_bytes().unwrap();
        bytes[8] = 9;
        let err = Checkpoint::from_bytes(&bytes).unwrap_err().to_string();
        assert!(err.contains("version 9"), "{err}");
    }

    #[test]
    fn truncation_is_reported() {
        let bytes = Checkpoint::from_store(&sample(), serde_json::json!({})).to_bytes().unwrap();
        for cut in [3, 10, 20, bytes.len() - 1] {
            let err = Checkpoint::from_bytes(&bytes[..cut]).unwrap_err().to_string();
            assert!(err.contains("truncated"), "cut {cut}: {err}");
        }
    }

    #[test]
    fn shape_guard_names_the_tensor() {
        let ck = Checkpoint::from_store(&sample(), serde_json::json!({}));
        let mut other = ParamStore::new();
        other.add("enc.w", Tensor::zeros(&[4, 3])).unwrap();
        other.add("head.b", Tensor::zeros(&[2])).unwrap();
        let err = ck.restore_into(&mut other, |_| false).unwrap_err().to_string();
        assert!(err.contains("enc.w"), "{err}");
    }

    #[test]
    fn unknown_name_is_an_error_unless_excluded() {
        let ck = Checkpoint::from_store(&sample(), serde_json::json!({}));
        let mut other = ParamStore::new();
        other.add("enc.w", Tensor::zeros(&[2, 3])).unwrap();
        let err = ck.restore_into(&mut other, |_| false).unwrap_err().to_string();
        assert!(err.contains("head.b"), "{err}");
        let restored = ck.restore_into(&mut other, |n| n.starts_with("head.")).unwrap();
        assert_eq!(restored, vec!["enc.w".to_string()]);
        assert_eq!(other.value(other.id("enc.w").unwrap()).data()[0], 0.1);
    }

    proptest! {
        #[test]
        fn arbitrary_values_survive(vals in proptest::collection::vec(any::<f64>(), 1..40), trainable: bool) {
            let mut s = ParamStore::new();
            let id = s.add("x", Tensor::vector(vals.clone())).unwrap();
            s.set_trainable(id, trainable);
            let bytes = Checkpoint::from_store(&s, serde_json::Value::Null).to_bytes().unwrap();
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.tensors[0].trainable, trainable);
            let a: Vec<u64> = vals.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.tensors[0].value.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
