//! Binary model checkpoints.
//!
//! ```text
//! magic "PVTKCKPT", u32 version
//! u32 length, model config as TOML
//! u32 tensor count, then per tensor:
//!   u32 name length, name, u32 rank, rank × u64 extents, f64 values
//! ```
//!
//! All integers and floats are little-endian, so save then load is bit-exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::ParamStore;
use crate::siamese::{ModelConfig, SiameseModel};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"PVTKCKPT";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(
        &u32::try_from(v)
            .expect("checkpoint field fits u32")
            .to_le_bytes(),
    );
}

pub fn encode_checkpoint(model: &SiameseModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let meta = model.config.to_toml();
    put_u32(&mut out, meta.len());
    out.extend_from_slice(meta.as_bytes());
    put_u32(&mut out, model.params.len());
    for (name, t) in model.params.iter() {
        put_u32(&mut out, name.len());
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, t.ndim());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("extent {v} too large")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Checkpoint("string is not UTF-8".into()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SiameseModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version as u32 != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let config =
        ModelConfig::from_toml(&r.string()?).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let count = r.u32()?;
    let mut stored = ParamStore::new();
    for _ in 0..count {
        let name = r.string()?;
        let rank = r.u32()?;
        let shape = (0..rank).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let numel = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let numel = numel.ok_or_else(|| Error::Checkpoint(format!("'{name}' is too large")))?;
        let raw = r.take(
            numel
                .checked_mul(8)
                .ok_or_else(|| Error::Checkpoint(format!("'{name}' is too large")))?,
        )?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if stored.id(&name).is_some() {
            return Err(Error::Checkpoint(format!(
                "parameter '{name}' stored twice"
            )));
        }
        stored.add(
            name,
            Tensor::new(shape, data).map_err(|e| Error::Checkpoint(e.to_string()))?,
        );
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let mut model = SiameseModel::new(config)?;
    model.params.load_from(&stored)?;
    Ok(model)
}

pub fn save_checkpoint(path: &Path, model: &SiameseModel) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<SiameseModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pvt::PvtConfig;
    use crate::siamese::Combinator;

    fn tiny_model() -> SiameseModel {
        let mut pvt = PvtConfig::nano();
        pvt.height = 8;
        pvt.width = 8;
        SiameseModel::new(ModelConfig::new(pvt, Combinator::Quad3)).unwrap()
    }

    #[test]
    fn round_trip_bits() {
        let mut m = tiny_model();
        for (i, t) in m.params.values_mut().enumerate() {
            for (j, v) in t.data_mut().iter_mut().enumerate() {
                *v += (i * 31 + j) as f64 * 1e-3 + 1.0 / 3.0;
            }
        }
        let back = decode_checkpoint(&encode_checkpoint(&m)).unwrap();
        assert_eq!(back.config, m.config);
        for ((n1, a), (n2, b)) in m.params.iter().zip(back.params.iter()) {
            assert_eq!(n1, n2);
            assert!(a
                .data()
                .iter()
                .zip(b.data())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn corrupt_input() {
        let bytes = encode_checkpoint(&tiny_model());
        assert_eq!(decode_checkpoint(b"nope").unwrap_err().kind(), "checkpoint");
        assert_eq!(
            decode_checkpoint(&bytes[..bytes.len() - 3])
                .unwrap_err()
                .kind(),
            "checkpoint"
        );
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(decode_checkpoint(&extra).unwrap_err().kind(), "checkpoint");
    }
}
