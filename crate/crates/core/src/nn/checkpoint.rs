//! `ECGW` weight files.
//!
//! Layout, little-endian: magic `ECGW`, `u16` version, `u16` dtype (1 = f64),
//! `u32` metadata length and `key=value` lines, `u32` block count, then per
//! block a `u16` name length, name, `u32` rows, `u32` cols and the values in
//! row-major order.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;

use super::Param;
use crate::{fsutil, Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ECGW";
pub const CHECKPOINT_VERSION: u16 = 1;
const DTYPE_F64: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub blocks: Vec<(String, Array2<f64>)>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.origin, "truncated checkpoint"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn text(&mut self, n: usize) -> Result<&'a str> {
        std::str::from_utf8(self.take(n)?).map_err(|_| Error::format(self.origin, "non-utf8 text"))
    }
}

impl Checkpoint {
    pub fn from_params<'a>(
        meta: BTreeMap<String, String>,
        params: impl IntoIterator<Item = &'a Param>,
    ) -> Self {
        let blocks = params.into_iter().map(|p| (p.name.clone(), p.value.clone())).collect();
        Self { meta, blocks }
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut text = String::new();
        for (k, v) in &self.meta {
            if k.is_empty() || k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::InvalidArgument(format!("unencodable metadata key {k:?}")));
            }
            text.push_str(&format!("{k}={v}\n"));
        }
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&DTYPE_F64.to_le_bytes());
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for (name, value) in &self.blocks {
            let name_len = u16::try_from(name.len())
                .map_err(|_| Error::InvalidArgument(format!("parameter name too long: {name}")))?;
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(value.nrows() as u32).to_le_bytes());
            out.extend_from_slice(&(value.ncols() as u32).to_le_bytes());
            for v in value.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8], origin: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, origin };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::format(origin, "not an ECGW checkpoint"));
        }
        let version = r.u16()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionSkew {
                path: origin.to_path_buf(),
                found: version.into(),
                expected: CHECKPOINT_VERSION.into(),
            });
        }
        if r.u16()? != DTYPE_F64 {
            return Err(Error::format(origin, "unsupported dtype"));
        }
        let meta_len = r.u32()? as usize;
        let mut meta = BTreeMap::new();
        for line in r.text(meta_len)?.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(origin, format!("bad metadata line {line:?}")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        let n = r.u32()?;
        let mut blocks = Vec::new();
        for _ in 0..n {
            let name_len = r.u16()? as usize;
            let name = r.text(name_len)?.to_string();
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let count = rows
                .checked_mul(cols)
                .filter(|c| c.checked_mul(8).is_some())
                .ok_or_else(|| Error::format(origin, "block too large"))?;
            let raw = r.take(count * 8)?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let value = Array2::from_shape_vec((rows, cols), values)
                .map_err(|e| Error::format(origin, e.to_string()))?;
            blocks.push((name, value));
        }
        if r.pos != bytes.len() {
            return Err(Error::format(origin, "trailing bytes after checkpoint"));
        }
        Ok(Self { meta, blocks })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write(path, &self.encode()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&fsutil::read(path)?, path)
    }

    /// Copies block values into `params`, which must match in order, name and
    /// shape.
    pub fn restore_into(&self, params: Vec<&mut Param>) -> Result<()> {
        if params.len() != self.blocks.len() {
            return Err(Error::Shape(format!(
                "checkpoint holds {} parameters, model has {}",
                self.blocks.len(),
                params.len()
            )));
        }
        for (p, (name, value)) in params.into_iter().zip(&self.blocks) {
            if &p.name != name || p.value.dim() != value.dim() {
                return Err(Error::Shape(format!(
                    "checkpoint block {name} {:?} does not fit parameter {} {:?}",
                    value.dim(),
                    p.name,
                    p.value.dim()
                )));
            }
            p.value.assign(value);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> Checkpoint {
        let mut meta = BTreeMap::new();
        meta.insert("kind".into(), "generator".into());
        meta.insert("hidden".into(), "8".into());
        let a = Param::new("a.w", array![[1.0, -0.0, f64::MIN_POSITIVE], [1e300, -3.5, 0.1]]);
        let b = Param::new("a.b", array![[0.25]]);
        Checkpoint::from_params(meta, [&a, &b])
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.encode().unwrap();
        assert_eq!(&bytes[..4], b"ECGW");
        let back = Checkpoint::decode(&bytes, Path::new("x")).unwrap();
        assert_eq!(back.meta, c.meta);
        for ((n1, v1), (n2, v2)) in back.blocks.iter().zip(&c.blocks) {
            assert_eq!(n1, n2);
            let b1: Vec<u64> = v1.iter().map(|v| v.to_bits()).collect();
            let b2: Vec<u64> = v2.iter().map(|v| v.to_bits()).collect();
            assert_eq!(b1, b2);
        }
    }

    #[test]
    fn corruption_is_reported() {
        let bytes = sample().encode().unwrap();
        let p = Path::new("w.ecgw");
        assert!(matches!(Checkpoint::decode(&bytes[..bytes.len() - 1], p), Err(Error::Format { .. })));
        let mut skew = bytes.clone();
        skew[4] = 9;
        assert!(matches!(
            Checkpoint::decode(&skew, p),
            Err(Error::VersionSkew { found: 9, expected: 1, .. })
        ));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(Checkpoint::decode(&magic, p).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::decode(&extra, p).is_err());
    }

    #[test]
    fn restore_checks_layout() {
        let c = sample();
        let mut a = Param::zeros("a.w", 2, 3);
        let mut b = Param::zeros("a.b", 1, 1);
        c.restore_into(vec![&mut a, &mut b]).unwrap();
        assert_eq!(b.value[[0, 0]], 0.25);
        let mut wrong = Param::zeros("a.w", 3, 2);
        assert!(c.restore_into(vec![&mut wrong, &mut b]).is_err());
    }
}
