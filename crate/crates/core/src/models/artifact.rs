//! Binary model container: magic, version, JSON metadata, then every
//! tensor as little-endian f64 in metadata order.

use std::io::{Read, Write};
use std::path::Path;

use super::params::{layout, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DXCOVMDL";
const VERSION: u32 = 1;

impl ModelParams {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(self)?;
        let mut out = Vec::with_capacity(20 + meta.len() + 8 * self.n_parameters());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Artifact("not a model file".into()));
        }
        let mut b4 = [0u8; 4];
        read_exact(&mut r, &mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::Artifact(format!("unsupported version {version}")));
        }
        let mut b8 = [0u8; 8];
        read_exact(&mut r, &mut b8)?;
        let meta_len = u64::from_le_bytes(b8) as usize;
        if meta_len > r.len() {
            return Err(Error::Artifact("truncated metadata".into()));
        }
        let mut params: ModelParams = serde_json::from_slice(&r[..meta_len])?;
        r = &r[meta_len..];
        params.spec.validate()?;
        let expected = layout(&params.spec);
        let shapes_ok = expected.len() == params.tensors.len()
            && expected
                .iter()
                .zip(&params.tensors)
                .all(|(e, t)| e.name == t.name && e.rows == t.rows && e.cols == t.cols);
        if !shapes_ok {
            return Err(Error::Artifact("tensor shapes do not match the model spec".into()));
        }
        if params.label_index.len() != params.spec.n_classes {
            return Err(Error::Artifact("label index does not match n_classes".into()));
        }
        let total: usize = params.tensors.iter().map(|t| t.rows * t.cols).sum();
        if r.len() != 8 * total {
            return Err(Error::Artifact(format!(
                "expected {} parameter bytes, found {}",
                8 * total,
                r.len()
            )));
        }
        for t in &mut params.tensors {
            t.data = r[..8 * t.rows * t.cols]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            r = &r[8 * t.rows * t.cols..];
        }
        if !params.is_finite() {
            return Err(Error::Artifact("non-finite parameter".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Artifact("truncated header".into()))
}
