//! Binary checkpoint format (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "XRUMCKPT"
//! version    u32      = 1
//! vocab      u64
//! hidden     u64
//! layers     u64
//! dropout    f64
//! count      u64      number of parameters that follow
//! values     count × f64, in layout order: embeddings, per layer
//!                     (weight, bias), head weight, head bias
//! ```

use std::fs;
use std::path::Path;

use super::{ClassifierParams, Dims, Layout, ModelError};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"XRUMCKPT";

pub(super) fn encode(params: &ClassifierParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + params.values.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for n in [params.dims.vocab, params.dims.hidden, params.dims.layers] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    out.extend_from_slice(&params.dropout.to_le_bytes());
    out.extend_from_slice(&(params.values.len() as u64).to_le_bytes());
    for v in &params.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        if self.buf.len() < n {
            return Err("truncated".into());
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<ClassifierParams, String> {
    let mut r = Reader { buf: bytes };
    if r.take(8)? != MAGIC {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let dims = Dims {
        vocab: r.u64()? as usize,
        hidden: r.u64()? as usize,
        layers: r.u64()? as usize,
    };
    dims.validate().map_err(|e| e.to_string())?;
    let dropout = r.f64()?;
    let count = r.u64()? as usize;
    let expected = Layout::new(dims).total();
    if count != expected {
        return Err(format!("{count} parameters, dims imply {expected}"));
    }
    let values = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    if !r.buf.is_empty() {
        return Err("trailing bytes".into());
    }
    Ok(ClassifierParams { dims, dropout, values })
}

pub fn save_checkpoint(params: &ClassifierParams, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    fs::write(path, encode(params)).map_err(|e| ModelError::Checkpoint {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ClassifierParams, ModelError> {
    let path = path.as_ref();
    let err = |reason: String| ModelError::Checkpoint {
        path: path.display().to_string(),
        reason,
    };
    let bytes = fs::read(path).map_err(|e| err(e.to_string()))?;
    decode(&bytes).map_err(err)
}
