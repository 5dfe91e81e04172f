//! Binary factor-model format, all integers and floats little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `MFTD` |
//! | 4 | format version (u32) |
//! | 24 | n, m, k (u64 each) |
//! | 8nk | U, row-major f64 |
//! | 8mk | V, row-major f64 |
//! | 8 | seed (u64) |

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::factors::FactorModel;

pub const MAGIC: &[u8; 4] = b"MFTD";
pub const VERSION: u32 = 1;

pub fn encode_model(model: &FactorModel) -> Vec<u8> {
    let (n, m, k) = (model.n_users(), model.n_items(), model.rank());
    let mut buf = Vec::with_capacity(48 + 8 * k * (n + m));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for dim in [n, m, k] {
        buf.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for v in model.users().iter().chain(model.items().iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&model.seed().to_le_bytes());
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.bytes.len() < N {
            return Err(Error::ModelFile("unexpected end of model file".into()));
        }
        let (head, rest) = self.bytes.split_at(N);
        self.bytes = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::ModelFile("model dimensions overflow".into()))?;
        if self.bytes.len() / 8 < count {
            return Err(Error::ModelFile("unexpected end of model file".into()));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(f64::from_le_bytes(self.take::<8>()?));
        }
        Ok(Array2::from_shape_vec((rows, cols), values).expect("shape matches count"))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<FactorModel> {
    let mut c = Cursor { bytes };
    if &c.take::<4>()? != MAGIC {
        return Err(Error::ModelFile("not a model file (bad magic bytes)".into()));
    }
    let version = u32::from_le_bytes(c.take::<4>()?);
    if version != VERSION {
        return Err(Error::ModelFile(format!("unsupported model file version {version}")));
    }
    let dim = |v: u64| {
        usize::try_from(v).map_err(|_| Error::ModelFile(format!("dimension {v} too large")))
    };
    let n = dim(c.u64()?)?;
    let m = dim(c.u64()?)?;
    let k = dim(c.u64()?)?;
    let users = c.matrix(n, k)?;
    let items = c.matrix(m, k)?;
    let seed = c.u64()?;
    if !c.bytes.is_empty() {
        return Err(Error::ModelFile(format!(
            "{} trailing bytes after model data",
            c.bytes.len()
        )));
    }
    FactorModel::from_parts(users, items, seed)
}

pub fn save_model(model: &FactorModel, path: &Path) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FactorModel> {
    decode_model(&fs::read(path)?)
}
