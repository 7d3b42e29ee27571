//! Model checkpoints: magic `TLNN`, u32 version, u32 length of the JSON
//! config echo, the config bytes, u64 value count, then every trainable
//! parameter followed by every BN running statistic as little-endian f64, in
//! declared layer order.

use std::io::{Read, Write};

use super::config::ModelConfig;
use super::model::Model;
use crate::seed;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TLNN";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, model: &Model) -> Result<()> {
    let config = serde_json::to_vec(model.config()).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(config.len() as u32).to_le_bytes())?;
    w.write_all(&config)?;
    w.write_all(&(model.parameter_count() as u64).to_le_bytes())?;
    for tensor in model.parameters().into_iter().chain(model.buffers()) {
        for v in tensor.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Model> {
    let truncated = |_| Error::Format("truncated checkpoint".into());
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(truncated)?;
    if &word != MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    r.read_exact(&mut word).map_err(truncated)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    r.read_exact(&mut word).map_err(truncated)?;
    let mut config = vec![0u8; u32::from_le_bytes(word) as usize];
    r.read_exact(&mut config).map_err(truncated)?;
    let config: ModelConfig = serde_json::from_slice(&config).map_err(|e| Error::Format(e.to_string()))?;

    let mut model = Model::new(config, &mut seed::stream(0, 0))?;
    let mut count = [0u8; 8];
    r.read_exact(&mut count).map_err(truncated)?;
    if u64::from_le_bytes(count) != model.parameter_count() as u64 {
        return Err(Error::Format("checkpoint value count does not match its config".into()));
    }
    let mut value = [0u8; 8];
    let mut fill = |tensors: Vec<ndarray::ArrayViewMutD<'_, f64>>| -> Result<()> {
        for mut t in tensors {
            for v in t.iter_mut() {
                r.read_exact(&mut value).map_err(truncated)?;
                *v = f64::from_le_bytes(value);
            }
        }
        Ok(())
    };
    fill(model.parameters_mut())?;
    fill(model.buffers_mut())?;
    Ok(model)
}
