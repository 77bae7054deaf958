//! Checkpoint layout:
//!
//! ```text
//! b"APTFCKPT" | header_len: u64 LE | JSON header | f64 LE parameters
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelSpec, ModelState};
use crate::error::{AptfError, Result};
use crate::numeric::Matrix;

const MAGIC: &[u8; 8] = b"APTFCKPT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    step: u64,
    num_params: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelState,
    pub step: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            spec: self.model.spec,
            step: self.step,
            num_params: self.model.num_params(),
        })?;
        let mut out = Vec::with_capacity(16 + header.len() + 8 * self.model.num_params());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.model.flat_params() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| AptfError::BadSpec(format!("checkpoint: {msg}"));
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("missing magic"));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16 + header_len).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body)?;
        header.spec.validate()?;
        let block = &bytes[16 + header_len..];
        if block.len() != 8 * header.num_params {
            return Err(bad("parameter block length mismatch"));
        }
        let flat: Vec<f64> = block
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let params = header
            .spec
            .param_shapes()
            .into_iter()
            .map(|(r, c)| Matrix::zeros(r, c))
            .collect();
        let mut model = ModelState {
            spec: header.spec,
            params,
        };
        model.set_flat_params(&flat)?;
        if !model.is_finite() {
            return Err(bad("non-finite parameters"));
        }
        Ok(Self {
            model,
            step: header.step,
        })
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &ModelState, step: u64) -> Result<()> {
    let bytes = Checkpoint {
        model: model.clone(),
        step,
    }
    .to_bytes()?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::init_model;
    use crate::numeric::Rng;

    #[test]
    fn bytes_round_trip() {
        let spec = ModelSpec::MlpForecaster { lookback: 6, horizon: 2, variables: 1, hidden: 5 };
        let model = init_model(spec, &mut Rng::new(12)).unwrap();
        let ckpt = Checkpoint { model, step: 77 };
        let bytes = ckpt.to_bytes().unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ckpt);

        let mut truncated = bytes.clone();
        truncated.pop();
        assert!(Checkpoint::from_bytes(&truncated).is_err());
    }
}
