//! Binary tensor files.
//!
//! Layout: the 8-byte magic `CALIMTR1`, a little-endian `u32` header length,
//! a UTF-8 JSON header `{class_names?, dtype, role, shape}`, then the
//! row-major little-endian payload. Label tensors are 1-D `i32`; logits and
//! probabilities are 2-D `f32`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::{Matrix, PredictionSet, RawPredictions};

pub const MAGIC: &[u8; 8] = b"CALIMTR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    I32,
}

impl Dtype {
    pub fn size(&self) -> usize {
        4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Logits,
    Probs,
    Labels,
}

/// Fields are declared in alphabetical order so the encoded header is
/// canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    pub dtype: Dtype,
    pub role: Role,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    I32(Vec<i32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub header: TensorHeader,
    pub data: TensorData,
}

impl Tensor {
    pub fn labels(values: Vec<i32>) -> Self {
        Self {
            header: TensorHeader {
                class_names: None,
                dtype: Dtype::I32,
                role: Role::Labels,
                shape: vec![values.len()],
            },
            data: TensorData::I32(values),
        }
    }

    /// A 2-D `f32` tensor of logits or probabilities.
    pub fn matrix(role: Role, rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        let t = Self {
            header: TensorHeader {
                class_names: None,
                dtype: Dtype::F32,
                role,
                shape: vec![rows, cols],
            },
            data: TensorData::F32(values),
        };
        t.check()?;
        Ok(t)
    }

    pub fn with_class_names(mut self, names: Option<Vec<String>>) -> Self {
        self.header.class_names = names;
        self
    }

    pub fn role(&self) -> Role {
        self.header.role
    }

    fn element_count(&self) -> usize {
        self.header.shape.iter().product()
    }

    fn check(&self) -> Result<()> {
        let h = &self.header;
        let (dtype, dims) = match h.role {
            Role::Labels => (Dtype::I32, 1),
            Role::Logits | Role::Probs => (Dtype::F32, 2),
        };
        if h.dtype != dtype || h.shape.len() != dims {
            return Err(Error::HeaderParse(format!(
                "{:?} tensors must be {dims}-D {:?}, got {}-D {:?}",
                h.role,
                dtype,
                h.shape.len(),
                h.dtype
            )));
        }
        let len = match &self.data {
            TensorData::F32(v) if h.dtype == Dtype::F32 => v.len(),
            TensorData::I32(v) if h.dtype == Dtype::I32 => v.len(),
            _ => return Err(Error::HeaderParse("payload type differs from dtype".into())),
        };
        if len != self.element_count() {
            return Err(Error::PayloadSizeMismatch {
                expected: self.element_count() * h.dtype.size(),
                actual: len * h.dtype.size(),
            });
        }
        Ok(())
    }

    /// Upcasts a 2-D tensor to a matrix.
    pub fn to_matrix(&self) -> Result<Matrix> {
        match (&self.data, self.header.shape.as_slice()) {
            (TensorData::F32(v), &[rows, cols]) => {
                Matrix::new(rows, cols, v.iter().map(|&x| x as f64).collect())
            }
            _ => Err(Error::ShapeMismatch(format!(
                "{:?} tensor is not a 2-D matrix",
                self.header.role
            ))),
        }
    }

    pub fn to_labels(&self) -> Result<Vec<i64>> {
        match &self.data {
            TensorData::I32(v) if self.header.role == Role::Labels => {
                Ok(v.iter().map(|&x| x as i64).collect())
            }
            _ => Err(Error::ShapeMismatch(format!(
                "{:?} tensor does not hold labels",
                self.header.role
            ))),
        }
    }
}

pub fn encode(tensor: &Tensor) -> Result<Vec<u8>> {
    tensor.check()?;
    let header = serde_json::to_vec(&tensor.header)?;
    let header_len = u32::try_from(header.len())
        .map_err(|_| Error::HeaderParse("header longer than 4 GiB".into()))?;
    let mut out = Vec::with_capacity(12 + header.len() + tensor.element_count() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    match &tensor.data {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::BadMagic);
    }
    let len_bytes: [u8; 4] = bytes
        .get(8..12)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::HeaderParse("missing header length".into()))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let header_bytes = bytes
        .get(12..12 + header_len)
        .ok_or_else(|| Error::HeaderParse("header runs past end of file".into()))?;
    let header: TensorHeader =
        serde_json::from_slice(header_bytes).map_err(|e| Error::HeaderParse(e.to_string()))?;
    let payload = &bytes[12 + header_len..];
    let count = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::HeaderParse("shape overflows".into()))?;
    let expected = count
        .checked_mul(header.dtype.size())
        .ok_or_else(|| Error::HeaderParse("shape overflows".into()))?;
    if payload.len() != expected {
        return Err(Error::PayloadSizeMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let words = payload.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]);
    let data = match header.dtype {
        Dtype::F32 => TensorData::F32(words.map(f32::from_le_bytes).collect()),
        Dtype::I32 => TensorData::I32(words.map(i32::from_le_bytes).collect()),
    };
    let tensor = Tensor { header, data };
    tensor.check()?;
    Ok(tensor)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode(&super::read_bytes(path.as_ref())?)
}

pub fn write_tensor(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(tensor)?;
    super::write_bytes(path.as_ref(), &bytes)
}

/// Score tensor (logits when present, else probabilities) and label tensor
/// of a set, narrowed to `f32`.
pub fn prediction_tensors(set: &PredictionSet) -> Result<(Tensor, Tensor)> {
    let (role, values) = match set.logits() {
        Some(l) => (Role::Logits, l),
        None => (Role::Probs, set.probs()),
    };
    let scores = Tensor::matrix(role, set.n(), set.k(), values.iter().map(|&x| x as f32).collect())?
        .with_class_names(set.class_names().map(<[String]>::to_vec));
    let labels = set
        .labels()
        .iter()
        .map(|&l| i32::try_from(l).map_err(|_| Error::ShapeMismatch(format!("label {l} exceeds i32"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((scores, Tensor::labels(labels)))
}

/// Builds a validated set from one label tensor plus logits and/or
/// probabilities. Class names come from the first score tensor carrying them.
pub fn predictions_from_tensors(tensors: &[Tensor]) -> Result<PredictionSet> {
    let mut raw = RawPredictions::default();
    let mut labels = None;
    let mut names = None;
    for t in tensors {
        let slot = match t.role() {
            Role::Labels => {
                if labels.replace(t.to_labels()?).is_some() {
                    return Err(Error::InvalidConfig("more than one labels tensor".into()));
                }
                continue;
            }
            Role::Logits => &mut raw.logits,
            Role::Probs => &mut raw.probs,
        };
        if slot.replace(t.to_matrix()?).is_some() {
            return Err(Error::InvalidConfig(format!("more than one {:?} tensor", t.role())));
        }
        if names.is_none() {
            names = t.header.class_names.clone();
        }
    }
    raw.labels = labels.ok_or_else(|| Error::InvalidConfig("no labels tensor given".into()))?;
    if raw.logits.is_none() && raw.probs.is_none() {
        return Err(Error::InvalidConfig("no logits or probs tensor given".into()));
    }
    raw.class_names = names;
    PredictionSet::validate(raw)
}
