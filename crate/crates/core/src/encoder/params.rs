use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub trainable: bool,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Every parameter in one flat buffer, addressed by named tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    pub infos: Vec<TensorInfo>,
    pub data: Vec<f64>,
}

impl ParamStore {
    pub(crate) fn new() -> Self {
        ParamStore {
            infos: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Appends a zero tensor and returns its offset.
    pub(crate) fn push(&mut self, name: &str, shape: &[usize], trainable: bool) -> usize {
        let offset = self.data.len();
        let info = TensorInfo {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset,
            trainable,
        };
        self.data.resize(offset + info.len(), 0.0);
        self.infos.push(info);
        offset
    }

    pub fn info(&self, name: &str) -> Option<&TensorInfo> {
        self.infos.iter().find(|i| i.name == name)
    }

    pub fn get(&self, name: &str) -> Result<&[f64]> {
        let info = self
            .info(name)
            .ok_or_else(|| Error::Contract(format!("no tensor named {name}")))?;
        Ok(&self.data[info.range()])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn trainable_count(&self) -> usize {
        self.infos.iter().filter(|i| i.trainable).map(TensorInfo::len).sum()
    }

    /// Name of the tensor holding flat index `i`.
    pub fn owner(&self, i: usize) -> &str {
        self.infos
            .iter()
            .find(|t| t.range().contains(&i))
            .map_or("?", |t| t.name.as_str())
    }
}
