use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A pooled embedding produced by one extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub source: String,
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn new(source: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dimension(format!("embedding value {pos} is not finite")));
        }
        Ok(Self { source: source.into(), values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub source: String,
    pub offset: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedEmbedding {
    pub values: Vec<f64>,
    pub layout: Vec<LayoutEntry>,
}

impl FusedEmbedding {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn slice(&self, entry: &LayoutEntry) -> &[f64] {
        &self.values[entry.offset..entry.offset + entry.dim]
    }
}

impl From<FusedEmbedding> for Embedding {
    fn from(fused: FusedEmbedding) -> Self {
        let source = fused
            .layout
            .iter()
            .map(|e| e.source.as_str())
            .collect::<Vec<_>>()
            .join("+");
        Embedding { source, values: fused.values }
    }
}

/// Concatenates embeddings in argument order.
pub fn fuse(parts: &[Embedding]) -> Result<FusedEmbedding> {
    if parts.is_empty() {
        return Err(Error::Dimension("fusion needs at least one embedding".into()));
    }
    let total = parts.iter().map(Embedding::dim).sum();
    let mut values = Vec::with_capacity(total);
    let mut layout = Vec::with_capacity(parts.len());
    for part in parts {
        layout.push(LayoutEntry { source: part.source.clone(), offset: values.len(), dim: part.dim() });
        values.extend_from_slice(&part.values);
    }
    Ok(FusedEmbedding { values, layout })
}
