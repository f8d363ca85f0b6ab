//! Dense numerical substrate: named fp64 parameter arrays, a reverse-mode
//! tape, dense/GRU layers, optimizers, and a lossless checkpoint format.

mod layers;
mod ops;
mod optim;
mod tape;

pub use layers::{Activation, DenseLayer, GruCell, Init, Mlp};
pub use ops::{cross_entropy, entropy, kld, kld_smoothed, log_softmax, softmax};
pub use optim::{Optimizer, OptimizerKind};
pub use tape::{Tape, TensorId};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Handle into a [`Params`] registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// A named fp64 parameter tensor with a same-shape gradient accumulator.
///
/// Writes reject non-finite entries so NaNs surface at the point of
/// corruption rather than three modules later.
#[derive(Debug, Clone)]
pub struct ParamArray {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Vec<f64>,
}

impl ParamArray {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Overwrite values, rejecting NaN/Inf.
    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::ShapeMismatch {
                name: self.name.clone(),
                expected: self.shape.clone(),
                got: vec![values.len()],
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter '{}'", self.name)));
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    pub fn set_value_at(&mut self, idx: usize, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("parameter '{}'", self.name)));
        }
        self.values[idx] = v;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub(crate) fn accumulate_grad(&mut self, delta: &[f64]) {
        for (g, d) in self.grad.iter_mut().zip(delta) {
            *g += d;
        }
    }
}

/// Registry of parameter arrays owned by one model.
#[derive(Debug, Clone, Default)]
pub struct Params {
    items: Vec<ParamArray>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a named parameter; the name must be unique within the registry.
    pub fn register(&mut self, name: &str, shape: &[usize], values: Vec<f64>) -> Result<ParamId> {
        let numel: usize = shape.iter().product();
        if values.len() != numel {
            return Err(Error::ShapeMismatch {
                name: name.to_string(),
                expected: shape.to_vec(),
                got: vec![values.len()],
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter '{name}'")));
        }
        if self.items.iter().any(|p| p.name == name) {
            return Err(Error::InvalidArg(format!("duplicate parameter name '{name}'")));
        }
        let grad = vec![0.0; numel];
        self.items.push(ParamArray {
            name: name.to_string(),
            shape: shape.to_vec(),
            values,
            grad,
        });
        Ok(ParamId(self.items.len() - 1))
    }

    pub fn get(&self, id: ParamId) -> &ParamArray {
        &self.items[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ParamArray {
        &mut self.items[id.0]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.items.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamArray> {
        self.items.iter()
    }

    pub fn zero_grad(&mut self) {
        self.items.iter_mut().for_each(ParamArray::zero_grad);
    }

    /// Serialize to the versioned checkpoint document. Values are stored as
    /// hex-encoded IEEE-754 bit patterns so a write/read cycle is bit-exact.
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            params: self
                .items
                .iter()
                .map(|p| CheckpointEntry {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    values: p.values.iter().map(|v| format!("{:016x}", v.to_bits())).collect(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArg(format!(
                "unsupported checkpoint version {} (expected {})",
                ck.version, CHECKPOINT_VERSION
            )));
        }
        let mut params = Params::new();
        for entry in &ck.params {
            let mut values = Vec::with_capacity(entry.values.len());
            for (i, hex) in entry.values.iter().enumerate() {
                let bits = u64::from_str_radix(hex, 16).map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad hex value '{hex}' in '{}': {e}", entry.name),
                })?;
                values.push(f64::from_bits(bits));
            }
            params.register(&entry.name, &entry.shape, values)?;
        }
        Ok(params)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_checkpoint())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|_| Error::MissingCheckpoint(path.display().to_string()))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        Self::from_checkpoint(&ck)
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Portable checkpoint document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub params: Vec<CheckpointEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<String>,
}
