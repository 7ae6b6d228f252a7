//! Small fully connected occupancy decoder loaded from a binary weight file.
//!
//! Layout (little-endian): magic `OCCMLP1\0`, `u32` latent length L,
//! `u32` layer count n, then n blocks of `u32 rows, u32 cols, u8 activation`
//! followed by `rows*cols` f32 weights (row-major) and `rows` f32 biases,
//! then L f32 latent values. The network input is `[x, y, z, latent...]`
//! and its single output is a logit.

use std::path::Path;

use super::OccupancyField;
use crate::error::{Error, Result};
use crate::geometry::Point;

pub const MLP_MAGIC: &[u8; 8] = b"OCCMLP1\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }

    /// Derivative expressed through the pre-activation `v` and output `y`.
    fn derivative(self, v: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct MlpField {
    name: String,
    layers: Vec<Layer>,
    latent: Vec<f64>,
}

impl MlpField {
    pub fn new(layers: Vec<Layer>, latent: Vec<f64>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::DimensionMismatch {
                offset: 0,
                reason: "network has no layers".into(),
            });
        }
        let mut expected = 3 + latent.len();
        for (i, l) in layers.iter().enumerate() {
            if l.cols != expected {
                return Err(Error::DimensionMismatch {
                    offset: 0,
                    reason: format!(
                        "layer {i} expects {} inputs, previous gives {expected}",
                        l.cols
                    ),
                });
            }
            if l.weights.len() != l.rows * l.cols || l.biases.len() != l.rows {
                return Err(Error::DimensionMismatch {
                    offset: 0,
                    reason: format!("layer {i} parameter count does not match its shape"),
                });
            }
            expected = l.rows;
        }
        if expected != 1 {
            return Err(Error::DimensionMismatch {
                offset: 0,
                reason: format!("last layer has {expected} outputs, expected 1"),
            });
        }
        Ok(Self {
            name: "mlp".into(),
            layers,
            latent,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn latent(&self) -> &[f64] {
        &self.latent
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref())?;
        let name = path
            .as_ref()
            .file_stem()
            .map_or_else(|| "mlp".to_string(), |s| s.to_string_lossy().into_owned());
        Ok(Self::from_bytes(&bytes)?.with_name(name))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8, "magic")?;
        if magic != MLP_MAGIC {
            return Err(Error::BadMagic { offset: 0 });
        }
        let latent_dim = r.u32("latent dimension")? as usize;
        let layer_count = r.u32("layer count")? as usize;
        let mut layers = Vec::new();
        let mut expected_cols = 3 + latent_dim;
        for i in 0..layer_count {
            let header_at = r.pos;
            let rows = r.u32("layer rows")? as usize;
            let cols = r.u32("layer cols")? as usize;
            let tag_at = r.pos;
            let tag = r.u8("activation")?;
            let activation = Activation::from_tag(tag).ok_or_else(|| Error::DimensionMismatch {
                offset: tag_at,
                reason: format!("unknown activation tag {tag}"),
            })?;
            if cols != expected_cols {
                return Err(Error::DimensionMismatch {
                    offset: header_at,
                    reason: format!("layer {i} has {cols} columns, expected {expected_cols}"),
                });
            }
            if rows == 0 {
                return Err(Error::DimensionMismatch {
                    offset: header_at,
                    reason: format!("layer {i} has zero rows"),
                });
            }
            let weights = r.f32s(rows * cols, "layer weights")?;
            let biases = r.f32s(rows, "layer biases")?;
            layers.push(Layer {
                rows,
                cols,
                weights,
                biases,
                activation,
            });
            expected_cols = rows;
        }
        if expected_cols != 1 || layers.is_empty() {
            return Err(Error::DimensionMismatch {
                offset: r.pos,
                reason: format!("network output dimension is {expected_cols}, expected 1"),
            });
        }
        let latent = r.f32s(latent_dim, "latent code")?;
        Self::new(layers, latent)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MLP_MAGIC);
        out.extend_from_slice(&(self.latent.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.rows as u32).to_le_bytes());
            out.extend_from_slice(&(l.cols as u32).to_le_bytes());
            out.push(l.activation.tag());
            for w in l.weights.iter().chain(&l.biases) {
                out.extend_from_slice(&(*w as f32).to_le_bytes());
            }
        }
        for z in &self.latent {
            out.extend_from_slice(&(*z as f32).to_le_bytes());
        }
        out
    }

    fn input(&self, x: &Point) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 + self.latent.len());
        v.extend_from_slice(x.as_slice());
        v.extend_from_slice(&self.latent);
        v
    }
}

impl OccupancyField for MlpField {
    fn name(&self) -> &str {
        &self.name
    }

    fn logit(&self, x: &Point) -> f64 {
        let mut h = self.input(x);
        for l in &self.layers {
            h = (0..l.rows)
                .map(|r| {
                    let row = &l.weights[r * l.cols..(r + 1) * l.cols];
                    let v = row.iter().zip(&h).map(|(w, a)| w * a).sum::<f64>() + l.biases[r];
                    l.activation.apply(v)
                })
                .collect();
        }
        h[0]
    }

    fn logit_and_gradient(&self, x: &Point) -> (f64, Point) {
        // Forward pass keeping pre-activations and outputs for the backward sweep.
        let mut outputs = vec![self.input(x)];
        let mut pre = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let h = outputs.last().expect("input present");
            let v: Vec<f64> = (0..l.rows)
                .map(|r| {
                    let row = &l.weights[r * l.cols..(r + 1) * l.cols];
                    row.iter().zip(h).map(|(w, a)| w * a).sum::<f64>() + l.biases[r]
                })
                .collect();
            outputs.push(v.iter().map(|&s| l.activation.apply(s)).collect());
            pre.push(v);
        }
        let logit = outputs.last().expect("output present")[0];

        let mut grad = vec![1.0];
        for (li, l) in self.layers.iter().enumerate().rev() {
            let y = &outputs[li + 1];
            let delta: Vec<f64> = (0..l.rows)
                .map(|r| grad[r] * l.activation.derivative(pre[li][r], y[r]))
                .collect();
            let mut next = vec![0.0; l.cols];
            for (r, d) in delta.iter().enumerate() {
                let row = &l.weights[r * l.cols..(r + 1) * l.cols];
                for (n, w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            grad = next;
        }
        (logit, Point::new(grad[0], grad[1], grad[2]))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::TruncatedFile {
                offset: self.bytes.len(),
                what,
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>> {
        let len = n.checked_mul(4).ok_or(Error::TruncatedFile {
            offset: self.bytes.len(),
            what,
        })?;
        let b = self.take(len, what)?;
        Ok(b.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect())
    }
}
