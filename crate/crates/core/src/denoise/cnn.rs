//! Forward pass of a DnCNN-style residual network and its weight-file format.
//!
//! Layout (little endian):
//!
//! ```text
//! "FPRW"  version:u32  layers:u32  residual:u8
//! per layer: out_ch:u32 in_ch:u32 k:u32
//!            weights: f32[out_ch · in_ch · k · k]  (out, in, row, col)
//!            biases:  f32[out_ch]
//! crc32:u32  (IEEE, over every preceding byte)
//! ```
//!
//! Batch normalization is folded into the convolutions before export. Every
//! layer but the last is followed by a ReLU.

use std::path::Path;

use crate::error::{Error, Result, WeightError};
use crate::grid::ImagePlane;

pub const MAGIC: &[u8; 4] = b"FPRW";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    out_ch: usize,
    in_ch: usize,
    kernel: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    activation: Activation,
}

impl ConvLayer {
    pub fn new(
        out_ch: usize,
        in_ch: usize,
        kernel: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
        activation: Activation,
    ) -> std::result::Result<Self, WeightError> {
        if out_ch == 0 || in_ch == 0 {
            return Err(WeightError::Shape("zero channel count".into()));
        }
        if kernel.is_multiple_of(2) {
            return Err(WeightError::Shape(format!(
                "kernel size {kernel} is not odd"
            )));
        }
        if weights.len() != out_ch * in_ch * kernel * kernel {
            return Err(WeightError::Shape(format!(
                "expected {} weights, got {}",
                out_ch * in_ch * kernel * kernel,
                weights.len()
            )));
        }
        if bias.len() != out_ch {
            return Err(WeightError::Shape(format!(
                "expected {out_ch} biases, got {}",
                bias.len()
            )));
        }
        Ok(Self {
            out_ch,
            in_ch,
            kernel,
            weights,
            bias,
            activation,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn weight(&self, o: usize, i: usize, r: usize, c: usize) -> f64 {
        let k = self.kernel;
        self.weights[((o * self.in_ch + i) * k + r) * k + c] as f64
    }

    /// Zero-padded "same" cross-correlation on `in_ch` planes of `side²`.
    fn forward(&self, input: &[f64], side: usize) -> Vec<f64> {
        let plane = side * side;
        let half = (self.kernel / 2) as i64;
        let s = side as i64;
        let mut out = vec![0.0; self.out_ch * plane];
        for o in 0..self.out_ch {
            let dst = &mut out[o * plane..(o + 1) * plane];
            dst.fill(self.bias[o] as f64);
            for i in 0..self.in_ch {
                let src = &input[i * plane..(i + 1) * plane];
                for kr in 0..self.kernel {
                    for kc in 0..self.kernel {
                        let w = self.weight(o, i, kr, kc);
                        if w == 0.0 {
                            continue;
                        }
                        let (dr, dc) = (kr as i64 - half, kc as i64 - half);
                        for r in 0..s {
                            let sr = r + dr;
                            if !(0..s).contains(&sr) {
                                continue;
                            }
                            for c in 0..s {
                                let sc = c + dc;
                                if (0..s).contains(&sc) {
                                    dst[(r * s + c) as usize] += w * src[(sr * s + sc) as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
        if self.activation == Activation::Relu {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnModel {
    layers: Vec<ConvLayer>,
    residual: bool,
}

impl CnnModel {
    pub fn new(layers: Vec<ConvLayer>, residual: bool) -> std::result::Result<Self, WeightError> {
        let (first, last) = match (layers.first(), layers.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(WeightError::Shape("model has no layers".into())),
        };
        if first.in_ch != 1 {
            return Err(WeightError::Shape(format!(
                "first layer takes {} channels, expected 1",
                first.in_ch
            )));
        }
        if last.out_ch != 1 {
            return Err(WeightError::Shape(format!(
                "last layer produces {} channels, expected 1",
                last.out_ch
            )));
        }
        for (idx, pair) in layers.windows(2).enumerate() {
            if pair[0].out_ch != pair[1].in_ch {
                return Err(WeightError::Shape(format!(
                    "layer {} outputs {} channels but layer {} takes {}",
                    idx,
                    pair[0].out_ch,
                    idx + 1,
                    pair[1].in_ch
                )));
            }
        }
        Ok(Self { layers, residual })
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn residual(&self) -> bool {
        self.residual
    }
}

/// Runs the network on `x / 255`, subtracts the output from the input when
/// the model is residual, and rescales to `[0, 255]` units.
pub fn apply_cnn(x: &ImagePlane, model: &CnnModel) -> Result<ImagePlane> {
    let side = x.side();
    let input: Vec<f64> = x.values().iter().map(|v| v / 255.0).collect();
    let mut act = input.clone();
    for (idx, layer) in model.layers.iter().enumerate() {
        act = layer.forward(&act, side);
        if act.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("cnn layer {idx}")));
        }
    }
    let values = if model.residual {
        input
            .iter()
            .zip(&act)
            .map(|(i, n)| 255.0 * (i - n))
            .collect()
    } else {
        act.iter().map(|n| 255.0 * n).collect()
    };
    ImagePlane::new(side, values)
}

/// Serializes a model in the weight-file format.
pub fn write_cnn(model: &CnnModel) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    buf.push(model.residual as u8);
    for layer in &model.layers {
        for dim in [layer.out_ch, layer.in_ch, layer.kernel] {
            buf.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for w in layer.weights.iter().chain(&layer.bias) {
            buf.extend_from_slice(&w.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, len: usize, what: &str) -> std::result::Result<&[u8], WeightError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(WeightError::Shape(format!(
                "file ends inside {what} at byte {}",
                self.pos
            ))),
        }
    }

    fn u32(&mut self, what: &str) -> std::result::Result<u32, WeightError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, count: usize, what: &str) -> std::result::Result<Vec<f32>, WeightError> {
        let len = count
            .checked_mul(4)
            .ok_or_else(|| WeightError::Shape(format!("{what} too large")))?;
        Ok(self
            .take(len, what)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }
}

/// Parses an in-memory weight file.
pub fn parse_cnn(bytes: &[u8]) -> std::result::Result<CnnModel, WeightError> {
    const HEADER: usize = 4 + 4 + 4 + 1;
    if bytes.len() < HEADER + 4 {
        return Err(WeightError::Header(format!(
            "file is only {} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(WeightError::Header(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(WeightError::Header(format!(
            "unsupported version {version}"
        )));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(WeightError::Checksum { stored, computed });
    }
    let count = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    let residual = match body[12] {
        0 => false,
        1 => true,
        other => return Err(WeightError::Header(format!("residual flag {other}"))),
    };
    let mut reader = Reader {
        bytes: body,
        pos: HEADER,
    };
    let mut layers = Vec::with_capacity(count.min(1024));
    for idx in 0..count {
        let what = format!("layer {idx}");
        let out_ch = reader.u32(&what)? as usize;
        let in_ch = reader.u32(&what)? as usize;
        let kernel = reader.u32(&what)? as usize;
        let n_weights = out_ch
            .checked_mul(in_ch)
            .and_then(|v| v.checked_mul(kernel))
            .and_then(|v| v.checked_mul(kernel))
            .ok_or_else(|| WeightError::Shape(format!("{what} dimensions overflow")))?;
        let weights = reader.f32s(n_weights, &what)?;
        let bias = reader.f32s(out_ch, &what)?;
        let activation = if idx + 1 == count {
            Activation::None
        } else {
            Activation::Relu
        };
        layers.push(ConvLayer::new(
            out_ch, in_ch, kernel, weights, bias, activation,
        )?);
    }
    if reader.pos != body.len() {
        return Err(WeightError::Shape(format!(
            "{} trailing bytes after {count} layers",
            body.len() - reader.pos
        )));
    }
    CnnModel::new(layers, residual)
}

pub fn load_cnn(path: &Path) -> Result<CnnModel> {
    let bytes = std::fs::read(path).map_err(|source| WeightError::Missing {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_cnn(&bytes)?)
}
