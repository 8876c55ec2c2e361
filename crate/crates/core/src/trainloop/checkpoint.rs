//! Versioned binary checkpoints.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! magic      8 bytes  "FSNTCKPT"
//! version    u32
//! header_len u64, then header_len bytes of JSON (specs, layout, stats,
//!            training config, detector settings, rng state)
//! n_tensors  u32, then per tensor: ndim u32, dims u64 * ndim,
//!            values as f64 bit patterns
//! trailer    8 bytes  "FSNTEND\0"
//! ```
//!
//! Floats in the tensor section are stored as raw bits, and the JSON header
//! uses round-trip float formatting, so loading reproduces every value
//! exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::detect::ScoreWeights;
use crate::diffcore::{RngState, Tensor};
use crate::error::{Error, Result};
use crate::nets::{FeatureLayout, Layer, Mlp, MlpSpec, ModelBundle};
use crate::payflow::NormalizationStats;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FSNTCKPT";
pub const CHECKPOINT_TRAILER: &[u8; 8] = b"FSNTEND\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Detector settings stored alongside the model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorState {
    pub weights: ScoreWeights,
    pub theta: Option<f64>,
}

/// Everything needed to score data the way the training run would.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub bundle: ModelBundle,
    pub stats: NormalizationStats,
    pub config: TrainConfig,
    pub detector: Option<DetectorState>,
    pub rng_seed: u64,
    pub rng_state: RngState,
}

#[derive(Serialize, Deserialize)]
struct Header {
    layout: FeatureLayout,
    specs: Vec<MlpSpec>,
    stats: NormalizationStats,
    config: TrainConfig,
    detector: Option<DetectorState>,
    rng_seed: u64,
    rng_state: RngState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            layout: *self.bundle.layout(),
            specs: self.bundle.networks().iter().map(|n| n.spec().clone()).collect(),
            stats: self.stats.clone(),
            config: self.config.clone(),
            detector: self.detector,
            rng_seed: self.rng_seed,
            rng_state: self.rng_state,
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Parse(e.to_string()))?;
        let params = self.bundle.params();

        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        for t in &params {
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in t.data() {
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        out.extend_from_slice(CHECKPOINT_TRAILER);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Parse("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let header_len = r.len_u64()?;
        let header: Header =
            serde_json::from_slice(r.take(header_len)?).map_err(|e| Error::Parse(format!("header: {e}")))?;
        let n = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let ndim = r.u32()? as usize;
            let mut shape = Vec::with_capacity(ndim.min(8));
            for _ in 0..ndim {
                shape.push(r.len_u64()?);
            }
            let count: usize = shape.iter().product();
            let raw = r.take(count.checked_mul(8).ok_or_else(|| Error::Parse("tensor too large".into()))?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
                .collect();
            tensors.push(Tensor::new(shape, data).map_err(|e| Error::Parse(e.to_string()))?);
        }
        if r.take(8)? != CHECKPOINT_TRAILER {
            return Err(Error::Parse("missing trailer".into()));
        }
        if r.pos != bytes.len() {
            return Err(Error::Parse("trailing bytes after checkpoint".into()));
        }

        let [g, d, e, dec]: [MlpSpec; 4] = header
            .specs
            .try_into()
            .map_err(|_| Error::Parse("expected four network specs".into()))?;
        let mut it = tensors.into_iter();
        let mut build = |spec: MlpSpec| -> Result<Mlp> {
            let mut layers = Vec::new();
            for _ in 1..spec.widths.len() {
                let weight = it.next().ok_or_else(|| Error::Parse("too few tensors".into()))?;
                let bias = it.next().ok_or_else(|| Error::Parse("too few tensors".into()))?;
                layers.push(Layer { weight, bias });
            }
            Mlp::from_layers(spec, layers).map_err(|e| Error::Parse(e.to_string()))
        };
        let nets = [build(g)?, build(d)?, build(e)?, build(dec)?];
        if it.next().is_some() {
            return Err(Error::Parse("too many tensors".into()));
        }
        let [g, d, e, dec] = nets;
        let bundle = ModelBundle::from_parts(g, d, e, dec, header.layout).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Checkpoint {
            bundle,
            stats: header.stats,
            config: header.config,
            detector: header.detector,
            rng_seed: header.rng_seed,
            rng_state: header.rng_state,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    checkpoint.save(path)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::load(path)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Parse(format!("truncated checkpoint at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn len_u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Parse("length overflow".into()))
    }
}
