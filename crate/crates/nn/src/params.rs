//! Parameter registry: ordered parameterized units, deterministic random
//! initialization, and loading from safetensors files that use torchvision
//! parameter names.
//!
//! A "unit" is one parameterized layer (convolution, batch norm, or dense
//! layer). Units are numbered in construction order, which equals forward
//! order; trainability is expressed as "the last n backbone units".

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{NnError, Result};

/// 64-bit FNV-1a; used to derive per-purpose RNG streams from the run seed.
pub fn fnv1a64(parts: &[&str]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for part in parts {
        for &byte in part.as_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash ^= 0xff;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn seeded_rng(seed: u64, parts: &[&str]) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ fnv1a64(parts))
}

#[derive(Debug, Clone, Copy)]
pub enum Init {
    /// Kaiming-normal with fan-out for convolutions feeding rectifiers.
    KaimingNormal { fan_out: usize },
    /// Glorot-uniform for dense layers.
    GlorotUniform { fan_in: usize, fan_out: usize },
    Const(f32),
}

fn standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller; consumes two uniform draws per sample.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn draw(init: Init, len: usize, rng: &mut ChaCha20Rng) -> Vec<f32> {
    match init {
        Init::KaimingNormal { fan_out } => {
            let std = (2.0 / fan_out.max(1) as f64).sqrt();
            (0..len).map(|_| (standard_normal(rng) * std) as f32).collect()
        }
        Init::GlorotUniform { fan_in, fan_out } => {
            let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
            (0..len)
                .map(|_| ((rng.random::<f64>() * 2.0 - 1.0) * limit) as f32)
                .collect()
        }
        Init::Const(v) => vec![v; len],
    }
}

#[derive(Debug, Clone)]
pub struct UnitMeta {
    pub name: String,
    /// Indices into the parameter list.
    pub params: Vec<usize>,
}

/// Builds and owns every parameter of a model.
pub struct ParamStore {
    device: Device,
    rng: ChaCha20Rng,
    weights: Option<(PathBuf, HashMap<String, Tensor>)>,
    pub units: Vec<UnitMeta>,
    pub params: Vec<(String, Var)>,
    pub buffers: Vec<(String, Tensor)>,
}

impl ParamStore {
    pub fn new(device: Device, seed: u64) -> Self {
        Self {
            device,
            rng: seeded_rng(seed, &["init"]),
            weights: None,
            units: Vec::new(),
            params: Vec::new(),
            buffers: Vec::new(),
        }
    }

    /// Use a safetensors file as the parameter source; names present in the
    /// file win over random initialization, absent backbone names are fatal.
    pub fn with_weights_file(device: Device, seed: u64, path: &Path) -> Result<Self> {
        let weights = candle_core::safetensors::load(path, &device)?;
        Ok(Self {
            weights: Some((path.to_path_buf(), weights)),
            ..Self::new(device, seed)
        })
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn has_weights(&self) -> bool {
        self.weights.is_some()
    }

    /// Open a new parameterized unit; subsequent `param` calls attach to it.
    pub fn begin_unit(&mut self, name: &str) -> usize {
        self.units.push(UnitMeta {
            name: name.to_string(),
            params: Vec::new(),
        });
        self.units.len() - 1
    }

    fn fetch(&mut self, name: &str, shape: &[usize]) -> Result<Option<Tensor>> {
        let Some((path, weights)) = &self.weights else {
            return Ok(None);
        };
        match weights.get(name) {
            Some(t) => {
                if t.dims() != shape {
                    return Err(NnError::WeightShape {
                        path: path.clone(),
                        name: name.to_string(),
                        expected: shape.to_vec(),
                        actual: t.dims().to_vec(),
                    });
                }
                Ok(Some(t.to_dtype(DType::F32)?))
            }
            None => Ok(None),
        }
    }

    /// A trainable-capable parameter attached to the current unit.
    ///
    /// `required` parameters must exist in a provided weights file (backbone
    /// weights); optional ones (the head, when loading backbone-only files)
    /// fall back to `init`.
    pub fn param(&mut self, name: &str, shape: &[usize], init: Init, required: bool) -> Result<Var> {
        let tensor = match self.fetch(name, shape)? {
            Some(t) => t,
            None => {
                if required {
                    if let Some((path, _)) = &self.weights {
                        return Err(NnError::MissingWeight {
                            path: path.clone(),
                            name: name.to_string(),
                            shape: shape.to_vec(),
                        });
                    }
                }
                let len = shape.iter().product();
                Tensor::from_vec(draw(init, len, &mut self.rng), shape, &self.device)?
            }
        };
        let var = Var::from_tensor(&tensor)?;
        let index = self.params.len();
        self.params.push((name.to_string(), var.clone()));
        self.units
            .last_mut()
            .expect("param called before begin_unit")
            .params
            .push(index);
        Ok(var)
    }

    /// A non-trainable buffer (batch-norm running statistics).
    pub fn buffer(&mut self, name: &str, shape: &[usize], default: f32) -> Result<Tensor> {
        let tensor = match self.fetch(name, shape)? {
            Some(t) => t,
            None => {
                if self.weights.is_some() {
                    // buffers are required whenever a weights file is used
                    let (path, _) = self.weights.as_ref().unwrap();
                    return Err(NnError::MissingWeight {
                        path: path.clone(),
                        name: name.to_string(),
                        shape: shape.to_vec(),
                    });
                }
                let len = shape.iter().product();
                Tensor::from_vec(vec![default; len], shape, &self.device)?
            }
        };
        self.buffers.push((name.to_string(), tensor.clone()));
        Ok(tensor)
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// Vars of units in `range`, in parameter order.
    pub fn vars_in_units(&self, range: std::ops::Range<usize>) -> Vec<Var> {
        self.units[range]
            .iter()
            .flat_map(|u| u.params.iter().map(|&i| self.params[i].1.clone()))
            .collect()
    }

    /// SHA-256 over the named values of units in `range`.
    pub fn checksum_units(&self, range: std::ops::Range<usize>) -> Result<String> {
        let mut hasher = Sha256::new();
        for unit in &self.units[range] {
            for &i in &unit.params {
                let (name, var) = &self.params[i];
                hasher.update(name.as_bytes());
                let values = var.as_tensor().flatten_all()?.to_vec1::<f32>()?;
                for v in values {
                    hasher.update(v.to_le_bytes());
                }
            }
        }
        Ok(format!("{:x}", hasher.finalize()))
    }

    /// Everything (parameters and buffers) as a name -> tensor map.
    pub fn state_dict(&self) -> HashMap<String, Tensor> {
        let mut map: HashMap<String, Tensor> = self
            .params
            .iter()
            .map(|(n, v)| (n.clone(), v.as_tensor().clone()))
            .collect();
        for (n, t) in &self.buffers {
            map.insert(n.clone(), t.clone());
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_streams_differ_by_context() {
        assert_ne!(fnv1a64(&["a", "b"]), fnv1a64(&["ab"]));
        assert_ne!(fnv1a64(&["init"]), fnv1a64(&["shuffle"]));
    }

    #[test]
    fn same_seed_draws_identical_parameters() {
        let device = Device::Cpu;
        let mut a = ParamStore::new(device.clone(), 7);
        a.begin_unit("u");
        let va = a
            .param("w", &[4, 4], Init::KaimingNormal { fan_out: 16 }, false)
            .unwrap();
        let mut b = ParamStore::new(device, 7);
        b.begin_unit("u");
        let vb = b
            .param("w", &[4, 4], Init::KaimingNormal { fan_out: 16 }, false)
            .unwrap();
        assert_eq!(
            va.as_tensor().flatten_all().unwrap().to_vec1::<f32>().unwrap(),
            vb.as_tensor().flatten_all().unwrap().to_vec1::<f32>().unwrap()
        );
        assert_eq!(
            a.checksum_units(0..1).unwrap(),
            b.checksum_units(0..1).unwrap()
        );
    }
}
