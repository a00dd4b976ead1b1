use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{self, domain, Error, Result};

/// Row-major array of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn uniform<R: Rng>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: (0..n).map(|_| rng.gen_range(-bound..=bound)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row count and row width of a matrix; vectors are one row.
    pub fn dims(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            _ => (1, self.data.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

/// Named parameter arrays in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> Result<ParamId> {
        if self.id(name).is_some() {
            return Err(domain(format!("parameter {name:?} registered twice")));
        }
        if tensor.shape.iter().product::<usize>() != tensor.data.len() {
            return Err(domain(format!("parameter {name:?} has inconsistent shape")));
        }
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        Ok(ParamId(self.tensors.len() - 1))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// Looks up a parameter and checks its shape.
    pub fn expect(&self, name: &str, shape: &[usize]) -> Result<ParamId> {
        let id = self
            .id(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name:?}")))?;
        if self.get(id).shape != shape {
            return Err(Error::Checkpoint(format!(
                "parameter {name:?} has shape {:?}, expected {shape:?}",
                self.get(id).shape
            )));
        }
        Ok(id)
    }
}

/// Gradient buffers laid out like a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    buffers: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            buffers: store.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.buffers[id.0]
    }

    pub(crate) fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.buffers[id.0]
    }

    pub fn all_finite(&self) -> bool {
        self.buffers.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.buffers.iter_mut().zip(&other.buffers) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.buffers.iter_mut().flatten().for_each(|x| *x *= factor);
    }

    pub fn is_zero(&self) -> bool {
        self.buffers.iter().all(|b| b.iter().all(|&x| x == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.buffers
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(store: &ParamStore, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = store.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, tensor) in store.tensors.iter_mut().enumerate() {
            let g = &grads.buffers[k];
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for i in 0..tensor.data.len() {
                if g[i] == 0.0 && m[i] == 0.0 && v[i] == 0.0 {
                    continue;
                }
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                tensor.data[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// On-disk parameter snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub d: usize,
    pub vocab_hash: String,
    pub params: BTreeMap<String, Tensor>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore, d: usize, vocab_hash: &str) -> Self {
        Checkpoint {
            d,
            vocab_hash: vocab_hash.to_string(),
            params: store
                .iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect(),
        }
    }

    /// Parameters in name order.
    pub fn to_store(&self) -> Result<ParamStore> {
        let mut store = ParamStore::new();
        for (name, tensor) in &self.params {
            store.add(name, tensor.clone())?;
        }
        Ok(store)
    }

    pub fn check_vocab(&self, vocab_hash: &str) -> Result<()> {
        if self.vocab_hash != vocab_hash {
            return Err(Error::Checkpoint(format!(
                "checkpoint vocabulary {} does not match corpus vocabulary {}",
                self.vocab_hash, vocab_hash
            )));
        }
        Ok(())
    }

    pub fn to_writer<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(error::create(path)?);
        self.to_writer(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = std::io::BufReader::new(error::open(path)?);
        let checkpoint: Checkpoint = serde_json::from_reader(reader)?;
        for (name, t) in &checkpoint.params {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::Checkpoint(format!(
                    "{name:?} has inconsistent shape"
                )));
            }
            if !t.data.iter().all(|x| x.is_finite()) {
                return Err(Error::Checkpoint(format!(
                    "{name:?} has non-finite entries"
                )));
            }
        }
        Ok(checkpoint)
    }
}
