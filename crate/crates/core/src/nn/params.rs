//! Flat registry of trainable arrays with one gradient slot per array.

use crate::rng::{seeded, uniform, SeededRng};
use crate::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ParamStore {
    params: Vec<Param>,
    rng: SeededRng,
    seed: u64,
}

impl PartialEq for ParamStore {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        ParamStore {
            params: Vec::new(),
            rng: seeded(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Register a `rows×cols` array drawn from `U(−1/√fan_in, 1/√fan_in)`.
    pub fn add_uniform(&mut self, name: &str, rows: usize, cols: usize, fan_in: usize) -> ParamId {
        let bound = 1.0 / crate::math::sqrt(fan_in.max(1) as f64);
        let value = (0..rows * cols).map(|_| uniform(&mut self.rng, -bound, bound)).collect();
        self.push(name, rows, cols, value)
    }

    pub fn add_const(&mut self, name: &str, rows: usize, cols: usize, value: f64) -> ParamId {
        self.push(name, rows, cols, vec![value; rows * cols])
    }

    fn push(&mut self, name: &str, rows: usize, cols: usize, value: Vec<f64>) -> ParamId {
        debug_assert!(self.find(name).is_none(), "duplicate parameter {name}");
        self.params.push(Param {
            name: String::from(name),
            rows,
            cols,
            grad: vec![0.0; value.len()],
            value,
        });
        ParamId(self.params.len() - 1)
    }

    #[inline]
    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].value
    }

    #[inline]
    pub fn value_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.params[id.0].value
    }

    #[inline]
    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].grad
    }

    #[inline]
    pub fn grad_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.params[id.0].grad
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn scale_grads(&mut self, s: f64) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g *= s);
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.grad.iter().copied()).collect()
    }

    pub fn set_flat_values(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::shape(
                "ParamStore::set_flat_values",
                format!("{}", self.param_count()),
                format!("{}", flat.len()),
            ));
        }
        let mut off = 0;
        for p in &mut self.params {
            let n = p.value.len();
            p.value.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Mutable access to the scalar at flat position `idx`.
    pub fn flat_value_mut(&mut self, mut idx: usize) -> &mut f64 {
        for p in &mut self.params {
            if idx < p.value.len() {
                return &mut p.value[idx];
            }
            idx -= p.value.len();
        }
        panic!("flat parameter index out of range");
    }

    /// Replace a parameter's values by name, checking the shape.
    pub fn load(&mut self, name: &str, rows: usize, cols: usize, value: Vec<f64>) -> Result<()> {
        let id = self
            .find(name)
            .ok_or_else(|| Error::invalid(format!("unknown parameter {name}")))?;
        let p = &mut self.params[id.0];
        if (p.rows, p.cols) != (rows, cols) || value.len() != rows * cols {
            return Err(Error::shape(
                "ParamStore::load",
                format!("{name} {}x{}", p.rows, p.cols),
                format!("{rows}x{cols} with {} values", value.len()),
            ));
        }
        p.value = value;
        Ok(())
    }
}
