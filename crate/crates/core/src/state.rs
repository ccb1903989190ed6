use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};

/// A finite point in state space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "state vector must have at least one component",
            ));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteState { t: f64::NAN });
        }
        Ok(Self(components))
    }

    pub fn from_slice(components: &[f64]) -> Result<Self> {
        Self::new(components.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        Self(alloc::vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Interprets a two-dimensional state as a plane point.
    pub fn to_point(&self) -> Option<[f64; 2]> {
        match self.0.as_slice() {
            [a, b] => Some([*a, *b]),
            _ => None,
        }
    }
}

impl Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<[f64; 2]> for StateVector {
    fn from(p: [f64; 2]) -> Self {
        Self(p.to_vec())
    }
}
