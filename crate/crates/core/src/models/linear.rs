use alloc::format;
use alloc::string::ToString;

use crate::dynsys::{ModelDescriptor, SystemModel};
use crate::error::Result;
use crate::linstab::SquareMatrix;

/// `x' = M x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    m: SquareMatrix,
    analytic: bool,
}

impl LinearSystem {
    pub fn new(m: SquareMatrix) -> Self {
        Self { m, analytic: true }
    }

    /// Forces Jacobian queries through finite differences.
    pub fn without_analytic_jacobian(mut self) -> Self {
        self.analytic = false;
        self
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.m
    }
}

impl SystemModel for LinearSystem {
    type Mode = ();

    fn dimension(&self) -> usize {
        self.m.n()
    }

    fn descriptor(&self) -> ModelDescriptor {
        let n = self.m.n();
        let parameters = (0..n * n)
            .map(|k| (format!("m{}{}", k / n, k % n), self.m.get(k / n, k % n)))
            .collect();
        ModelDescriptor {
            name: "linear".to_string(),
            parameters,
        }
    }

    fn eval(&self, _t: f64, x: &[f64], _mode: &(), dx: &mut [f64]) -> Result<()> {
        let n = self.m.n();
        for (i, d) in dx.iter_mut().enumerate().take(n) {
            *d = (0..n).map(|j| self.m.get(i, j) * x[j]).sum();
        }
        Ok(())
    }

    fn analytic_jacobian(&self, _t: f64, _x: &[f64], _mode: &()) -> Option<SquareMatrix> {
        self.analytic.then(|| self.m.clone())
    }
}
