use alloc::string::ToString;
use alloc::vec::Vec;

use crate::dynsys::{ModelDescriptor, SystemModel};
use crate::error::Result;

/// `x1' = -x2`, `x2' = x1 - x2 (1 - x1^2)`.
///
/// The origin is a stable focus whose region of attraction is bounded by
/// an unstable limit cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VanDerPolReversed;

impl SystemModel for VanDerPolReversed {
    type Mode = ();

    fn dimension(&self) -> usize {
        2
    }

    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            name: "van-der-pol-reversed".to_string(),
            parameters: Vec::new(),
        }
    }

    fn eval(&self, _t: f64, x: &[f64], _mode: &(), dx: &mut [f64]) -> Result<()> {
        dx[0] = -x[1];
        dx[1] = x[0] - x[1] * (1.0 - x[0] * x[0]);
        Ok(())
    }
}
