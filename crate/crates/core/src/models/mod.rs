//! Concrete systems: the reversed Van der Pol benchmark, plain linear
//! systems, and the reduced-order wind-turbine PLL swing model.

mod linear;
mod vdp;
mod wt;

pub use linear::LinearSystem;
pub use vdp::VanDerPolReversed;
pub use wt::{
    wt_ramp_schedule, CurrentProfile, FaultSpec, WtBase, WtMode, WtParams, WtSwingModel,
    MODE_FAULT, MODE_RAMP, MODE_STEADY,
};
