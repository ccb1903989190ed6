//! Fault-on simulation, the clearance jump, and clearing-time windows.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynsys::{
    drive, integrate_sampled, integrate_until_settled, propagate, Flow, IntegrationOptions,
    ModeSchedule, SettlingBand, Trajectory,
};
use crate::error::{Error, Result};
use crate::math::TAU;
use crate::models::{wt_ramp_schedule, FaultSpec, WtMode, WtSwingModel, MODE_FAULT};
use crate::roa::{BoundaryPolygon, Point};
use crate::state::StateVector;

/// How the PLL state changes when the fault is cleared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpMap {
    /// Angle and PI-integrator state are continuous; frequency steps with
    /// the proportional path, `omega+ = omega- + k_p dv_q`.
    #[default]
    Srf,
    /// No jump.
    Identity,
}

/// Post-clearance state for a fault-on state `x` at clock time `t`.
///
/// `v_q` depends on `omega` through the speed voltage, so the Srf map is
/// solved in closed form from `omega+ M+ = omega- M- + k_p dS`.
pub fn apply_clearance_jump(
    model: &WtSwingModel,
    x: Point,
    t: f64,
    before: &WtMode,
    after: &WtMode,
    map: JumpMap,
) -> Result<Point> {
    match map {
        JumpMap::Identity => Ok(x),
        JumpMap::Srf => {
            let kp = model.params().k_p;
            let lo = model.terms(t, before);
            let hi = model.terms(t, after);
            if !(hi.v_g > 0.0) {
                return Err(Error::InvalidArgument(
                    "post-clearance grid voltage must be positive",
                ));
            }
            if hi.mass.abs() <= 1e-6 {
                return Err(Error::SingularModel {
                    t,
                    reason: "M_eq = 1 - k_p L_g i_d vanishes",
                });
            }
            let p = [x[0], 0.0];
            let ds = model.pll_q_voltage(t, &p, after) - model.pll_q_voltage(t, &p, before);
            let omega = (x[1] * lo.mass + kp * ds) / hi.mass;
            Ok([x[0], omega])
        }
    }
}

fn fault_schedule(model: &WtSwingModel) -> ModeSchedule<WtMode> {
    ModeSchedule::constant_with_id(MODE_FAULT, model.fault_mode())
}

/// Time for the fault-on angle to move `revolutions` full turns away from
/// the pre-fault equilibrium, or `t_cap` if it never does.
pub fn revolution_horizon(
    model: &WtSwingModel,
    revolutions: f64,
    t_cap: f64,
    opts: &IntegrationOptions,
) -> Result<f64> {
    if !(revolutions > 0.0) || !(t_cap > 0.0) {
        return Err(Error::InvalidArgument(
            "revolutions and t_cap must be positive",
        ));
    }
    let x0 = model.equilibrium(&model.pre_fault_mode())?;
    let d0 = x0[0];
    let limit = revolutions * TAU;
    let mut hit = None;
    drive(
        model,
        &fault_schedule(model),
        x0.as_slice(),
        0.0,
        t_cap,
        &[],
        opts,
        &mut |t, x| {
            if (x[0] - d0).abs() >= limit {
                hit = Some(t);
                Flow::Stop
            } else {
                Flow::Continue
            }
        },
    )?;
    Ok(hit.unwrap_or(t_cap))
}

/// Fault-on trajectory from the pre-fault equilibrium, sampled every `dt_out`.
pub fn simulate_fault(
    model: &WtSwingModel,
    fault: &FaultSpec,
    t_max: f64,
    dt_out: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    if ![fault.v_g, fault.i_d, fault.i_q]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::InvalidArgument("fault spec must be finite"));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument("t_max must be positive"));
    }
    let mut params = *model.params();
    params.fault = *fault;
    let model = WtSwingModel::new(params)?;
    let x0 = model.equilibrium(&model.pre_fault_mode())?;
    integrate_sampled(
        &model,
        &x0,
        0.0,
        t_max,
        dt_out,
        &fault_schedule(&model),
        opts,
    )
}

/// Fault-on curve together with the state just after clearance at every
/// sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpedTrajectory {
    pub base: Trajectory,
    pub jumped: Vec<Point>,
    pub map: JumpMap,
}

impl JumpedTrajectory {
    pub fn new(model: &WtSwingModel, base: Trajectory, map: JumpMap) -> Result<Self> {
        if base.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: base.dim(),
            });
        }
        let before = model.fault_mode();
        let jumped = base
            .times()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let x = base.state(i);
                apply_clearance_jump(model, [x[0], x[1]], t, &before, &model.ramp_mode(t), map)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { base, jumped, map })
    }

    pub fn times(&self) -> &[f64] {
        self.base.times()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CctWindow {
    pub t_open: f64,
    pub t_close: f64,
    pub stable: bool,
}

impl CctWindow {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_open + self.t_close)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CctReport {
    pub windows: Vec<CctWindow>,
    pub ramp_rate: f64,
    pub fault: FaultSpec,
    /// Per-sample containment of the jumped state.
    pub inside: Vec<bool>,
}

impl CctReport {
    pub fn stable_windows(&self) -> impl Iterator<Item = &CctWindow> {
        self.windows.iter().filter(|w| w.stable)
    }
}

/// Clearing-time resolution of window edges.
pub const EDGE_RESOLUTION: f64 = 1e-4;

/// Splits the fault horizon into maximal runs of equal stability, where a
/// clearance is stable if its jumped state lies inside `polygon`. Edges are
/// refined by bisection on the clearance time, re-simulating the fault-on
/// state at each candidate.
pub fn find_cct_windows(
    model: &WtSwingModel,
    jt: &JumpedTrajectory,
    polygon: &BoundaryPolygon,
    opts: &IntegrationOptions,
) -> Result<CctReport> {
    let times = jt.times();
    if times.is_empty() || jt.jumped.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let inside: Vec<bool> = jt.jumped.iter().map(|p| polygon.contains(*p)).collect();
    let schedule = fault_schedule(model);
    let before = model.fault_mode();
    let classify = |i: usize, t: f64| -> Result<bool> {
        let x = if t == times[i] {
            jt.base.state(i).to_vec()
        } else {
            propagate(model, jt.base.state(i), times[i], t, &schedule, opts)?
        };
        let p = apply_clearance_jump(model, [x[0], x[1]], t, &before, &model.ramp_mode(t), jt.map)?;
        Ok(polygon.contains(p))
    };

    let mut windows = Vec::new();
    let mut open = times[0];
    for i in 1..times.len() {
        if inside[i] == inside[i - 1] {
            continue;
        }
        let (mut lo, mut hi) = (times[i - 1], times[i]);
        let state_lo = inside[i - 1];
        while hi - lo > EDGE_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if classify(i - 1, mid)? == state_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let edge = 0.5 * (lo + hi);
        windows.push(CctWindow {
            t_open: open,
            t_close: edge,
            stable: state_lo,
        });
        open = edge;
    }
    windows.push(CctWindow {
        t_open: open,
        t_close: jt.base.final_time(),
        stable: inside[inside.len() - 1],
    });
    Ok(CctReport {
        windows,
        ramp_rate: model.params().ramp_rate,
        fault: model.params().fault,
        inside,
    })
}

/// Full forward run for one clearing time: fault until `t_clear`, jump,
/// ramp and steady operation, then a settling check against `band` up to
/// `t_max`.
pub fn verify_window_by_simulation(
    model: &WtSwingModel,
    t_clear: f64,
    map: JumpMap,
    band: &SettlingBand,
    t_max: f64,
    opts: &IntegrationOptions,
) -> Result<bool> {
    if !(t_clear >= 0.0) || !(t_max > t_clear) {
        return Err(Error::InvalidArgument("need 0 <= t_clear < t_max"));
    }
    let x0 = model.equilibrium(&model.pre_fault_mode())?;
    let minus = if t_clear > 0.0 {
        propagate(
            model,
            x0.as_slice(),
            0.0,
            t_clear,
            &fault_schedule(model),
            opts,
        )?
    } else {
        x0.into_inner()
    };
    // Instant clearance leaves the pre-fault state untouched.
    let before = if t_clear > 0.0 {
        model.fault_mode()
    } else {
        model.ramp_mode(0.0)
    };
    let plus = apply_clearance_jump(
        model,
        [minus[0], minus[1]],
        t_clear,
        &before,
        &model.ramp_mode(t_clear),
        map,
    )?;
    let schedule = wt_ramp_schedule(model, t_clear)?;
    let out = integrate_until_settled(
        model,
        &StateVector::from(plus),
        t_clear,
        band,
        t_max,
        &schedule,
        opts,
    )?;
    Ok(out.settled)
}

/// Settling band around the steady equilibrium with the given half-widths,
/// angle wrapped.
pub fn steady_band(
    model: &WtSwingModel,
    half_widths: [f64; 2],
    dwell: f64,
) -> Result<SettlingBand> {
    let eq = model.equilibrium(&model.steady_mode())?;
    Ok(
        SettlingBand::new(eq.into_inner(), vec![half_widths[0], half_widths[1]])?
            .with_wrap(vec![(0, TAU)])
            .with_dwell(dwell),
    )
}
