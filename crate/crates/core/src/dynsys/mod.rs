//! Dynamical-system abstraction and adaptive integration in both time
//! directions.
//!
//! Reverse-time solutions are produced by stepping with negative `h` over
//! true clock time, so time-varying modes are evaluated at the historical
//! instant they describe.

mod rk;
mod schedule;

use alloc::string::String;
use alloc::vec::Vec;

pub use schedule::{ModeSchedule, Segment};

use crate::error::{Error, Result};
use crate::linstab::SquareMatrix;
use crate::math::wrap_into;
use crate::state::StateVector;
pub(crate) use rk::{drive, Flow};

/// Name and parameter listing of a model, for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDescriptor {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
}

/// A vector field `f(t, x)` whose form depends on the active mode.
///
/// Implementations must be deterministic and free of side effects; the
/// same model is evaluated concurrently from many workers.
pub trait SystemModel: Sync {
    type Mode: Sync;

    fn dimension(&self) -> usize;

    fn descriptor(&self) -> ModelDescriptor;

    /// Writes `f(t, x)` under `mode` into `dx`.
    fn eval(&self, t: f64, x: &[f64], mode: &Self::Mode, dx: &mut [f64]) -> Result<()>;

    /// Closed-form Jacobian, when the model provides one.
    fn analytic_jacobian(&self, _t: f64, _x: &[f64], _mode: &Self::Mode) -> Option<SquareMatrix> {
        None
    }

    /// Evaluates with the right-continuous mode of `schedule` at `t`.
    fn eval_scheduled(
        &self,
        t: f64,
        x: &[f64],
        schedule: &ModeSchedule<Self::Mode>,
        dx: &mut [f64],
    ) -> Result<()> {
        self.eval(t, x, &schedule.segment_at(t).mode, dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Time-stamped states of one solution curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    data: Vec<f64>,
    mode_ids: Vec<u32>,
    direction: Direction,
}

impl Trajectory {
    pub fn new(dim: usize, times: Vec<f64>, data: Vec<f64>, mode_ids: Vec<u32>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::EmptyTrajectory);
        }
        if data.len() != times.len() * dim || mode_ids.len() != times.len() {
            return Err(Error::InvalidArgument(
                "trajectory columns have different lengths",
            ));
        }
        let direction = if times[1] > times[0] {
            Direction::Forward
        } else {
            Direction::Reverse
        };
        let monotone = times.windows(2).all(|w| match direction {
            Direction::Forward => w[1] > w[0],
            Direction::Reverse => w[1] < w[0],
        });
        if !monotone {
            return Err(Error::InvalidArgument(
                "trajectory times must be strictly monotone",
            ));
        }
        Ok(Self {
            dim,
            times,
            data,
            mode_ids,
            direction,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mode_ids(&self) -> &[u32] {
        &self.mode_ids
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn first_state(&self) -> &[f64] {
        self.state(0)
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn final_time(&self) -> f64 {
        self.times[self.len() - 1]
    }
}

/// Tolerances and step limits for the adaptive Runge-Kutta solver.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-7,
            atol: 1e-9,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 2_000_000,
        }
    }
}

impl IntegrationOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("max_step must be positive"));
        }
        if let Some(h) = self.initial_step {
            if !(h.abs() > 0.0) || !h.is_finite() {
                return Err(Error::InvalidArgument(
                    "initial_step must be finite and non-zero",
                ));
            }
        }
        Ok(())
    }
}

struct Recorder<'a, M> {
    dim: usize,
    schedule: &'a ModeSchedule<M>,
    times: Vec<f64>,
    data: Vec<f64>,
    mode_ids: Vec<u32>,
}

impl<'a, M> Recorder<'a, M> {
    fn new(dim: usize, schedule: &'a ModeSchedule<M>) -> Self {
        Self {
            dim,
            schedule,
            times: Vec::new(),
            data: Vec::new(),
            mode_ids: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.data.extend_from_slice(x);
        self.mode_ids.push(self.schedule.segment_at(t).mode_id);
    }

    fn finish(self) -> Result<Trajectory> {
        Trajectory::new(self.dim, self.times, self.data, self.mode_ids)
    }
}

/// Solves from `(t0, x0)` to `t1`, recording every accepted step.
/// `t1 < t0` integrates backwards in time.
pub fn integrate<S: SystemModel>(
    model: &S,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    schedule: &ModeSchedule<S::Mode>,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(model.dimension(), schedule);
    rec.push(t0, x0.as_slice());
    drive(
        model,
        schedule,
        x0.as_slice(),
        t0,
        t1,
        &[],
        opts,
        &mut |t, x| {
            rec.push(t, x);
            Flow::Continue
        },
    )?;
    rec.finish()
}

/// Solves from `(t0, x0)` to `t1` and returns only the end state.
pub fn propagate<S: SystemModel>(
    model: &S,
    x0: &[f64],
    t0: f64,
    t1: f64,
    schedule: &ModeSchedule<S::Mode>,
    opts: &IntegrationOptions,
) -> Result<Vec<f64>> {
    if t0 == t1 {
        return Err(Error::EmptyInterval);
    }
    let (_, x) = drive(model, schedule, x0, t0, t1, &[], opts, &mut |_, _| {
        Flow::Continue
    })?;
    Ok(x)
}

/// Solves from `(t0, x0)` to `t1` and reports the state at `t0 + k * dt_out`
/// (and at `t1`). Output times are step boundaries, not interpolants.
pub fn integrate_sampled<S: SystemModel>(
    model: &S,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    dt_out: f64,
    schedule: &ModeSchedule<S::Mode>,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    if !(dt_out > 0.0) || !dt_out.is_finite() {
        return Err(Error::InvalidArgument("dt_out must be positive"));
    }
    if t0 == t1 {
        return Err(Error::EmptyInterval);
    }
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let count = (span / dt_out + 1e-9) as usize;
    let mut outputs: Vec<f64> = (1..=count).map(|k| t0 + dir * k as f64 * dt_out).collect();
    outputs.retain(|&s| (t1 - s) * dir > 1e-12 * span);
    outputs.push(t1);

    let mut rec = Recorder::new(model.dimension(), schedule);
    rec.push(t0, x0.as_slice());
    let mut next = 0usize;
    drive(
        model,
        schedule,
        x0.as_slice(),
        t0,
        t1,
        &outputs,
        opts,
        &mut |t, x| {
            if next < outputs.len() && t == outputs[next] {
                rec.push(t, x);
                next += 1;
            }
            Flow::Continue
        },
    )?;
    rec.finish()
}

/// Box-shaped tolerance band around a target state.
#[derive(Debug, Clone, PartialEq)]
pub struct SettlingBand {
    pub target: Vec<f64>,
    pub half_widths: Vec<f64>,
    /// Angular components as `(index, period)`; distances wrap.
    pub wrap_dims: Vec<(usize, f64)>,
    /// Time the state must stay inside the band.
    pub dwell: f64,
    /// Deviation (max-norm) treated as divergence; integration stops.
    pub divergence_bound: f64,
}

impl SettlingBand {
    pub fn new(target: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        if target.len() != half_widths.len() {
            return Err(Error::DimensionMismatch {
                expected: target.len(),
                found: half_widths.len(),
            });
        }
        if half_widths.iter().any(|h| !(*h > 0.0)) || target.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("band half-widths must be positive"));
        }
        Ok(Self {
            target,
            half_widths,
            wrap_dims: Vec::new(),
            dwell: 0.5,
            divergence_bound: 1e6,
        })
    }

    pub fn with_wrap(mut self, wrap_dims: Vec<(usize, f64)>) -> Self {
        self.wrap_dims = wrap_dims;
        self
    }

    pub fn with_dwell(mut self, dwell: f64) -> Self {
        self.dwell = dwell;
        self
    }

    fn deviation(&self, i: usize, x: f64) -> f64 {
        let d = x - self.target[i];
        match self.wrap_dims.iter().find(|(k, _)| *k == i) {
            Some(&(_, period)) => wrap_into(d, -0.5 * period, period),
            None => d,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &xi)| self.deviation(i, xi).abs() <= self.half_widths[i])
    }

    fn diverged(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .any(|(i, &xi)| (xi - self.target[i]).abs() > self.divergence_bound)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettleOutcome {
    pub settled: bool,
    /// Start of the final entry into the band (meaningful when settled).
    pub t_settle: f64,
    pub trajectory: Trajectory,
}

/// Forward solve that stops once the state has stayed inside `band` for
/// `band.dwell` seconds, or at `t_max`.
pub fn integrate_until_settled<S: SystemModel>(
    model: &S,
    x0: &StateVector,
    t0: f64,
    band: &SettlingBand,
    t_max: f64,
    schedule: &ModeSchedule<S::Mode>,
    opts: &IntegrationOptions,
) -> Result<SettleOutcome> {
    if band.target.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            found: band.target.len(),
        });
    }
    if !(t_max > t0) {
        return Err(if t_max == t0 {
            Error::EmptyInterval
        } else {
            Error::InvalidArgument("settling detection runs forward in time")
        });
    }
    // Cap the step so an excursion out of the band cannot hide between steps.
    let mut opts = opts.clone();
    if band.dwell > 0.0 {
        opts.max_step = opts.max_step.min(band.dwell / 20.0);
    }

    let mut rec = Recorder::new(model.dimension(), schedule);
    rec.push(t0, x0.as_slice());
    let mut entry = if band.contains(x0.as_slice()) {
        Some(t0)
    } else {
        None
    };
    let mut settled = false;
    drive(
        model,
        schedule,
        x0.as_slice(),
        t0,
        t_max,
        &[],
        &opts,
        &mut |t, x| {
            rec.push(t, x);
            if band.contains(x) {
                let e = *entry.get_or_insert(t);
                if t - e >= band.dwell {
                    settled = true;
                    return Flow::Stop;
                }
            } else {
                entry = None;
                if band.diverged(x) {
                    return Flow::Stop;
                }
            }
            Flow::Continue
        },
    )?;
    let trajectory = rec.finish()?;
    let t_settle = if settled { entry.unwrap_or(t0) } else { t_max };
    Ok(SettleOutcome {
        settled,
        t_settle,
        trajectory,
    })
}
