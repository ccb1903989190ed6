//! Embedded Dormand-Prince 5(4) stepping with schedule breakpoints.

use alloc::vec;
use alloc::vec::Vec;

use super::{IntegrationOptions, ModeSchedule, SystemModel};
use crate::error::{Error, Result};
use crate::math::{powf, sqrt};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus the embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn sq(v: f64) -> f64 {
    v * v
}

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

pub(crate) enum Flow {
    Continue,
    Stop,
}

struct Work {
    k: [Vec<f64>; 7],
    y: Vec<f64>,
    tmp: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k: core::array::from_fn(|_| vec![0.0; n]),
            y: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn err_norm(opts: &IntegrationOptions, x: &[f64], y: &[f64], err: impl Fn(usize) -> f64) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let sc = opts.atol + opts.rtol * x[i].abs().max(y[i].abs());
        let e = err(i) / sc;
        acc += e * e;
    }
    sqrt(acc / n as f64)
}

#[allow(clippy::too_many_arguments)]
fn initial_step<S: SystemModel>(
    model: &S,
    mode: &S::Mode,
    t: f64,
    x: &[f64],
    f0: &[f64],
    dir: f64,
    opts: &IntegrationOptions,
    work: &mut [f64],
) -> Result<f64> {
    let n = x.len();
    let scale = |i: usize| opts.atol + opts.rtol * x[i].abs();
    let d0 = sqrt((0..n).map(|i| sq(x[i] / scale(i))).sum::<f64>() / n as f64);
    let d1 = sqrt((0..n).map(|i| sq(f0[i] / scale(i))).sum::<f64>() / n as f64);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let x1: Vec<f64> = (0..n).map(|i| x[i] + dir * h0 * f0[i]).collect();
    model.eval(t + dir * h0, &x1, mode, work)?;
    if !all_finite(work) {
        return Ok(h0.min(opts.max_step));
    }
    let d2 = sqrt(
        (0..n)
            .map(|i| sq((work[i] - f0[i]) / scale(i)))
            .sum::<f64>()
            / n as f64,
    ) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        powf(0.01 / d1.max(d2), 1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(opts.max_step))
}

/// Integrates from `t0` to `t1`, landing exactly on every schedule switch
/// and on every time in `stops`. `on_step` sees each accepted step.
#[allow(clippy::too_many_arguments)]
pub(crate) fn drive<S: SystemModel>(
    model: &S,
    schedule: &ModeSchedule<S::Mode>,
    x0: &[f64],
    t0: f64,
    t1: f64,
    stops: &[f64],
    opts: &IntegrationOptions,
    on_step: &mut dyn FnMut(f64, &[f64]) -> Flow,
) -> Result<(f64, Vec<f64>)> {
    if !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidArgument("integration bounds must be finite"));
    }
    if t0 == t1 {
        return Err(Error::EmptyInterval);
    }
    let n = model.dimension();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    if !all_finite(x0) {
        return Err(Error::NonFiniteState { t: t0 });
    }
    opts.validate()?;
    let dir = if t1 > t0 { 1.0 } else { -1.0 };

    let mut targets = schedule.breakpoints_between(t0, t1);
    targets.extend(
        stops
            .iter()
            .copied()
            .filter(|&s| (s - t0) * dir > 0.0 && (t1 - s) * dir > 0.0),
    );
    targets.sort_by(|a, b| {
        (dir * a)
            .partial_cmp(&(dir * b))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    targets.dedup();
    targets.push(t1);

    let mut w = Work::new(n);
    let mut t = t0;
    let mut x = x0.to_vec();
    let mut h = opts.initial_step.map(|h| h.abs().min(opts.max_step));
    let mut steps = 0usize;

    for &b in &targets {
        let seg = schedule.segment_for_interval(t, b);
        let mode = &seg.mode;
        model.eval(t, &x, mode, &mut w.k[0])?;
        if !all_finite(&w.k[0]) {
            return Err(Error::NonFiniteState { t });
        }
        let mut hh = match h {
            Some(h) => h,
            None => {
                let f0 = w.k[0].clone();
                initial_step(model, mode, t, &x, &f0, dir, opts, &mut w.tmp)?
            }
        };

        while t != b {
            let remaining = (b - t).abs();
            let mut step = hh.min(opts.max_step);
            let landing = step >= remaining || remaining - step <= 1e-12 * remaining.max(t.abs());
            if landing {
                step = remaining;
            }
            let min_step = 1e-13 * t.abs().max(1.0);
            if step < min_step && !landing {
                return Err(Error::StepFailure { t, h: step });
            }
            let hs = dir * step;

            let err = try_step(model, mode, t, &x, hs, opts, &mut w)?;
            match err {
                Some(e) if e <= 1.0 => {
                    t = if landing { b } else { t + hs };
                    core::mem::swap(&mut x, &mut w.y);
                    // FSAL: the last stage is the derivative at the new point.
                    let (first, rest) = w.k.split_at_mut(1);
                    first[0].copy_from_slice(&rest[5]);
                    let fac = if e == 0.0 {
                        FAC_MAX
                    } else {
                        (SAFETY * powf(e, -0.2)).clamp(FAC_MIN, FAC_MAX)
                    };
                    // Landing steps are clipped; don't let them shrink the next step.
                    hh = if landing {
                        hh.max(step * fac)
                    } else {
                        step * fac
                    };
                    steps += 1;
                    if steps > opts.max_steps {
                        return Err(Error::StepFailure { t, h: step });
                    }
                    if let Flow::Stop = on_step(t, &x) {
                        return Ok((t, x));
                    }
                }
                Some(e) => {
                    hh = step * (SAFETY * powf(e, -0.2)).clamp(FAC_MIN, 1.0);
                }
                None => {
                    hh = step * 0.1;
                }
            }
            if hh < min_step && t != b {
                return Err(if err.is_none() {
                    Error::NonFiniteState { t }
                } else {
                    Error::StepFailure { t, h: hh }
                });
            }
        }
        h = Some(hh);
    }
    Ok((t, x))
}

/// One trial step of size `h` (signed). Leaves the 5th-order solution in
/// `w.y` and the FSAL derivative in `w.k[6]`; returns the scaled error, or
/// `None` if any stage was non-finite.
fn try_step<S: SystemModel>(
    model: &S,
    mode: &S::Mode,
    t: f64,
    x: &[f64],
    h: f64,
    opts: &IntegrationOptions,
    w: &mut Work,
) -> Result<Option<f64>> {
    let n = x.len();
    let Work { k, y, tmp } = w;
    let [k1, k2, k3, k4, k5, k6, k7] = k;

    for i in 0..n {
        tmp[i] = x[i] + h * A21 * k1[i];
    }
    model.eval(t + C2 * h, tmp, mode, k2)?;
    for i in 0..n {
        tmp[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    model.eval(t + C3 * h, tmp, mode, k3)?;
    for i in 0..n {
        tmp[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    model.eval(t + C4 * h, tmp, mode, k4)?;
    for i in 0..n {
        tmp[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    model.eval(t + C5 * h, tmp, mode, k5)?;
    for i in 0..n {
        tmp[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    model.eval(t + h, tmp, mode, k6)?;
    for i in 0..n {
        y[i] = x[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    if !all_finite(y) {
        return Ok(None);
    }
    model.eval(t + h, y, mode, k7)?;
    if !all_finite(k7) {
        return Ok(None);
    }
    let local_err = |i: usize| {
        h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
    };
    Ok(Some(err_norm(opts, x, y, local_err)))
}
