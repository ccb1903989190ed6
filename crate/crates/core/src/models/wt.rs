//! Reduced-order grid-following converter with an SRF PLL, written as an
//! equivalent swing equation in the PLL angle.
//!
//! State is `(delta, omega)`: PLL angle relative to the grid voltage (rad)
//! and its rate (rad/s). Electrical quantities are evaluated in physical
//! units (peak phase volts, peak amperes, henry, ohm) so the PLL gains act
//! on the q-axis voltage in volts. Currents are specified in per-unit of
//! the rated peak current.

use alloc::string::ToString;
use alloc::vec;

use crate::dynsys::{ModeSchedule, ModelDescriptor, Segment, SystemModel};
use crate::error::{Error, Result};
use crate::linstab::SquareMatrix;
use crate::math::{asin, atan, cos, sin, sqrt, PI};
use crate::state::StateVector;

pub const MODE_FAULT: u32 = 1;
pub const MODE_RAMP: u32 = 2;
pub const MODE_STEADY: u32 = 3;

const SINGULAR_MASS: f64 = 1e-6;

/// Converter current and grid voltage while the fault is on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    /// Grid voltage, pu.
    pub v_g: f64,
    /// Active current, pu.
    pub i_d: f64,
    /// Reactive current, pu.
    pub i_q: f64,
}

/// System and control parameters of the converter and its grid connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtParams {
    /// Rated power, VA.
    pub s_base: f64,
    /// Nominal grid voltage, line-to-neutral peak, V.
    pub v_g_nom: f64,
    /// Grid frequency, Hz.
    pub f_g: f64,
    /// Short-circuit ratio.
    pub scr: f64,
    pub x_over_r: f64,
    /// PLL proportional gain, (rad/s)/V.
    pub k_p: f64,
    /// PLL integral gain, (rad/s^2)/V.
    pub k_i: f64,
    /// Pre-disturbance active current, pu.
    pub i_d0: f64,
    /// Pre-disturbance reactive current, pu.
    pub i_q0: f64,
    /// Post-fault active current ramp rate, A/s (rms base).
    pub ramp_rate: f64,
    pub fault: FaultSpec,
    /// Reactive current after clearance; `None` restores `i_q0` at once.
    pub post_fault_i_q: Option<f64>,
}

impl WtParams {
    /// 12 MVA, 690 V, 50 Hz converter on an SCR 1.2, X/R 18.6 grid.
    pub fn table_1() -> Self {
        Self {
            s_base: 12e6,
            v_g_nom: 690.0 * sqrt(2.0 / 3.0),
            f_g: 50.0,
            scr: 1.2,
            x_over_r: 18.6,
            k_p: 0.025,
            k_i: 1.5,
            i_d0: 1.0,
            i_q0: 0.0,
            ramp_rate: 28.4e3,
            fault: FaultSpec {
                v_g: 0.0,
                i_d: 0.01,
                i_q: -1.0,
            },
            post_fault_i_q: None,
        }
    }

    pub fn with_ramp_rate(mut self, ramp_rate: f64) -> Self {
        self.ramp_rate = ramp_rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.s_base, "s_base must be positive"),
            (self.v_g_nom, "v_g_nom must be positive"),
            (self.f_g, "f_g must be positive"),
            (self.scr, "scr must be positive"),
            (self.x_over_r, "x_over_r must be positive"),
            (self.ramp_rate, "ramp_rate must be positive"),
        ];
        for (v, msg) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(msg));
            }
        }
        let finite = [
            self.s_base,
            self.v_g_nom,
            self.f_g,
            self.scr,
            self.x_over_r,
            self.k_p,
            self.k_i,
            self.i_d0,
            self.i_q0,
            self.fault.v_g,
            self.fault.i_d,
            self.fault.i_q,
        ];
        if finite.iter().any(|v| !v.is_finite())
            || self.post_fault_i_q.is_some_and(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("WT parameters must be finite"));
        }
        if self.fault.v_g < 0.0 {
            return Err(Error::InvalidArgument("fault voltage must be non-negative"));
        }
        Ok(())
    }

    pub fn base(&self) -> WtBase {
        let v_ll = self.v_g_nom * sqrt(1.5);
        let z_base = v_ll * v_ll / self.s_base;
        let i_base = self.s_base / (sqrt(3.0) * v_ll);
        let omega_g = 2.0 * PI * self.f_g;
        let z_pu = 1.0 / self.scr;
        let x_pu = z_pu * sin(atan(self.x_over_r));
        let r_pu = x_pu / self.x_over_r;
        WtBase {
            v_ll_rms: v_ll,
            z_base,
            i_base_rms: i_base,
            i_peak: sqrt(2.0) * i_base,
            omega_g,
            x_pu,
            r_pu,
            l_g: x_pu * z_base / omega_g,
            r_g: r_pu * z_base,
        }
    }

    /// Active-current ramp rate in pu/s.
    pub fn ramp_rate_pu(&self) -> f64 {
        self.ramp_rate / self.base().i_base_rms
    }

    /// Time to ramp the active current from its fault value back to `i_d0`.
    pub fn ramp_duration(&self) -> f64 {
        if self.ramp_rate.is_infinite() {
            return 0.0;
        }
        (self.i_d0 - self.fault.i_d).abs() * self.base().i_base_rms / self.ramp_rate
    }

    pub fn post_i_q(&self) -> f64 {
        self.post_fault_i_q.unwrap_or(self.i_q0)
    }
}

/// Base and derived electrical quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtBase {
    pub v_ll_rms: f64,
    pub z_base: f64,
    pub i_base_rms: f64,
    pub i_peak: f64,
    /// Grid angular frequency, rad/s.
    pub omega_g: f64,
    pub x_pu: f64,
    pub r_pu: f64,
    /// Grid inductance, H.
    pub l_g: f64,
    /// Grid resistance, ohm.
    pub r_g: f64,
}

/// Active-current command over time, pu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurrentProfile {
    Constant(f64),
    /// Linear ramp from `from` at clock time `start`, clamped at `to`.
    Ramp {
        start: f64,
        from: f64,
        rate: f64,
        to: f64,
    },
}

impl CurrentProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            CurrentProfile::Constant(v) => v,
            CurrentProfile::Ramp {
                start,
                from,
                rate,
                to,
            } => {
                let v = from + rate * (t - start);
                if rate >= 0.0 {
                    v.min(to).max(from.min(to))
                } else {
                    v.max(to).min(from.max(to))
                }
            }
        }
    }

    /// Time derivative, pu/s; zero once the ramp is clamped.
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            CurrentProfile::Constant(_) => 0.0,
            CurrentProfile::Ramp {
                start,
                from,
                rate,
                to,
            } => {
                let v = from + rate * (t - start);
                let clamped = if rate >= 0.0 { v >= to } else { v <= to };
                if clamped {
                    0.0
                } else {
                    rate
                }
            }
        }
    }
}

/// Grid voltage and converter currents of one operating phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtMode {
    /// Grid voltage, pu.
    pub v_g: f64,
    pub i_d: CurrentProfile,
    /// Reactive current, pu.
    pub i_q: f64,
}

/// Equivalent swing equation `M delta'' = T_m - T_e - D delta'`.
#[derive(Debug, Clone, PartialEq)]
pub struct WtSwingModel {
    params: WtParams,
    base: WtBase,
}

/// Physical-unit coefficients of the swing equation at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingTerms {
    pub v_g: f64,
    pub i_d: f64,
    pub i_q: f64,
    pub di_d: f64,
    pub mass: f64,
}

impl WtSwingModel {
    pub fn new(params: WtParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            base: params.base(),
            params,
        })
    }

    pub fn params(&self) -> &WtParams {
        &self.params
    }

    pub fn base(&self) -> &WtBase {
        &self.base
    }

    /// Pre-disturbance operating mode; also the post-ramp steady mode when
    /// the reactive current is restored to `i_q0`.
    pub fn pre_fault_mode(&self) -> WtMode {
        WtMode {
            v_g: 1.0,
            i_d: CurrentProfile::Constant(self.params.i_d0),
            i_q: self.params.i_q0,
        }
    }

    pub fn fault_mode(&self) -> WtMode {
        let f = self.params.fault;
        WtMode {
            v_g: f.v_g,
            i_d: CurrentProfile::Constant(f.i_d),
            i_q: f.i_q,
        }
    }

    pub fn ramp_mode(&self, t_clear: f64) -> WtMode {
        let p = &self.params;
        let sign = if p.i_d0 >= p.fault.i_d { 1.0 } else { -1.0 };
        WtMode {
            v_g: 1.0,
            i_d: CurrentProfile::Ramp {
                start: t_clear,
                from: p.fault.i_d,
                rate: sign * p.ramp_rate_pu(),
                to: p.i_d0,
            },
            i_q: p.post_i_q(),
        }
    }

    pub fn steady_mode(&self) -> WtMode {
        WtMode {
            v_g: 1.0,
            i_d: CurrentProfile::Constant(self.params.i_d0),
            i_q: self.params.post_i_q(),
        }
    }

    pub fn terms(&self, t: f64, mode: &WtMode) -> SwingTerms {
        let b = &self.base;
        let i_d = mode.i_d.value(t) * b.i_peak;
        SwingTerms {
            v_g: mode.v_g * self.params.v_g_nom,
            i_d,
            i_q: mode.i_q * b.i_peak,
            di_d: mode.i_d.rate(t) * b.i_peak,
            mass: 1.0 - self.params.k_p * b.l_g * i_d,
        }
    }

    /// `gamma = (r i_q + L i_d w_g) / V_g` for a mode without ramp terms;
    /// the steady angle satisfies `sin(delta) = gamma`.
    pub fn gamma(&self, mode: &WtMode) -> Result<f64> {
        let s = self.terms(0.0, mode);
        if !(s.v_g > 0.0) {
            return Err(Error::NoEquilibrium {
                gamma: f64::INFINITY,
            });
        }
        let b = &self.base;
        Ok((b.r_g * s.i_q + b.l_g * s.i_d * b.omega_g) / s.v_g)
    }

    /// Stable equilibrium `(asin(gamma), 0)` of a constant mode.
    pub fn equilibrium(&self, mode: &WtMode) -> Result<StateVector> {
        if matches!(mode.i_d, CurrentProfile::Ramp { .. }) {
            return Err(Error::InvalidArgument(
                "equilibrium requires a constant-current mode",
            ));
        }
        let gamma = self.gamma(mode)?;
        if !(gamma.abs() < 1.0) {
            return Err(Error::NoEquilibrium { gamma });
        }
        StateVector::new(vec![asin(gamma), 0.0])
    }

    /// Jacobian at the stable equilibrium written in terms of `gamma`:
    /// `[[0, 1], [-k_i V sqrt(1-g^2) / M, (k_i L i_d - k_p V sqrt(1-g^2)) / M]]`.
    pub fn equilibrium_jacobian(&self, mode: &WtMode) -> Result<SquareMatrix> {
        let gamma = self.gamma(mode)?;
        if !(gamma.abs() < 1.0) {
            return Err(Error::NoEquilibrium { gamma });
        }
        let s = self.terms(0.0, mode);
        let (kp, ki, l) = (self.params.k_p, self.params.k_i, self.base.l_g);
        let root = sqrt(1.0 - gamma * gamma);
        SquareMatrix::from_row_slice(
            2,
            &[
                0.0,
                1.0,
                -ki * s.v_g * root / s.mass,
                (ki * l * s.i_d - kp * s.v_g * root) / s.mass,
            ],
        )
    }

    /// q-axis voltage seen by the PLL, excluding the `L di_q/dt` term:
    /// `-V sin(delta) + r i_q + (w_g + omega) L i_d`.
    pub fn pll_q_voltage(&self, t: f64, x: &[f64], mode: &WtMode) -> f64 {
        let s = self.terms(t, mode);
        let b = &self.base;
        -s.v_g * sin(x[0]) + b.r_g * s.i_q + (b.omega_g + x[1]) * b.l_g * s.i_d
    }
}

impl SystemModel for WtSwingModel {
    type Mode = WtMode;

    fn dimension(&self) -> usize {
        2
    }

    fn descriptor(&self) -> ModelDescriptor {
        let p = &self.params;
        ModelDescriptor {
            name: "wt-swing".to_string(),
            parameters: vec![
                ("s_base".to_string(), p.s_base),
                ("v_g_nom".to_string(), p.v_g_nom),
                ("f_g".to_string(), p.f_g),
                ("scr".to_string(), p.scr),
                ("x_over_r".to_string(), p.x_over_r),
                ("k_p".to_string(), p.k_p),
                ("k_i".to_string(), p.k_i),
                ("i_d0".to_string(), p.i_d0),
                ("i_q0".to_string(), p.i_q0),
                ("ramp_rate".to_string(), p.ramp_rate),
            ],
        }
    }

    fn eval(&self, t: f64, x: &[f64], mode: &WtMode, dx: &mut [f64]) -> Result<()> {
        let s = self.terms(t, mode);
        if s.mass.abs() <= SINGULAR_MASS {
            return Err(Error::SingularModel {
                t,
                reason: "M_eq = 1 - k_p L_g i_d vanishes",
            });
        }
        let (kp, ki) = (self.params.k_p, self.params.k_i);
        let b = &self.base;
        let (delta, omega) = (x[0], x[1]);
        let t_m =
            kp * (b.l_g * s.di_d * b.omega_g) + ki * (b.r_g * s.i_q + b.l_g * s.i_d * b.omega_g);
        let t_e = ki * s.v_g * sin(delta);
        let damping = kp * (s.v_g * cos(delta) - b.l_g * s.di_d) - ki * b.l_g * s.i_d;
        dx[0] = omega;
        dx[1] = (t_m - t_e - damping * omega) / s.mass;
        Ok(())
    }

    fn analytic_jacobian(&self, t: f64, x: &[f64], mode: &WtMode) -> Option<SquareMatrix> {
        let s = self.terms(t, mode);
        if s.mass.abs() <= SINGULAR_MASS {
            return None;
        }
        let (kp, ki) = (self.params.k_p, self.params.k_i);
        let b = &self.base;
        let (delta, omega) = (x[0], x[1]);
        let damping = kp * (s.v_g * cos(delta) - b.l_g * s.di_d) - ki * b.l_g * s.i_d;
        let d_delta = (-ki * s.v_g * cos(delta) + kp * s.v_g * sin(delta) * omega) / s.mass;
        SquareMatrix::from_row_slice(2, &[0.0, 1.0, d_delta, -damping / s.mass]).ok()
    }
}

/// Fault on `[0, t_clear)`, active-current ramp until it is back at
/// `i_d0`, steady afterwards. Empty phases are dropped.
pub fn wt_ramp_schedule(model: &WtSwingModel, t_clear: f64) -> Result<ModeSchedule<WtMode>> {
    if !(t_clear >= 0.0) || !t_clear.is_finite() {
        return Err(Error::InvalidArgument(
            "t_clear must be finite and non-negative",
        ));
    }
    let dt = model.params().ramp_duration();
    let mut segments = alloc::vec::Vec::with_capacity(3);
    if t_clear > 0.0 {
        segments.push(Segment {
            start: 0.0,
            mode_id: MODE_FAULT,
            mode: model.fault_mode(),
        });
    }
    if dt > 0.0 {
        segments.push(Segment {
            start: t_clear,
            mode_id: MODE_RAMP,
            mode: model.ramp_mode(t_clear),
        });
    }
    segments.push(Segment {
        start: t_clear + dt,
        mode_id: MODE_STEADY,
        mode: model.steady_mode(),
    });
    ModeSchedule::new(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linstab::fd_jacobian;

    fn model() -> WtSwingModel {
        WtSwingModel::new(WtParams::table_1()).unwrap()
    }

    #[test]
    fn base_current_and_ramp_duration() {
        let p = WtParams::table_1();
        let b = p.base();
        // 12e6 / (sqrt(3) * 690)
        assert!((b.i_base_rms - 10040.9).abs() < 0.1);
        assert!((p.ramp_rate_pu() - 2.8284).abs() < 1e-3);
        assert!((p.ramp_duration() - 0.35002).abs() < 1e-4);
        let fast = p.with_ramp_rate(42.6e3);
        assert!(fast.ramp_duration() < p.ramp_duration());
        assert_eq!(p.with_ramp_rate(f64::INFINITY).ramp_duration(), 0.0);
    }

    #[test]
    fn impedance_split() {
        let b = WtParams::table_1().base();
        assert!((libm::hypot(b.x_pu, b.r_pu) - 1.0 / 1.2).abs() < 1e-12);
        assert!((b.x_pu / b.r_pu - 18.6).abs() < 1e-9);
    }

    #[test]
    fn steady_equilibrium_has_zero_derivative() {
        let m = model();
        let mode = m.steady_mode();
        let eq = m.equilibrium(&mode).unwrap();
        let mut dx = [1.0; 2];
        m.eval(0.0, eq.as_slice(), &mode, &mut dx).unwrap();
        assert!(dx[0].abs() <= 1e-10 && dx[1].abs() <= 1e-10, "{dx:?}");
    }

    #[test]
    fn analytic_jacobian_matches_gamma_form_and_fd() {
        let m = model();
        let mode = m.steady_mode();
        let eq = m.equilibrium(&mode).unwrap();
        let a = m.analytic_jacobian(0.0, eq.as_slice(), &mode).unwrap();
        let g = m.equilibrium_jacobian(&mode).unwrap();
        let fd = fd_jacobian(&m, 0.0, eq.as_slice(), &mode).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let scale = a.get(i, j).abs().max(1.0);
                assert!((a.get(i, j) - g.get(i, j)).abs() <= 1e-9 * scale);
                assert!((a.get(i, j) - fd.get(i, j)).abs() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn singular_mass_is_reported() {
        let mut p = WtParams::table_1();
        let b = p.base();
        // k_p L_g i_d = 1 at i_d0 = 1 pu.
        p.k_p = 1.0 / (b.l_g * b.i_peak);
        let m = WtSwingModel::new(p).unwrap();
        let mut dx = [0.0; 2];
        assert!(matches!(
            m.eval(0.0, &[0.5, 0.0], &m.steady_mode(), &mut dx),
            Err(Error::SingularModel { .. })
        ));
    }

    #[test]
    fn no_equilibrium_when_gamma_exceeds_one() {
        let mut p = WtParams::table_1();
        p.scr = 0.5;
        let m = WtSwingModel::new(p).unwrap();
        assert!(matches!(
            m.equilibrium(&m.steady_mode()),
            Err(Error::NoEquilibrium { .. })
        ));
    }

    #[test]
    fn ramp_profile_clamps() {
        let r = CurrentProfile::Ramp {
            start: 1.0,
            from: 0.01,
            rate: 2.0,
            to: 1.0,
        };
        assert_eq!(r.value(1.0), 0.01);
        assert!((r.value(1.25) - 0.51).abs() < 1e-15);
        assert_eq!(r.value(5.0), 1.0);
        assert_eq!(r.rate(1.2), 2.0);
        assert_eq!(r.rate(5.0), 0.0);
    }

    #[test]
    fn schedule_phases() {
        let m = model();
        let s = wt_ramp_schedule(&m, 0.2).unwrap();
        let ids: alloc::vec::Vec<u32> = s.segments().iter().map(|s| s.mode_id).collect();
        assert_eq!(ids, [MODE_FAULT, MODE_RAMP, MODE_STEADY]);
        assert!((s.segments()[2].start - (0.2 + m.params().ramp_duration())).abs() < 1e-15);
        let s0 = wt_ramp_schedule(&m, 0.0).unwrap();
        assert_eq!(s0.segments()[0].mode_id, MODE_RAMP);
        let inst = WtSwingModel::new(WtParams::table_1().with_ramp_rate(f64::INFINITY)).unwrap();
        let s = wt_ramp_schedule(&inst, 0.2).unwrap();
        let ids: alloc::vec::Vec<u32> = s.segments().iter().map(|s| s.mode_id).collect();
        assert_eq!(ids, [MODE_FAULT, MODE_STEADY]);
    }
}
