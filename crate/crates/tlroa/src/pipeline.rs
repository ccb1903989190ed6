//! End-to-end analysis steps shared by the CLI commands and the tests.

use tlroa_core::dynsys::{IntegrationOptions, ModeSchedule, SettlingBand, SystemModel};
use tlroa_core::exec::Executor;
use tlroa_core::fault::{
    find_cct_windows, revolution_horizon, simulate_fault, steady_band, verify_window_by_simulation,
    CctReport, CctWindow, JumpMap, JumpedTrajectory,
};
use tlroa_core::linstab::{
    eigenvalues, is_hurwitz, jacobian, level_is_valid, maximize_level, settling_time,
    solve_lyapunov, LevelSearch, LevelSet, QuadraticForm, SquareMatrix,
};
use tlroa_core::math::TAU;
use tlroa_core::models::{wt_ramp_schedule, VanDerPolReversed, WtMode, WtSwingModel};
use tlroa_core::roa::{
    estimate_tlroa, reaches_level_set, BoundaryPolygon, GapRule, RefineOptions, TlroaConfig,
    TlroaResult,
};
use tlroa_core::{Error, StateVector};

use crate::config::{AnalysisConfig, JumpKind, Keyword, LyapunovConfig, NumberOr};
use crate::error::{CliError, CliResult};

/// Upper bound on the automatic fault horizon.
const FAULT_HORIZON_CAP: f64 = 60.0;

#[derive(Debug, Clone)]
pub struct Linearization {
    pub equilibrium: StateVector,
    pub a: SquareMatrix,
    /// `(re, im)` pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    pub hurwitz: bool,
}

pub fn linearize<S: SystemModel>(
    model: &S,
    mode: &S::Mode,
    equilibrium: StateVector,
) -> CliResult<Linearization> {
    let a = jacobian(model, 0.0, equilibrium.as_slice(), mode)?;
    let eigenvalues = eigenvalues(&a)?.iter().map(|l| (l.re, l.im)).collect();
    let hurwitz = is_hurwitz(&a)?;
    Ok(Linearization {
        equilibrium,
        a,
        eigenvalues,
        hurwitz,
    })
}

/// Quadratic Lyapunov function of the linearization and its seed level.
pub fn seed_level<S: SystemModel>(
    model: &S,
    mode: &S::Mode,
    lin: &Linearization,
    cfg: &LyapunovConfig,
) -> CliResult<LevelSet> {
    let q = SquareMatrix::from_rows(&cfg.q)?;
    let p = solve_lyapunov(&lin.a, &q)?;
    let form = QuadraticForm::new(p, lin.equilibrium.clone())?;
    let search = LevelSearch {
        ring_samples: cfg.ring_samples,
        ..LevelSearch::default()
    };
    match cfg.level {
        NumberOr::Value(c) => {
            if !level_is_valid(&form, model, 0.0, mode, c, &search)? {
                return Err(Error::NoValidLevel.into());
            }
            Ok(LevelSet::new(form, c)?)
        }
        NumberOr::Keyword(Keyword::Maximize) => {
            Ok(maximize_level(&form, model, 0.0, mode, cfg.c_max, &search)?)
        }
        NumberOr::Keyword(k) => Err(CliError::Config(format!("lyapunov.level cannot be {k:?}"))),
    }
}

fn refine_options(cfg: &AnalysisConfig) -> RefineOptions {
    RefineOptions {
        max_gap: GapRule::RelativeDiagonal(cfg.tlroa.max_gap),
        max_samples: cfg.tlroa.max_samples,
        max_depth: cfg.tlroa.max_depth,
    }
}

fn horizon(cfg: &AnalysisConfig, a: &SquareMatrix) -> CliResult<f64> {
    match cfg.tlroa.horizon {
        NumberOr::Value(h) => Ok(h),
        NumberOr::Keyword(Keyword::Settling) => {
            Ok(settling_time(a, cfg.tlroa.settling_time_constants)?)
        }
        NumberOr::Keyword(k) => Err(CliError::Config(format!("tlroa.horizon cannot be {k:?}"))),
    }
}

/// Reversed Van der Pol set-up: seed at the origin, backward horizon from
/// the config.
#[derive(Debug, Clone)]
pub struct VdpScenario {
    pub model: VanDerPolReversed,
    pub lin: Linearization,
    pub level_set: LevelSet,
    pub horizon: f64,
}

impl VdpScenario {
    pub fn new(cfg: &AnalysisConfig) -> CliResult<Self> {
        let model = VanDerPolReversed;
        let lin = linearize(&model, &(), StateVector::zeros(2))?;
        let level_set = seed_level(&model, &(), &lin, &cfg.lyapunov)?;
        let horizon = horizon(cfg, &lin.a)?;
        Ok(Self {
            model,
            lin,
            level_set,
            horizon,
        })
    }

    pub fn schedule(&self) -> ModeSchedule<()> {
        ModeSchedule::constant(())
    }

    pub fn tlroa_config(&self, cfg: &AnalysisConfig) -> TlroaConfig {
        let mut t = TlroaConfig::new(0.0, self.horizon, cfg.tlroa.samples);
        t.refine = refine_options(cfg);
        t.integration = cfg.integration.options();
        t
    }

    pub fn tlroa<E: Executor>(&self, cfg: &AnalysisConfig, exec: &E) -> CliResult<TlroaResult> {
        Ok(estimate_tlroa(
            &self.model,
            &self.level_set,
            &self.schedule(),
            &self.tlroa_config(cfg),
            exec,
        )?)
    }
}

/// One ramp-rate scenario of the wind-turbine model. Clock time 0 is the
/// clearance instant; the ramp ends at `ramp` and states must be inside
/// the seed level set at `t_end()`.
#[derive(Debug, Clone)]
pub struct WtScenario {
    pub model: WtSwingModel,
    pub lin: Linearization,
    pub level_set: LevelSet,
    pub ramp: f64,
    pub horizon: f64,
}

impl WtScenario {
    pub fn new(cfg: &AnalysisConfig, ramp_rate: f64) -> CliResult<Self> {
        let model = WtSwingModel::new(cfg.wt()?.params(ramp_rate))?;
        let steady = model.steady_mode();
        let lin = linearize(&model, &steady, model.equilibrium(&steady)?)?;
        let level_set = seed_level(&model, &steady, &lin, &cfg.lyapunov)?;
        let horizon = horizon(cfg, &lin.a)?;
        let ramp = model.params().ramp_duration();
        Ok(Self {
            model,
            lin,
            level_set,
            ramp,
            horizon,
        })
    }

    pub fn ramp_rate(&self) -> f64 {
        self.model.params().ramp_rate
    }

    pub fn t_end(&self) -> f64 {
        self.ramp + self.horizon
    }

    pub fn post_clearance_schedule(&self) -> CliResult<ModeSchedule<WtMode>> {
        Ok(wt_ramp_schedule(&self.model, 0.0)?)
    }

    pub fn tlroa_config(&self, cfg: &AnalysisConfig) -> TlroaConfig {
        let mut t = TlroaConfig::new(0.0, self.t_end(), cfg.tlroa.samples);
        t.refine = refine_options(cfg);
        t.integration = cfg.integration.options();
        t.wrap_dims = vec![(0, TAU)];
        t
    }

    pub fn tlroa<E: Executor>(&self, cfg: &AnalysisConfig, exec: &E) -> CliResult<TlroaResult> {
        let schedule = self.post_clearance_schedule()?;
        Ok(estimate_tlroa(
            &self.model,
            &self.level_set,
            &schedule,
            &self.tlroa_config(cfg),
            exec,
        )?)
    }

    /// Axis-aligned box around the seed ellipse, angle wrapped.
    pub fn settling_band(&self, dwell: f64) -> CliResult<SettlingBand> {
        let f = &self.level_set.form;
        let c = self.level_set.c;
        Ok(steady_band(
            &self.model,
            [f.axis_extent(0, c), f.axis_extent(1, c)],
            dwell,
        )?)
    }

    pub fn fault_horizon(&self, cfg: &AnalysisConfig) -> CliResult<f64> {
        match cfg.fault.t_max {
            Some(t) => Ok(t),
            None => Ok(revolution_horizon(
                &self.model,
                cfg.fault.revolutions,
                FAULT_HORIZON_CAP,
                &cfg.integration.options(),
            )?),
        }
    }

    /// Forward check of one clearing time: the state must enter the band
    /// by the end of the horizon and stay for the dwell time.
    pub fn verify_clearance(&self, cfg: &AnalysisConfig, t_clear: f64) -> CliResult<bool> {
        let band = self.settling_band(cfg.fault.dwell)?;
        let t_max = t_clear + self.t_end() + cfg.fault.dwell;
        Ok(verify_window_by_simulation(
            &self.model,
            t_clear,
            jump_map(cfg.fault.jump),
            &band,
            t_max,
            &cfg.integration.options(),
        )?)
    }
}

pub fn jump_map(kind: JumpKind) -> JumpMap {
    match kind {
        JumpKind::Srf => JumpMap::Srf,
        JumpKind::Identity => JumpMap::Identity,
    }
}

/// Fault-on trajectory with jumps, and the clearing-time windows it implies.
#[derive(Debug, Clone)]
pub struct CctRun {
    pub scenario: WtScenario,
    pub tlroa: TlroaResult,
    pub jumped: JumpedTrajectory,
    pub report: CctReport,
}

pub fn run_cct<E: Executor>(cfg: &AnalysisConfig, ramp_rate: f64, exec: &E) -> CliResult<CctRun> {
    let scenario = WtScenario::new(cfg, ramp_rate)?;
    let tlroa = scenario.tlroa(cfg, exec)?;
    let opts = cfg.integration.options();
    let t_max = scenario.fault_horizon(cfg)?;
    let fault = scenario.model.params().fault;
    let base = simulate_fault(&scenario.model, &fault, t_max, cfg.fault.dt_out, &opts)?;
    let jumped = JumpedTrajectory::new(&scenario.model, base, jump_map(cfg.fault.jump))?;
    let report = find_cct_windows(&scenario.model, &jumped, &tlroa.polygon, &opts)?;
    Ok(CctRun {
        scenario,
        tlroa,
        jumped,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCheck {
    pub window: CctWindow,
    pub oracle_stable: bool,
}

impl WindowCheck {
    pub fn agrees(&self) -> bool {
        self.oracle_stable == self.window.stable
    }
}

/// Forward-oracle verdict at every window midpoint.
pub fn verify_windows<E: Executor>(
    run: &CctRun,
    cfg: &AnalysisConfig,
    exec: &E,
) -> CliResult<Vec<WindowCheck>> {
    let out = exec.map(&run.report.windows, |w| -> CliResult<WindowCheck> {
        Ok(WindowCheck {
            window: *w,
            oracle_stable: run.scenario.verify_clearance(cfg, w.midpoint())?,
        })
    });
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: [f64; 2],
    pub stable: bool,
}

/// Grid over `x1` (half-open range) by `x2` (closed range), `x1` major.
pub fn grid_points(g: &crate::config::GridOptions) -> Vec<[f64; 2]> {
    let mut pts = Vec::with_capacity(g.n_x1 * g.n_x2);
    for i in 0..g.n_x1 {
        let a = g.x1[0] + (g.x1[1] - g.x1[0]) * i as f64 / g.n_x1 as f64;
        for j in 0..g.n_x2 {
            let b = g.x2[0] + (g.x2[1] - g.x2[0]) * j as f64 / (g.n_x2 - 1) as f64;
            pts.push([a, b]);
        }
    }
    pts
}

/// Brute-force forward classification: a point is stable if it reaches the
/// seed level set (any wrapped copy) by `t_end`. Integration failures count
/// as unstable.
#[allow(clippy::too_many_arguments)]
pub fn oracle_grid<S, E>(
    model: &S,
    level_set: &LevelSet,
    schedule: &ModeSchedule<S::Mode>,
    t_start: f64,
    t_end: f64,
    wrap_dims: &[(usize, f64)],
    points: &[[f64; 2]],
    opts: &IntegrationOptions,
    exec: &E,
) -> Vec<GridPoint>
where
    S: SystemModel,
    S::Mode: Sync,
    E: Executor,
{
    exec.map(points, |p| GridPoint {
        x: *p,
        stable: reaches_level_set(
            model, level_set, schedule, t_start, t_end, p, wrap_dims, opts,
        )
        .unwrap_or(false),
    })
}

/// Polygon/oracle agreement restricted to points farther than `margin`
/// from the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Agreement {
    pub margin: f64,
    pub stable_far: usize,
    pub stable_far_inside: usize,
    pub unstable_far: usize,
    pub unstable_far_inside: usize,
}

impl Agreement {
    pub fn stable_inside_fraction(&self) -> f64 {
        if self.stable_far == 0 {
            f64::NAN
        } else {
            self.stable_far_inside as f64 / self.stable_far as f64
        }
    }
}

pub fn agreement(polygon: &BoundaryPolygon, grid: &[GridPoint], margin: f64) -> Agreement {
    let mut a = Agreement {
        margin,
        ..Agreement::default()
    };
    for g in grid {
        if polygon.distance_to_boundary(g.x) <= margin {
            continue;
        }
        let inside = polygon.contains(g.x);
        if g.stable {
            a.stable_far += 1;
            a.stable_far_inside += inside as usize;
        } else {
            a.unstable_far += 1;
            a.unstable_far_inside += inside as usize;
        }
    }
    a
}
