//! Time-limited region-of-attraction estimation.
//!
//! A certified sublevel set around the post-disturbance equilibrium is
//! sampled on its boundary; every boundary sample is integrated backwards
//! over the transient, and the images, kept in seed order, form the
//! boundary of the set of states that reach the sublevel set by the end of
//! the horizon. Because the flow map is a homeomorphism, only the boundary
//! needs to be simulated.

mod polygon;

use alloc::vec::Vec;

pub use polygon::{is_simple, point_in_polygon, polygon_area, signed_area, BoundaryPolygon, Point};

use crate::dynsys::{
    integrate, propagate, IntegrationOptions, ModeSchedule, SystemModel, Trajectory,
};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linstab::LevelSet;
use crate::math::{hypot, wrap_into, TAU};
use crate::state::StateVector;

/// `n` points on `{V = c}` at uniform parameter angles `2 pi k / n`.
pub fn sample_level_boundary(ls: &LevelSet, n: usize) -> Result<Vec<Point>> {
    Ok(sample_level_boundary_with_angles(ls, n)?
        .into_iter()
        .map(|(_, p)| p)
        .collect())
}

fn seed_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

fn sample_level_boundary_with_angles(ls: &LevelSet, n: usize) -> Result<Vec<(f64, Point)>> {
    if n < 8 {
        return Err(Error::InvalidArgument("need at least 8 boundary samples"));
    }
    if ls.form.dim() != 2 {
        return Err(Error::InvalidArgument(
            "boundary sampling supports planar systems",
        ));
    }
    Ok(seed_angles(n)
        .into_iter()
        .map(|t| (t, ls.form.ellipse_point(ls.c, t)))
        .collect())
}

/// Criterion for splitting an edge of the image polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapRule {
    /// Fraction of the image bounding-box diagonal.
    RelativeDiagonal(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOptions {
    pub max_gap: GapRule,
    /// Total reverse integrations allowed, initial samples included.
    pub max_samples: usize,
    /// Finest seed spacing is `2 pi / (n 2^max_depth)`.
    pub max_depth: u32,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_gap: GapRule::RelativeDiagonal(0.02),
            max_samples: 250,
            max_depth: 12,
        }
    }
}

impl RefineOptions {
    /// No adaptive insertion.
    pub fn disabled() -> Self {
        Self {
            max_gap: GapRule::Absolute(f64::INFINITY),
            max_samples: usize::MAX,
            max_depth: 0,
        }
    }
}

/// Horizon, sampling and solver settings for [`estimate_tlroa`].
#[derive(Debug, Clone, PartialEq)]
pub struct TlroaConfig {
    /// Clock time the backward solve stops at (the disturbance clearance).
    pub t_start: f64,
    /// Clock time at which states must be inside the seed level set.
    pub t_end: f64,
    pub samples: usize,
    pub refine: RefineOptions,
    pub integration: IntegrationOptions,
    pub wrap_dims: Vec<(usize, f64)>,
    /// Keep each vertex's full backward trajectory, for plotting.
    pub keep_trajectories: bool,
}

impl TlroaConfig {
    pub fn new(t_start: f64, t_end: f64, samples: usize) -> Self {
        Self {
            t_start,
            t_end,
            samples,
            refine: RefineOptions::default(),
            integration: IntegrationOptions::default(),
            wrap_dims: Vec::new(),
            keep_trajectories: false,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TlroaResult {
    pub polygon: BoundaryPolygon,
    pub level_set: LevelSet,
    /// Reverse integrations performed.
    pub samples_used: usize,
    /// Gaps above the threshold remained when the budget ran out.
    pub refinement_exhausted: bool,
    /// Backward trajectories in vertex order, when requested.
    pub trajectories: Option<Vec<Trajectory>>,
}

impl TlroaResult {
    /// Errors with `RefinementBudgetExceeded` if the boundary is not smooth.
    pub fn require_smooth(&self) -> Result<&Self> {
        if self.refinement_exhausted {
            Err(Error::RefinementBudgetExceeded {
                samples: self.samples_used,
            })
        } else {
            Ok(self)
        }
    }
}

struct Sample {
    theta: f64,
    image: Point,
    trajectory: Option<Trajectory>,
}

fn map_seeds<S, E>(
    model: &S,
    ls: &LevelSet,
    schedule: &ModeSchedule<S::Mode>,
    cfg: &TlroaConfig,
    thetas: &[f64],
    exec: &E,
) -> Result<Vec<Sample>>
where
    S: SystemModel,
    S::Mode: Sync,
    E: Executor,
{
    let identity = cfg.t_end == cfg.t_start;
    let results = exec.map(thetas, |&theta| -> Result<Sample> {
        let seed = ls.form.ellipse_point(ls.c, theta);
        if identity {
            return Ok(Sample {
                theta,
                image: seed,
                trajectory: None,
            });
        }
        if cfg.keep_trajectories {
            let tr = integrate(
                model,
                &StateVector::from(seed),
                cfg.t_end,
                cfg.t_start,
                schedule,
                &cfg.integration,
            )?;
            let x = tr.final_state();
            Ok(Sample {
                theta,
                image: [x[0], x[1]],
                trajectory: Some(tr),
            })
        } else {
            let x = propagate(
                model,
                &seed,
                cfg.t_end,
                cfg.t_start,
                schedule,
                &cfg.integration,
            )?;
            Ok(Sample {
                theta,
                image: [x[0], x[1]],
                trajectory: None,
            })
        }
    });
    results.into_iter().collect()
}

fn gap_threshold(rule: GapRule, samples: &[Sample]) -> f64 {
    match rule {
        GapRule::Absolute(g) => g,
        GapRule::RelativeDiagonal(frac) => {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for s in samples {
                for k in 0..2 {
                    lo[k] = lo[k].min(s.image[k]);
                    hi[k] = hi[k].max(s.image[k]);
                }
            }
            frac * hypot(hi[0] - lo[0], hi[1] - lo[1])
        }
    }
}

/// Maps the boundary of `ls` backwards from `cfg.t_end` to `cfg.t_start`
/// and refines the image polygon where adjacent images are far apart.
pub fn estimate_tlroa<S, E>(
    model: &S,
    ls: &LevelSet,
    schedule: &ModeSchedule<S::Mode>,
    cfg: &TlroaConfig,
    exec: &E,
) -> Result<TlroaResult>
where
    S: SystemModel,
    S::Mode: Sync,
    E: Executor,
{
    if model.dimension() != 2 || ls.form.dim() != 2 {
        return Err(Error::InvalidArgument(
            "TLRoA estimation supports planar systems",
        ));
    }
    if !(cfg.t_end >= cfg.t_start) {
        return Err(Error::InvalidArgument("t_end must not precede t_start"));
    }
    if cfg.samples < 8 {
        return Err(Error::InvalidArgument("need at least 8 boundary samples"));
    }
    let identity = cfg.t_end == cfg.t_start;
    let initial = seed_angles(cfg.samples);
    let mut samples = map_seeds(model, ls, schedule, cfg, &initial, exec)?;
    let mut used = if identity { 0 } else { samples.len() };
    let min_spacing = TAU / (cfg.samples as f64 * (1u64 << cfg.refine.max_depth.min(52)) as f64);
    let mut exhausted = false;

    loop {
        let threshold = gap_threshold(cfg.refine.max_gap, &samples);
        let n = samples.len();
        let mut gaps: Vec<(f64, f64)> = Vec::new();
        let mut unresolvable = false;
        for i in 0..n {
            let (a, b) = (&samples[i], &samples[(i + 1) % n]);
            let d = hypot(b.image[0] - a.image[0], b.image[1] - a.image[1]);
            if d > threshold {
                let tb = if i + 1 == n { b.theta + TAU } else { b.theta };
                let spacing = tb - a.theta;
                if spacing * 0.5 < min_spacing {
                    unresolvable = true;
                } else {
                    gaps.push((d, wrap_into(a.theta + 0.5 * spacing, 0.0, TAU)));
                }
            }
        }
        if gaps.is_empty() {
            exhausted |= unresolvable;
            break;
        }
        let budget = cfg.refine.max_samples.saturating_sub(used);
        if budget == 0 {
            exhausted = true;
            break;
        }
        if gaps.len() > budget {
            gaps.sort_by(|x, y| y.0.total_cmp(&x.0));
            gaps.truncate(budget);
            exhausted = true;
        }
        let thetas: Vec<f64> = gaps.iter().map(|g| g.1).collect();
        let fresh = map_seeds(model, ls, schedule, cfg, &thetas, exec)?;
        if !identity {
            used += fresh.len();
        }
        samples.extend(fresh);
        samples.sort_by(|x, y| x.theta.total_cmp(&y.theta));
        if exhausted {
            break;
        }
    }

    let angles: Vec<f64> = samples.iter().map(|s| s.theta).collect();
    let vertices: Vec<Point> = samples.iter().map(|s| s.image).collect();
    let trajectories = if cfg.keep_trajectories && !identity {
        Some(samples.into_iter().filter_map(|s| s.trajectory).collect())
    } else {
        None
    };
    let polygon = BoundaryPolygon::new(vertices, angles, cfg.horizon(), cfg.wrap_dims.clone())?;
    Ok(TlroaResult {
        polygon,
        level_set: ls.clone(),
        samples_used: used,
        refinement_exhausted: exhausted,
        trajectories,
    })
}

/// Shifts `x` by whole periods along wrapped dimensions toward `target`.
pub fn nearest_copy(x: &[f64], target: &[f64], wrap_dims: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(d, period) in wrap_dims {
        let off = wrap_into(x[d] - target[d], -0.5 * period, period);
        y[d] = target[d] + off;
    }
    y
}

/// Forward oracle: does the state at `t_start` reach `{V <= c}` (any
/// wrapped copy) by `t_end`?
#[allow(clippy::too_many_arguments)]
pub fn reaches_level_set<S: SystemModel>(
    model: &S,
    ls: &LevelSet,
    schedule: &ModeSchedule<S::Mode>,
    t_start: f64,
    t_end: f64,
    x: &[f64],
    wrap_dims: &[(usize, f64)],
    opts: &IntegrationOptions,
) -> Result<bool> {
    let end = if t_end == t_start {
        x.to_vec()
    } else {
        propagate(model, x, t_start, t_end, schedule, opts)?
    };
    let y = nearest_copy(&end, ls.form.equilibrium().as_slice(), wrap_dims);
    Ok(ls.form.value(&y) <= ls.c)
}

/// Forward-integrates every vertex over the horizon and returns
/// `V(x(t_end)) / c` for each.
pub fn round_trip_levels<S, E>(
    model: &S,
    result: &TlroaResult,
    schedule: &ModeSchedule<S::Mode>,
    cfg: &TlroaConfig,
    exec: &E,
) -> Result<Vec<f64>>
where
    S: SystemModel,
    S::Mode: Sync,
    E: Executor,
{
    let ls = &result.level_set;
    let out = exec.map(result.polygon.vertices(), |v| -> Result<f64> {
        if cfg.t_end == cfg.t_start {
            return Ok(ls.form.value(v) / ls.c);
        }
        let x = propagate(model, v, cfg.t_start, cfg.t_end, schedule, &cfg.integration)?;
        Ok(ls.form.value(&x) / ls.c)
    });
    out.into_iter().collect()
}
