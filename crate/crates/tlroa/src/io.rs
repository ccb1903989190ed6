//! CSV and JSON writers for trajectories, level sets, polygons and reports.

use std::path::Path;

use serde::Serialize;
use tlroa_core::dynsys::Trajectory;
use tlroa_core::fault::{CctReport, JumpedTrajectory};
use tlroa_core::linstab::LevelSet;
use tlroa_core::roa::{BoundaryPolygon, TlroaResult};

use crate::error::CliResult;
use crate::pipeline::GridPoint;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `t,x1,x2,...,mode_id`.
pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=tr.dim()).map(|i| format!("x{i}")));
    header.push("mode_id".into());
    w.write_record(&header)?;
    for (i, &t) in tr.times().iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(tr.state(i).iter().map(|&v| fmt_f64(v)));
        row.push(tr.mode_ids()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct LevelSetJson {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub equilibrium: Vec<f64>,
    pub c: f64,
}

impl From<&LevelSet> for LevelSetJson {
    fn from(ls: &LevelSet) -> Self {
        Self {
            p: ls.form.p().rows(),
            equilibrium: ls.form.equilibrium().as_slice().to_vec(),
            c: ls.c,
        }
    }
}

pub fn write_level_set_json(path: &Path, ls: &LevelSet) -> CliResult<()> {
    write_json(path, &LevelSetJson::from(ls))
}

/// `theta_seed,<x1>,<x2>` per vertex.
pub fn write_polygon_csv(path: &Path, poly: &BoundaryPolygon, names: [&str; 2]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["theta_seed", names[0], names[1]])?;
    for (v, th) in poly.vertices().iter().zip(poly.seed_angles()) {
        w.write_record([fmt_f64(*th), fmt_f64(v[0]), fmt_f64(v[1])])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PolygonMeta {
    pub horizon: f64,
    pub n: usize,
    pub level_c: f64,
    pub samples_used: usize,
    pub refinement_exhausted: bool,
    /// Absent when the polygon self-intersects.
    pub area: Option<f64>,
}

impl From<&TlroaResult> for PolygonMeta {
    fn from(r: &TlroaResult) -> Self {
        Self {
            horizon: r.polygon.horizon(),
            n: r.polygon.len(),
            level_c: r.level_set.c,
            samples_used: r.samples_used,
            refinement_exhausted: r.refinement_exhausted,
            area: r.polygon.area().ok(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WindowJson {
    pub t_open: f64,
    pub t_close: f64,
    pub stable: bool,
}

#[derive(Debug, Serialize)]
pub struct FaultJson {
    pub v_g: f64,
    pub i_d: f64,
    pub i_q: f64,
}

#[derive(Debug, Serialize)]
pub struct CctJson {
    pub ramp_rate: f64,
    pub fault: FaultJson,
    pub windows: Vec<WindowJson>,
}

impl From<&CctReport> for CctJson {
    fn from(r: &CctReport) -> Self {
        Self {
            ramp_rate: r.ramp_rate,
            fault: FaultJson {
                v_g: r.fault.v_g,
                i_d: r.fault.i_d,
                i_q: r.fault.i_q,
            },
            windows: r
                .windows
                .iter()
                .map(|w| WindowJson {
                    t_open: w.t_open,
                    t_close: w.t_close,
                    stable: w.stable,
                })
                .collect(),
        }
    }
}

/// `t,delta_minus,omega_minus,delta_plus,omega_plus,inside_tlroa`.
pub fn write_jumped_csv(path: &Path, jt: &JumpedTrajectory, inside: &[bool]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "t",
        "delta_minus",
        "omega_minus",
        "delta_plus",
        "omega_plus",
        "inside_tlroa",
    ])?;
    for (i, &t) in jt.times().iter().enumerate() {
        let m = jt.base.state(i);
        let p = jt.jumped[i];
        w.write_record([
            fmt_f64(t),
            fmt_f64(m[0]),
            fmt_f64(m[1]),
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            (inside[i] as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `<x1>,<x2>,stable` per grid point.
pub fn write_grid_csv(path: &Path, grid: &[GridPoint], names: [&str; 2]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record([names[0], names[1], "stable"])?;
    for g in grid {
        w.write_record([
            fmt_f64(g.x[0]),
            fmt_f64(g.x[1]),
            (g.stable as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        for v in [std::f64::consts::PI, -1.234e-300, 6.02e23] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
