//! Analysis configuration: TOML file format, presets and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tlroa_core::dynsys::IntegrationOptions;
use tlroa_core::models::{FaultSpec, WtParams};

use crate::error::CliError;

pub const PRESET_TABLE_1: &str = "paper-table-1";
pub const PRESET_VAN_DER_POL: &str = "van-der-pol";
pub const PRESETS: [&str; 2] = [PRESET_TABLE_1, PRESET_VAN_DER_POL];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    VanDerPol,
    WtSwing,
}

/// Wind-turbine parameters; currents in pu, ramp rates in A/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtConfig {
    pub s_base: f64,
    pub v_g_nom: f64,
    pub f_g: f64,
    pub scr: f64,
    pub x_over_r: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub i_d0: f64,
    pub i_q0: f64,
    /// One scenario per entry.
    pub ramp_rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_fault_i_q: Option<f64>,
    pub fault: FaultConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub v_g: f64,
    pub i_d: f64,
    pub i_q: f64,
}

impl WtConfig {
    pub fn table_1() -> Self {
        let p = WtParams::table_1();
        Self {
            s_base: p.s_base,
            v_g_nom: p.v_g_nom,
            f_g: p.f_g,
            scr: p.scr,
            x_over_r: p.x_over_r,
            k_p: p.k_p,
            k_i: p.k_i,
            i_d0: p.i_d0,
            i_q0: p.i_q0,
            ramp_rates: vec![28.4e3, 42.6e3],
            post_fault_i_q: p.post_fault_i_q,
            fault: FaultConfig {
                v_g: p.fault.v_g,
                i_d: p.fault.i_d,
                i_q: p.fault.i_q,
            },
        }
    }

    pub fn params(&self, ramp_rate: f64) -> WtParams {
        WtParams {
            s_base: self.s_base,
            v_g_nom: self.v_g_nom,
            f_g: self.f_g,
            scr: self.scr,
            x_over_r: self.x_over_r,
            k_p: self.k_p,
            k_i: self.k_i,
            i_d0: self.i_d0,
            i_q0: self.i_q0,
            ramp_rate,
            fault: FaultSpec {
                v_g: self.fault.v_g,
                i_d: self.fault.i_d,
                i_q: self.fault.i_q,
            },
            post_fault_i_q: self.post_fault_i_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wt: Option<WtConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Keyword {
    Maximize,
    Settling,
}

/// A number or a keyword, e.g. `level = 0.001` or `level = "maximize"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberOr {
    Value(f64),
    Keyword(Keyword),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Row-major weight matrix of the Lyapunov equation.
    pub q: Vec<Vec<f64>>,
    /// Seed level `c`, or `"maximize"` for the ring-sampled maximum.
    pub level: NumberOr,
    /// Upper bound for `"maximize"`.
    pub c_max: f64,
    pub ring_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlroaOptions {
    pub samples: usize,
    /// Backward time after the ramp in seconds, or `"settling"` to derive
    /// it from the linearization's slowest decay rate.
    pub horizon: NumberOr,
    pub settling_time_constants: f64,
    pub max_samples: usize,
    /// Fraction of the image bounding-box diagonal.
    pub max_gap: f64,
    pub max_depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpKind {
    Srf,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultOptions {
    pub jump: JumpKind,
    /// Fault horizon in seconds; when absent, the time for the angle to
    /// slip `revolutions` turns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    pub revolutions: f64,
    pub dt_out: f64,
    /// Settling dwell of the window check.
    pub dwell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOptions {
    pub n_x1: usize,
    pub n_x2: usize,
    /// Half-open range along the first state.
    pub x1: [f64; 2],
    /// Closed range along the second state.
    pub x2: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub rtol: f64,
    pub atol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

impl IntegrationConfig {
    pub fn options(&self) -> IntegrationOptions {
        let mut o = IntegrationOptions::with_tolerances(self.rtol, self.atol);
        if let Some(h) = self.max_step {
            o.max_step = h;
        }
        o
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub model: ModelConfig,
    pub lyapunov: LyapunovConfig,
    pub tlroa: TlroaOptions,
    pub fault: FaultOptions,
    pub grid: GridOptions,
    pub integration: IntegrationConfig,
    pub output: OutputConfig,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub seed: u64,
}

fn default_output() -> OutputConfig {
    OutputConfig {
        dir: PathBuf::from("out"),
        formats: vec![Format::Csv, Format::Json, Format::Svg],
    }
}

impl AnalysisConfig {
    pub fn table_1() -> Self {
        Self {
            model: ModelConfig {
                kind: ModelKind::WtSwing,
                wt: Some(WtConfig::table_1()),
            },
            lyapunov: LyapunovConfig {
                q: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                level: NumberOr::Value(1e-3),
                c_max: 1.0,
                ring_samples: 720,
            },
            tlroa: TlroaOptions {
                samples: 186,
                horizon: NumberOr::Keyword(Keyword::Settling),
                settling_time_constants: tlroa_core::linstab::SETTLING_TIME_CONSTANTS,
                max_samples: 250,
                max_gap: 0.02,
                max_depth: 12,
            },
            fault: FaultOptions {
                jump: JumpKind::Srf,
                t_max: None,
                revolutions: 3.0,
                dt_out: 1e-3,
                dwell: 0.5,
            },
            grid: GridOptions {
                n_x1: 50,
                n_x2: 50,
                x1: [-std::f64::consts::PI, std::f64::consts::PI],
                x2: [-40.0, 40.0],
            },
            integration: IntegrationConfig {
                rtol: 1e-7,
                atol: 1e-9,
                max_step: None,
            },
            output: default_output(),
            jobs: 0,
            seed: 0,
        }
    }

    pub fn van_der_pol() -> Self {
        Self {
            model: ModelConfig {
                kind: ModelKind::VanDerPol,
                wt: None,
            },
            lyapunov: LyapunovConfig {
                q: vec![vec![1.0, -0.5], vec![-0.5, 1.0]],
                level: NumberOr::Keyword(Keyword::Maximize),
                c_max: 10.0,
                ring_samples: 720,
            },
            tlroa: TlroaOptions {
                samples: 64,
                horizon: NumberOr::Value(10.0),
                settling_time_constants: tlroa_core::linstab::SETTLING_TIME_CONSTANTS,
                max_samples: 250,
                max_gap: 0.02,
                max_depth: 12,
            },
            fault: FaultOptions {
                jump: JumpKind::Srf,
                t_max: None,
                revolutions: 3.0,
                dt_out: 1e-3,
                dwell: 0.5,
            },
            grid: GridOptions {
                n_x1: 50,
                n_x2: 50,
                x1: [-3.0, 3.0],
                x2: [-3.0, 3.0],
            },
            integration: IntegrationConfig {
                rtol: 1e-7,
                atol: 1e-9,
                max_step: None,
            },
            output: default_output(),
            jobs: 0,
            seed: 0,
        }
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            PRESET_TABLE_1 => Ok(Self::table_1()),
            PRESET_VAN_DER_POL => Ok(Self::van_der_pol()),
            other => Err(CliError::Config(format!(
                "unknown preset `{other}` (expected one of: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    /// Parses a config file. A top-level `preset` key selects the base
    /// configuration (default `paper-table-1`) that the remaining keys
    /// override.
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let preset = match table.remove("preset") {
            None => PRESET_TABLE_1.to_string(),
            Some(toml::Value::String(s)) => s,
            Some(_) => return Err(CliError::Config("`preset` must be a string".into())),
        };
        let mut base = toml::Table::try_from(Self::preset(&preset)?)
            .map_err(|e| CliError::Config(e.to_string()))?;
        // A model switch discards the base model's parameter block.
        if let Some(kind) = table.get("model").and_then(|m| m.get("kind")) {
            if base.get("model").and_then(|m| m.get("kind")) != Some(kind) {
                base.remove("model");
            }
        }
        merge(&mut base, table);
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn wt(&self) -> Result<&WtConfig, CliError> {
        match (&self.model.kind, &self.model.wt) {
            (ModelKind::WtSwing, Some(w)) => Ok(w),
            (ModelKind::WtSwing, None) => {
                Err(CliError::Config("model.wt is required for wt-swing".into()))
            }
            _ => Err(CliError::Config(
                "this command needs model.kind = \"wt-swing\"".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match self.model.kind {
            ModelKind::WtSwing => {
                let w = self.wt()?;
                if w.ramp_rates.is_empty() {
                    return bad("model.wt.ramp_rates must list at least one rate");
                }
                for &r in &w.ramp_rates {
                    w.params(r)
                        .validate()
                        .map_err(|e| CliError::Config(format!("model.wt: {e}")))?;
                }
            }
            ModelKind::VanDerPol => {
                if self.model.wt.is_some() {
                    return bad("model.wt is only valid for kind = \"wt-swing\"");
                }
            }
        }
        let l = &self.lyapunov;
        if l.q.len() != 2
            || l.q.iter().any(|r| r.len() != 2)
            || l.q.iter().flatten().any(|v| !v.is_finite())
        {
            return bad("lyapunov.q must be a finite 2x2 matrix");
        }
        match l.level {
            NumberOr::Value(c) if !finite_pos(c) => return bad("lyapunov.level must be positive"),
            NumberOr::Keyword(Keyword::Settling) => {
                return bad("lyapunov.level must be a number or \"maximize\"")
            }
            _ => {}
        }
        if !finite_pos(l.c_max) {
            return bad("lyapunov.c_max must be positive");
        }
        if l.ring_samples < 8 {
            return bad("lyapunov.ring_samples must be at least 8");
        }
        let t = &self.tlroa;
        if t.samples < 8 {
            return bad("tlroa.samples must be at least 8");
        }
        match t.horizon {
            NumberOr::Value(h) if !(h.is_finite() && h >= 0.0) => {
                return bad("tlroa.horizon must be non-negative")
            }
            NumberOr::Keyword(Keyword::Maximize) => {
                return bad("tlroa.horizon must be a number or \"settling\"")
            }
            _ => {}
        }
        if !finite_pos(t.settling_time_constants) {
            return bad("tlroa.settling_time_constants must be positive");
        }
        if t.max_samples < t.samples {
            return bad("tlroa.max_samples must be at least tlroa.samples");
        }
        if !finite_pos(t.max_gap) {
            return bad("tlroa.max_gap must be positive");
        }
        if t.max_depth > 40 {
            return bad("tlroa.max_depth must be at most 40");
        }
        let f = &self.fault;
        if let Some(tm) = f.t_max {
            if !finite_pos(tm) {
                return bad("fault.t_max must be positive");
            }
        }
        if !finite_pos(f.revolutions)
            || !finite_pos(f.dt_out)
            || !(f.dwell.is_finite() && f.dwell >= 0.0)
        {
            return bad(
                "fault.revolutions and fault.dt_out must be positive, fault.dwell non-negative",
            );
        }
        let g = &self.grid;
        if g.n_x1 == 0 || g.n_x2 < 2 {
            return bad("grid.n_x1 must be positive and grid.n_x2 at least 2");
        }
        if g.x1[1] <= g.x1[0]
            || g.x2[1] <= g.x2[0]
            || g.x1.iter().chain(&g.x2).any(|v| !v.is_finite())
        {
            return bad("grid ranges must be finite and increasing");
        }
        self.integration
            .options()
            .validate()
            .map_err(|e| CliError::Config(format!("integration: {e}")))?;
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
