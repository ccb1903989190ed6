//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tlroa_core::dynsys::SystemModel;
use tlroa_core::fault::simulate_fault;
use tlroa_core::linstab::{lyapunov_residual, LevelSet, SquareMatrix};
use tlroa_core::math::{wrap_angle, TAU};
use tlroa_core::models::WtSwingModel;
use tlroa_core::roa::{sample_level_boundary, TlroaResult};
use tlroa_core::StateVector;

use crate::config::{AnalysisConfig, Format, ModelKind, PRESET_TABLE_1};
use crate::error::{CliError, CliResult};
use crate::io::{self, CctJson, LevelSetJson, PolygonMeta};
use crate::par::RayonExecutor;
use crate::pipeline::{
    self, agreement, grid_points, oracle_grid, run_cct, verify_windows, VdpScenario, WtScenario,
};
use crate::svg::PhasePlot;

#[derive(Debug, Parser)]
#[command(
    name = "tlroa",
    version,
    about = "Time-limited region-of-attraction analysis"
)]
pub struct Cli {
    /// TOML analysis config; keys override the selected preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base configuration when no config file is given.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output formats (repeatable).
    #[arg(long = "format", value_enum, global = true)]
    pub formats: Vec<Format>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jacobian at the equilibrium, eigenvalues and Hurwitz verdict.
    Linearize,
    /// Lyapunov matrix, quadratic-form coefficients and seed level set.
    Lyap {
        /// Random interior points for the sign check of dV/dt.
        #[arg(long, default_value_t = 10_000)]
        check_points: usize,
    },
    /// Samples on the boundary of the seed level set.
    RoaInitial,
    /// Backward-mapped time-limited region of attraction.
    Tlroa,
    /// Forward fault-on trajectory from the pre-fault equilibrium.
    FaultTraj,
    /// Clearing-time windows from the jumped fault trajectory.
    Cct {
        /// Check every window midpoint by forward simulation.
        #[arg(long)]
        verify: bool,
    },
    /// Brute-force forward classification over a state grid.
    OracleGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Negative,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Positive
        } else {
            Verdict::Negative
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(Verdict::Positive) => 0,
        Ok(Verdict::Negative) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Config file (or preset) with command-line overrides applied.
pub fn effective_config(cli: &Cli) -> CliResult<AnalysisConfig> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--config and --preset are mutually exclusive".into(),
            ))
        }
        (Some(path), None) => AnalysisConfig::load(path)?,
        (None, Some(name)) => AnalysisConfig::preset(name)?,
        (None, None) => AnalysisConfig::preset(PRESET_TABLE_1)?,
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if !cli.formats.is_empty() {
        let mut f = cli.formats.clone();
        f.sort();
        f.dedup();
        cfg.output.formats = f;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> CliResult<Verdict> {
    let cfg = effective_config(cli)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    std::fs::write(
        cfg.output.dir.join("effective_config.toml"),
        cfg.to_toml_string(),
    )?;
    let exec = RayonExecutor::new(cfg.jobs);
    let ctx = Ctx {
        cfg: &cfg,
        exec: &exec,
    };
    match &cli.command {
        Command::Linearize => ctx.linearize(),
        Command::Lyap { check_points } => ctx.lyap(*check_points),
        Command::RoaInitial => ctx.roa_initial(),
        Command::Tlroa => ctx.tlroa(),
        Command::FaultTraj => ctx.fault_traj(),
        Command::Cct { verify } => ctx.cct(*verify),
        Command::OracleGrid => ctx.oracle_grid(),
    }
}

/// Scale label used in file names, e.g. `28.4kA`.
pub fn rate_tag(rate: f64) -> String {
    if rate.is_infinite() {
        "step".into()
    } else {
        format!("{}kA", rate / 1e3)
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b"];

fn state_names(kind: ModelKind) -> [&'static str; 2] {
    match kind {
        ModelKind::VanDerPol => ["x1", "x2"],
        ModelKind::WtSwing => ["delta", "omega"],
    }
}

fn ellipse(ls: &LevelSet, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| ls.form.ellipse_point(ls.c, TAU * k as f64 / n as f64))
        .collect()
}

fn point(x: &StateVector) -> [f64; 2] {
    [x[0], x[1]]
}

#[derive(Serialize)]
struct LinearizeJson {
    model: String,
    equilibrium: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    eigenvalues: Vec<[f64; 2]>,
    hurwitz: bool,
}

#[derive(Serialize)]
struct SignCheck {
    samples: usize,
    violations: usize,
    seed: u64,
}

#[derive(Serialize)]
struct LyapJson {
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    /// `a x1^2 + b x1 x2 + c x2^2` around the equilibrium.
    coefficients: [f64; 3],
    residual: f64,
    level_set: LevelSetJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_eq: Option<f64>,
    sign_check: SignCheck,
}

#[derive(Serialize)]
struct GridJson {
    points: usize,
    simulations: usize,
    stable: usize,
    tlroa_reverse_integrations: usize,
    median_edge_length: f64,
    stable_far: usize,
    stable_far_inside: usize,
    unstable_far: usize,
    unstable_far_inside: usize,
}

#[derive(Serialize)]
struct VerifiedWindow {
    t_open: f64,
    t_close: f64,
    stable: bool,
    oracle_stable: bool,
}

struct Ctx<'a> {
    cfg: &'a AnalysisConfig,
    exec: &'a RayonExecutor,
}

/// The model and linearization of one analysis target.
enum Target {
    Vdp(VdpScenario),
    Wt(WtScenario),
}

impl Target {
    fn level_set(&self) -> &LevelSet {
        match self {
            Target::Vdp(s) => &s.level_set,
            Target::Wt(s) => &s.level_set,
        }
    }

    fn lin(&self) -> &pipeline::Linearization {
        match self {
            Target::Vdp(s) => &s.lin,
            Target::Wt(s) => &s.lin,
        }
    }

    fn tag(&self) -> String {
        match self {
            Target::Vdp(_) => "vdp".into(),
            Target::Wt(s) => rate_tag(s.ramp_rate()),
        }
    }
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output.dir.join(name)
    }

    fn wants(&self, f: Format) -> bool {
        self.cfg.output.wants(f)
    }

    fn names(&self) -> [&'static str; 2] {
        state_names(self.cfg.model.kind)
    }

    fn targets(&self) -> CliResult<Vec<Target>> {
        match self.cfg.model.kind {
            ModelKind::VanDerPol => Ok(vec![Target::Vdp(VdpScenario::new(self.cfg)?)]),
            ModelKind::WtSwing => self
                .cfg
                .wt()?
                .ramp_rates
                .iter()
                .map(|&r| Ok(Target::Wt(WtScenario::new(self.cfg, r)?)))
                .collect(),
        }
    }

    /// Linearization only; no level set is needed.
    fn linearization(&self) -> CliResult<(String, pipeline::Linearization)> {
        match self.cfg.model.kind {
            ModelKind::VanDerPol => {
                let m = tlroa_core::models::VanDerPolReversed;
                Ok((
                    m.descriptor().name,
                    pipeline::linearize(&m, &(), StateVector::zeros(2))?,
                ))
            }
            ModelKind::WtSwing => {
                let wt = self.cfg.wt()?;
                let m = WtSwingModel::new(wt.params(wt.ramp_rates[0]))?;
                let steady = m.steady_mode();
                let eq = m.equilibrium(&steady)?;
                Ok((m.descriptor().name, pipeline::linearize(&m, &steady, eq)?))
            }
        }
    }

    fn write_svg(&self, name: &str, plot: &PhasePlot) -> CliResult<()> {
        if self.wants(Format::Svg) {
            std::fs::write(self.path(name), plot.render())?;
        }
        Ok(())
    }

    fn linearize(&self) -> CliResult<Verdict> {
        let (model, lin) = self.linearization()?;
        println!("model: {model}");
        println!("equilibrium: {:?}", lin.equilibrium.as_slice());
        println!("A = {:?}", lin.a.rows());
        for (re, im) in &lin.eigenvalues {
            println!("eigenvalue: {re} {:+}i", im);
        }
        println!("hurwitz: {}", lin.hurwitz);
        if self.wants(Format::Json) {
            io::write_json(
                &self.path("linearize.json"),
                &LinearizeJson {
                    model,
                    equilibrium: lin.equilibrium.as_slice().to_vec(),
                    a: lin.a.rows(),
                    eigenvalues: lin.eigenvalues.iter().map(|&(r, i)| [r, i]).collect(),
                    hurwitz: lin.hurwitz,
                },
            )?;
        }
        Ok(Verdict::from_bool(lin.hurwitz))
    }

    fn lyap(&self, check_points: usize) -> CliResult<Verdict> {
        let target = self
            .targets()?
            .into_iter()
            .next()
            .expect("at least one target");
        let ls = target.level_set().clone();
        let p = ls.form.p();
        let (a, b, c) = ls.form.planar_coefficients().expect("planar form");
        let q = SquareMatrix::from_rows(&self.cfg.lyapunov.q)?;
        let residual = lyapunov_residual(&target.lin().a, &q, p);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut violations = 0;
        for _ in 0..check_points {
            // Uniform in the ellipse: radius sqrt(u) on the unit disc mapped through the form.
            let r = rng.gen::<f64>().sqrt().max(1e-6);
            let th = rng.gen::<f64>() * TAU;
            let x = ls.form.ellipse_point(ls.c * r * r, th);
            let vdot = match &target {
                Target::Vdp(s) => ls.form.derivative(&s.model, 0.0, &x, &())?,
                Target::Wt(s) => ls
                    .form
                    .derivative(&s.model, 0.0, &x, &s.model.steady_mode())?,
            };
            violations += (vdot >= 0.0) as usize;
        }
        let (gamma, delta_eq) = match &target {
            Target::Wt(s) => (
                Some(s.model.gamma(&s.model.steady_mode())?),
                Some(s.lin.equilibrium[0]),
            ),
            Target::Vdp(_) => (None, None),
        };
        println!("P = {:?}", p.rows());
        println!("V = {a} x1^2 + {b} x1 x2 + {c} x2^2 (shifted to the equilibrium)");
        println!("residual: {residual:e}");
        println!("level c: {}", ls.c);
        if let (Some(g), Some(d)) = (gamma, delta_eq) {
            println!("gamma: {g}  delta_eq: {d}");
        }
        println!("dV/dt sign check: {violations} of {check_points} interior points non-negative");
        if self.wants(Format::Json) {
            io::write_level_set_json(&self.path("levelset.json"), &ls)?;
            io::write_json(
                &self.path("lyap.json"),
                &LyapJson {
                    p: p.rows(),
                    coefficients: [a, b, c],
                    residual,
                    level_set: LevelSetJson::from(&ls),
                    gamma,
                    delta_eq,
                    sign_check: SignCheck {
                        samples: check_points,
                        violations,
                        seed: self.cfg.seed,
                    },
                },
            )?;
        }
        Ok(Verdict::from_bool(violations == 0))
    }

    fn roa_initial(&self) -> CliResult<Verdict> {
        let target = self
            .targets()?
            .into_iter()
            .next()
            .expect("at least one target");
        let ls = target.level_set();
        let n = self.cfg.tlroa.samples;
        let pts = sample_level_boundary(ls, n)?;
        let names = self.names();
        if self.wants(Format::Csv) {
            let mut w = csv::Writer::from_path(self.path("roa_initial.csv"))?;
            w.write_record(["theta_seed", names[0], names[1]])?;
            for (k, p) in pts.iter().enumerate() {
                let th = TAU * k as f64 / n as f64;
                w.write_record([io::fmt_f64(th), io::fmt_f64(p[0]), io::fmt_f64(p[1])])?;
            }
            w.flush()?;
        }
        if self.wants(Format::Json) {
            io::write_level_set_json(&self.path("levelset.json"), ls)?;
        }
        let mut plot = PhasePlot::new("Seed level set", names[0], names[1]);
        plot.polygon(&ellipse(ls, 256), "#d62728");
        plot.marker(point(ls.form.equilibrium()), "black", Some("equilibrium"));
        self.write_svg("roa_initial.svg", &plot)?;
        println!(
            "{n} boundary samples on V = {} around {:?}",
            ls.c,
            ls.form.equilibrium().as_slice()
        );
        Ok(Verdict::Positive)
    }

    fn tlroa_for(&self, target: &Target) -> CliResult<TlroaResult> {
        match target {
            Target::Vdp(s) => s.tlroa(self.cfg, self.exec),
            Target::Wt(s) => s.tlroa(self.cfg, self.exec),
        }
    }

    fn write_tlroa(&self, tag: &str, r: &TlroaResult) -> CliResult<()> {
        if self.wants(Format::Csv) {
            io::write_polygon_csv(
                &self.path(&format!("tlroa_{tag}.csv")),
                &r.polygon,
                self.names(),
            )?;
        }
        if self.wants(Format::Json) {
            io::write_json(
                &self.path(&format!("tlroa_{tag}.json")),
                &PolygonMeta::from(r),
            )?;
        }
        Ok(())
    }

    fn tlroa(&self) -> CliResult<Verdict> {
        let names = self.names();
        let mut ok = true;
        for target in self.targets()? {
            let tag = target.tag();
            let r = self.tlroa_for(&target)?;
            self.write_tlroa(&tag, &r)?;
            let mut plot = PhasePlot::new(&format!("TLRoA ({tag})"), names[0], names[1]);
            plot.polygon(r.polygon.vertices(), COLORS[0]);
            plot.polygon(&ellipse(&r.level_set, 256), "#d62728");
            plot.marker(
                point(r.level_set.form.equilibrium()),
                "black",
                Some("equilibrium"),
            );
            self.write_svg(&format!("tlroa_{tag}.svg"), &plot)?;
            let simple = r.polygon.is_simple();
            ok &= simple;
            println!(
                "{tag}: {} vertices from {} reverse integrations over {:.6} s, area {}, simple {simple}, refinement exhausted {}",
                r.polygon.len(),
                r.samples_used,
                r.polygon.horizon(),
                r.polygon.area().map(|a| a.to_string()).unwrap_or_else(|_| "n/a".into()),
                r.refinement_exhausted
            );
        }
        Ok(Verdict::from_bool(ok))
    }

    fn fault_traj(&self) -> CliResult<Verdict> {
        let wt = self.cfg.wt()?;
        let sc = WtScenario::new(self.cfg, wt.ramp_rates[0])?;
        let t_max = sc.fault_horizon(self.cfg)?;
        let fault = sc.model.params().fault;
        let tr = simulate_fault(
            &sc.model,
            &fault,
            t_max,
            self.cfg.fault.dt_out,
            &self.cfg.integration.options(),
        )?;
        if self.wants(Format::Csv) {
            io::write_trajectory_csv(&self.path("fault_trajectory.csv"), &tr)?;
        }
        let pts: Vec<[f64; 2]> = tr.states().map(|x| [x[0], x[1]]).collect();
        let mut plot = PhasePlot::new("Fault-on trajectory", "delta", "omega");
        plot.polyline(&pts, "#d62728", 1.2);
        plot.marker(pts[0], "black", Some("pre-fault"));
        self.write_svg("fault_trajectory.svg", &plot)?;
        let last = tr.final_state();
        println!(
            "fault-on trajectory to t = {t_max:.6} s: {} samples, final state {:?}",
            tr.len(),
            last
        );
        Ok(Verdict::Positive)
    }

    fn cct(&self, verify: bool) -> CliResult<Verdict> {
        let wt = self.cfg.wt()?;
        let g = &self.cfg.grid;
        let mut plot = PhasePlot::new("Clearing-time analysis", "delta", "omega").view(g.x1, g.x2);
        let mut ok = true;
        let mut curve_drawn = false;
        for (k, &rate) in wt.ramp_rates.iter().enumerate() {
            let run = run_cct(self.cfg, rate, self.exec)?;
            let tag = rate_tag(rate);
            self.write_tlroa(&tag, &run.tlroa)?;
            if self.wants(Format::Csv) {
                io::write_jumped_csv(
                    &self.path(&format!("jumped_{tag}.csv")),
                    &run.jumped,
                    &run.report.inside,
                )?;
            }
            let checks = if verify {
                Some(verify_windows(&run, self.cfg, self.exec)?)
            } else {
                None
            };
            if self.wants(Format::Json) {
                let name = format!("cct_{tag}.json");
                match &checks {
                    None => io::write_json(&self.path(&name), &CctJson::from(&run.report))?,
                    Some(c) => {
                        let mut j = serde_json::to_value(CctJson::from(&run.report))?;
                        j["windows"] = serde_json::to_value(
                            c.iter()
                                .map(|w| VerifiedWindow {
                                    t_open: w.window.t_open,
                                    t_close: w.window.t_close,
                                    stable: w.window.stable,
                                    oracle_stable: w.oracle_stable,
                                })
                                .collect::<Vec<_>>(),
                        )?;
                        io::write_json(&self.path(&name), &j)?;
                    }
                }
            }
            // Polygon drawn in every period copy that meets the view.
            for shift in period_shifts(&run.tlroa, g.x1) {
                let pts: Vec<[f64; 2]> = run
                    .tlroa
                    .polygon
                    .vertices()
                    .iter()
                    .map(|v| [v[0] + shift, v[1]])
                    .collect();
                plot.polygon(&pts, COLORS[k % COLORS.len()]);
            }
            if !curve_drawn {
                for seg in wrapped_segments(&run.jumped.jumped) {
                    plot.polyline(&seg, "#d62728", 1.0);
                }
                curve_drawn = true;
            }
            println!(
                "{tag}: {} reverse integrations, fault horizon {:.6} s",
                run.tlroa.samples_used,
                run.jumped.base.final_time()
            );
            for (i, w) in run.report.windows.iter().enumerate() {
                let label = if w.stable { "stable" } else { "unstable" };
                match &checks {
                    Some(c) => {
                        let agree = c[i].agrees();
                        ok &= agree;
                        println!(
                            "  [{:.4}, {:.4}] {label}; forward check {} ({})",
                            w.t_open,
                            w.t_close,
                            if c[i].oracle_stable {
                                "settles"
                            } else {
                                "does not settle"
                            },
                            if agree { "agrees" } else { "MISMATCH" }
                        );
                    }
                    None => println!("  [{:.4}, {:.4}] {label}", w.t_open, w.t_close),
                }
            }
        }
        self.write_svg("cct.svg", &plot)?;
        Ok(Verdict::from_bool(ok))
    }

    fn oracle_grid(&self) -> CliResult<Verdict> {
        let pts = grid_points(&self.cfg.grid);
        let opts = self.cfg.integration.options();
        let names = self.names();
        for target in self.targets()? {
            let tag = target.tag();
            let (grid, tl) = match &target {
                Target::Vdp(s) => {
                    let cfg = s.tlroa_config(self.cfg);
                    let g = oracle_grid(
                        &s.model,
                        &s.level_set,
                        &s.schedule(),
                        0.0,
                        cfg.t_end,
                        &[],
                        &pts,
                        &opts,
                        self.exec,
                    );
                    (g, s.tlroa(self.cfg, self.exec)?)
                }
                Target::Wt(s) => {
                    let cfg = s.tlroa_config(self.cfg);
                    let sched = s.post_clearance_schedule()?;
                    let g = oracle_grid(
                        &s.model,
                        &s.level_set,
                        &sched,
                        0.0,
                        cfg.t_end,
                        &cfg.wrap_dims,
                        &pts,
                        &opts,
                        self.exec,
                    );
                    (g, s.tlroa(self.cfg, self.exec)?)
                }
            };
            let margin = tl.polygon.median_edge_length();
            let agr = agreement(&tl.polygon, &grid, margin);
            let stable = grid.iter().filter(|g| g.stable).count();
            if self.wants(Format::Csv) {
                io::write_grid_csv(&self.path(&format!("oracle_grid_{tag}.csv")), &grid, names)?;
            }
            if self.wants(Format::Json) {
                io::write_json(
                    &self.path(&format!("oracle_grid_{tag}.json")),
                    &GridJson {
                        points: grid.len(),
                        simulations: grid.len(),
                        stable,
                        tlroa_reverse_integrations: tl.samples_used,
                        median_edge_length: margin,
                        stable_far: agr.stable_far,
                        stable_far_inside: agr.stable_far_inside,
                        unstable_far: agr.unstable_far,
                        unstable_far_inside: agr.unstable_far_inside,
                    },
                )?;
            }
            println!(
                "{tag}: {} forward runs, {stable} stable; away from the boundary {}/{} stable inside, {}/{} unstable inside; TLRoA used {} reverse runs",
                grid.len(),
                agr.stable_far_inside,
                agr.stable_far,
                agr.unstable_far_inside,
                agr.unstable_far,
                tl.samples_used
            );
        }
        Ok(Verdict::Positive)
    }
}

fn period_shifts(r: &TlroaResult, view: [f64; 2]) -> Vec<f64> {
    if r.polygon.wrap_dims().is_empty() {
        return vec![0.0];
    }
    let (lo, hi) = r.polygon.bounding_box();
    let k0 = ((view[0] - hi[0]) / TAU).floor() as i64;
    let k1 = ((view[1] - lo[0]) / TAU).ceil() as i64;
    (k0..=k1).map(|k| k as f64 * TAU).collect()
}

/// Splits a curve into pieces with the angle wrapped to `[-pi, pi)`,
/// breaking where the wrap jumps.
fn wrapped_segments(pts: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    let mut out: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for p in pts {
        let q = [wrap_angle(p[0]), p[1]];
        if let Some(last) = cur.last() {
            if (q[0] - last[0]).abs() > std::f64::consts::PI {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.push(q);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
