//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlroa::config::AnalysisConfig;
use tlroa::par::RayonExecutor;
use tlroa::pipeline::{agreement, grid_points, oracle_grid, run_cct, VdpScenario, WtScenario};
use tlroa::CliResult;
use tlroa_core::dynsys::{propagate, ModeSchedule};
use tlroa_core::linstab::SquareMatrix;
use tlroa_core::models::VanDerPolReversed;
use tlroa_core::roa::round_trip_levels;

const RATE_LOW: f64 = 28.4e3;
const RATE_HIGH: f64 = 42.6e3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> CliResult<Outcome> {
    Ok(Outcome { pass, detail })
}

fn lyapunov_van_der_pol() -> CliResult<Outcome> {
    let cfg = AnalysisConfig::van_der_pol();
    let s = VdpScenario::new(&cfg)?;
    let expected_a = SquareMatrix::from_row_slice(2, &[0.0, -1.0, 1.0, -1.0])?;
    let a_err = (s.lin.a.inner() - expected_a.inner()).amax();
    let q = SquareMatrix::from_rows(&cfg.lyapunov.q)?;
    let p = s.level_set.form.p();
    let p_err = (p.inner() - q.inner()).amax();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut v_err: f64 = 0.0;
    for _ in 0..100 {
        let x: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let want = x[0] * x[0] - x[0] * x[1] + x[1] * x[1];
        v_err = v_err.max((s.level_set.form.value(&x) - want).abs());
    }
    outcome(
        a_err < 1e-6 && p_err <= 1e-10 && v_err <= 1e-10,
        format!("|A-A0|={a_err:.2e} |P-Q|={p_err:.2e} max|V-V0|={v_err:.2e}"),
    )
}

fn wt_coefficients() -> CliResult<Outcome> {
    let cfg = AnalysisConfig::table_1();
    let s = WtScenario::new(&cfg, RATE_LOW)?;
    let (a, b, c) = s.level_set.form.planar_coefficients().expect("planar");
    let (a0, c0) = (49.66, 0.129);
    let pass = ((a - a0) / a0).abs() <= 0.02 && b.abs() < 0.01 && ((c - c0) / c0).abs() <= 0.02;
    let gamma = s.model.gamma(&s.model.steady_mode())?;
    outcome(
        pass,
        format!(
            "(a,b,c)=({a:.4},{b:.5},{c:.4}) want ({a0},0.0026,{c0}); gamma={gamma:.5} delta_eq={:.5}",
            s.lin.equilibrium[0]
        ),
    )
}

fn van_der_pol_round_trip_levels(exec: &RayonExecutor) -> CliResult<Outcome> {
    let cfg = AnalysisConfig::van_der_pol();
    let s = VdpScenario::new(&cfg)?;
    let tl = s.tlroa(&cfg, exec)?;
    let levels = round_trip_levels(&s.model, &tl, &s.schedule(), &s.tlroa_config(&cfg), exec)?;
    let ok = levels.iter().filter(|&&r| r <= 1.05).count();
    let worst = levels.iter().cloned().fold(0.0, f64::max);
    outcome(
        s.horizon == 10.0 && cfg.tlroa.samples == 64 && ok == levels.len(),
        format!(
            "horizon {} n {} vertices {}: {ok}/{} within 1.05c, worst V/c={worst:.6}",
            s.horizon,
            cfg.tlroa.samples,
            tl.polygon.len(),
            levels.len()
        ),
    )
}

struct GridStats {
    runs: usize,
    reverse: usize,
}

fn oracle_grid_agreement(exec: &RayonExecutor, stats: &mut GridStats) -> CliResult<Outcome> {
    let cfg = AnalysisConfig::table_1();
    let started = Instant::now();
    let s = WtScenario::new(&cfg, RATE_LOW)?;
    let tl = s.tlroa(&cfg, exec)?;
    let tc = s.tlroa_config(&cfg);
    let pts = grid_points(&cfg.grid);
    let grid = oracle_grid(
        &s.model,
        &s.level_set,
        &s.post_clearance_schedule()?,
        0.0,
        tc.t_end,
        &tc.wrap_dims,
        &pts,
        &cfg.integration.options(),
        exec,
    );
    let elapsed = started.elapsed().as_secs_f64();
    stats.runs = grid.len();
    stats.reverse = tl.samples_used;
    let margin = tl.polygon.median_edge_length();
    let ag = agreement(&tl.polygon, &grid, margin);
    let frac = ag.stable_inside_fraction();
    outcome(
        grid.len() == 2500
            && ag.stable_far > 0
            && frac >= 0.99
            && ag.unstable_far_inside == 0
            && elapsed < 600.0,
        format!(
            "{} points, margin {margin:.4}: {}/{} far stable inside, {}/{} far unstable inside, {elapsed:.1} s",
            grid.len(),
            ag.stable_far_inside,
            ag.stable_far,
            ag.unstable_far_inside,
            ag.unstable_far
        ),
    )
}

fn area_ordering(exec: &RayonExecutor) -> CliResult<Outcome> {
    let cfg = AnalysisConfig::table_1();
    let lo = WtScenario::new(&cfg, RATE_LOW)?.tlroa(&cfg, exec)?;
    let hi = WtScenario::new(&cfg, RATE_HIGH)?.tlroa(&cfg, exec)?;
    match (lo.polygon.area(), hi.polygon.area()) {
        (Ok(a_lo), Ok(a_hi)) => outcome(
            a_hi < a_lo,
            format!("area(42.6)={a_hi:.3} area(28.4)={a_lo:.3}"),
        ),
        _ => outcome(false, "a polygon self-intersects".into()),
    }
}

fn cct_windows(exec: &RayonExecutor) -> CliResult<Outcome> {
    const EDGE: f64 = 0.01;
    let cfg = AnalysisConfig::table_1();
    let run = run_cct(&cfg, RATE_LOW, exec)?;
    let horizon = run.jumped.base.final_time();
    let stable: Vec<_> = run.report.stable_windows().collect();
    let mut pass = stable.len() >= 2;
    let mut notes = Vec::new();
    for w in &stable {
        let mid = run.scenario.verify_clearance(&cfg, w.midpoint())?;
        let inner_open = run.scenario.verify_clearance(&cfg, w.t_open + EDGE)?;
        let inner_close = run.scenario.verify_clearance(&cfg, w.t_close - EDGE)?;
        let outer_open =
            w.t_open - EDGE < 0.0 || !run.scenario.verify_clearance(&cfg, w.t_open - EDGE)?;
        let outer_close =
            w.t_close + EDGE > horizon || !run.scenario.verify_clearance(&cfg, w.t_close + EDGE)?;
        let ok = mid && inner_open && inner_close && outer_open && outer_close;
        pass &= ok;
        notes.push(format!(
            "[{:.4},{:.4}] mid {} edges {}{}{}{}",
            w.t_open,
            w.t_close,
            if mid { "ok" } else { "FAIL" },
            flag(outer_open),
            flag(inner_open),
            flag(inner_close),
            flag(outer_close),
        ));
    }
    outcome(
        pass,
        format!(
            "{} stable windows within {horizon:.3} s: {}",
            stable.len(),
            notes.join("; ")
        ),
    )
}

fn flag(b: bool) -> char {
    if b {
        '+'
    } else {
        '-'
    }
}

fn cost_ratio(stats: &GridStats) -> CliResult<Outcome> {
    let ratio = stats.reverse as f64 / stats.runs as f64;
    outcome(
        stats.reverse <= 250 && stats.runs >= 2500 && ratio < 0.10,
        format!(
            "{} reverse vs {} forward runs, ratio {ratio:.4}",
            stats.reverse, stats.runs
        ),
    )
}

fn forward_reverse_round_trip() -> CliResult<Outcome> {
    let opts = AnalysisConfig::van_der_pol().integration.options();
    let sched = ModeSchedule::constant(());
    let mut worst: f64 = 0.0;
    for x0 in [[0.5, 0.0], [1.0, -0.5], [-1.2, 0.8], [0.0, 1.5]] {
        let x1 = propagate(&VanDerPolReversed, &x0, 0.0, 5.0, &sched, &opts)?;
        let back = propagate(&VanDerPolReversed, &x1, 5.0, 0.0, &sched, &opts)?;
        worst = worst.max(((back[0] - x0[0]).powi(2) + (back[1] - x0[1]).powi(2)).sqrt());
    }
    outcome(worst <= 1e-6, format!("worst round-trip error {worst:.3e}"))
}

fn report(id: u32, name: &str, r: CliResult<Outcome>) -> bool {
    match r {
        Ok(o) => {
            let tag = if o.pass { "PASS" } else { "FAIL" };
            println!("criterion {id} {tag} {name}: {}", o.detail);
            o.pass
        }
        Err(e) => {
            println!("criterion {id} FAIL {name}: error {e}");
            false
        }
    }
}

fn main() {
    let exec = RayonExecutor::new(0);
    let mut stats = GridStats {
        runs: 0,
        reverse: 0,
    };
    let results = [
        report(1, "lyapunov-van-der-pol", lyapunov_van_der_pol()),
        report(2, "wt-lyapunov-coefficients", wt_coefficients()),
        report(
            3,
            "van-der-pol-round-trip-levels",
            van_der_pol_round_trip_levels(&exec),
        ),
        report(
            4,
            "oracle-grid-agreement",
            oracle_grid_agreement(&exec, &mut stats),
        ),
        report(5, "area-shrinks-with-ramp-rate", area_ordering(&exec)),
        report(6, "cct-windows", cct_windows(&exec)),
        report(7, "reverse-vs-grid-cost", cost_ratio(&stats)),
        report(
            8,
            "forward-reverse-round-trip",
            forward_reverse_round_trip(),
        ),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
