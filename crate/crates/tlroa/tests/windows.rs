use tlroa::config::{AnalysisConfig, JumpKind};
use tlroa::par::RayonExecutor;
use tlroa::pipeline::{run_cct, verify_windows};

#[test]
fn windows_tile_the_fault_horizon_and_pass_the_oracle() {
    let cfg = AnalysisConfig::table_1();
    let exec = RayonExecutor::new(0);
    let run = run_cct(&cfg, 28.4e3, &exec).unwrap();
    let w = &run.report.windows;
    assert_eq!(w[0].t_open, 0.0);
    assert!(w
        .windows(2)
        .all(|p| p[0].t_close == p[1].t_open && p[0].stable != p[1].stable));
    assert_eq!(w.last().unwrap().t_close, run.jumped.base.final_time());
    assert!(run.report.stable_windows().count() >= 2);
    for check in verify_windows(&run, &cfg, &exec).unwrap() {
        assert!(check.agrees(), "{check:?}");
    }
}

#[test]
fn identity_jump_is_selectable() {
    let mut cfg = AnalysisConfig::table_1();
    cfg.fault.jump = JumpKind::Identity;
    let run = run_cct(&cfg, 28.4e3, &RayonExecutor::new(1)).unwrap();
    for (i, x) in run.jumped.jumped.iter().enumerate() {
        assert_eq!(x[..], run.jumped.base.state(i)[..]);
    }
}

#[test]
#[ignore = "known violation: the first 42.6 kA/s stable window closes about 4 ms after the 28.4 kA/s one"]
fn faster_ramp_closes_the_first_window_no_later() {
    let cfg = AnalysisConfig::table_1();
    let exec = RayonExecutor::new(0);
    let first_close = |rate| {
        run_cct(&cfg, rate, &exec)
            .unwrap()
            .report
            .stable_windows()
            .next()
            .unwrap()
            .t_close
    };
    assert!(first_close(42.6e3) <= first_close(28.4e3));
}
