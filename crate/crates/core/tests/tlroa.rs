use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlroa_core::dynsys::{propagate, ModeSchedule};
use tlroa_core::exec::Sequential;
use tlroa_core::linstab::{
    jacobian, maximize_level, solve_lyapunov, LevelSearch, LevelSet, QuadraticForm, SquareMatrix,
};
use tlroa_core::models::VanDerPolReversed;
use tlroa_core::roa::{estimate_tlroa, round_trip_levels, RefineOptions, TlroaConfig};
use tlroa_core::StateVector;

fn seed() -> LevelSet {
    let a = jacobian(&VanDerPolReversed, 0.0, &[0.0, 0.0], &()).unwrap();
    let q = SquareMatrix::from_row_slice(2, &[1.0, -0.5, -0.5, 1.0]).unwrap();
    let form = QuadraticForm::new(solve_lyapunov(&a, &q).unwrap(), StateVector::zeros(2)).unwrap();
    maximize_level(
        &form,
        &VanDerPolReversed,
        0.0,
        &(),
        10.0,
        &LevelSearch::default(),
    )
    .unwrap()
}

#[test]
fn boundary_maps_back_onto_the_seed() {
    let ls = seed();
    let sched = ModeSchedule::constant(());
    let cfg = TlroaConfig::new(0.0, 5.0, 32);
    let res = estimate_tlroa(&VanDerPolReversed, &ls, &sched, &cfg, &Sequential).unwrap();
    assert!(res.polygon.is_simple());
    assert!(res.polygon.area().unwrap() > std::f64::consts::PI * ls.c);
    let levels = round_trip_levels(&VanDerPolReversed, &res, &sched, &cfg, &Sequential).unwrap();
    assert!(
        levels.iter().all(|&r| (0.95..=1.05).contains(&r)),
        "{levels:?}"
    );
}

#[test]
fn interior_points_reach_the_seed_by_the_horizon() {
    let ls = seed();
    let sched = ModeSchedule::constant(());
    let cfg = TlroaConfig::new(0.0, 5.0, 32);
    let res = estimate_tlroa(&VanDerPolReversed, &ls, &sched, &cfg, &Sequential).unwrap();
    let poly = &res.polygon;
    let margin = 3.0 * poly.median_edge_length();
    let (lo, hi) = poly.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tested = 0;
    while tested < 200 {
        let x = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
        if !poly.contains(x) || poly.distance_to_boundary(x) < margin {
            continue;
        }
        tested += 1;
        let end = propagate(&VanDerPolReversed, &x, 0.0, 5.0, &sched, &cfg.integration).unwrap();
        assert!(
            ls.contains(&end),
            "{x:?} ends at V/c = {}",
            ls.value(&end) / ls.c
        );
    }
}

#[test]
fn more_samples_do_not_shrink_the_polygon() {
    let ls = seed();
    let sched = ModeSchedule::constant(());
    let mut prev: Option<(f64, f64)> = None;
    for n in [16, 32, 64, 128] {
        let mut cfg = TlroaConfig::new(0.0, 5.0, n);
        cfg.refine = RefineOptions::disabled();
        let res = estimate_tlroa(&VanDerPolReversed, &ls, &sched, &cfg, &Sequential).unwrap();
        let area = res.polygon.area().unwrap();
        let (lo, hi) = res.polygon.bounding_box();
        let gap = 0.02 * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        if let Some((a0, tol)) = prev {
            assert!(area >= a0 - tol, "n = {n}: {area} < {a0}");
        }
        prev = Some((area, gap * res.polygon.perimeter()));
    }
}

#[test]
fn refinement_respects_the_gap_or_reports_exhaustion() {
    let ls = seed();
    let sched = ModeSchedule::constant(());
    let cfg = TlroaConfig::new(0.0, 10.0, 16);
    let res = estimate_tlroa(&VanDerPolReversed, &ls, &sched, &cfg, &Sequential).unwrap();
    assert!(res.samples_used <= cfg.refine.max_samples);
    assert_eq!(res.samples_used, res.polygon.len());
    if !res.refinement_exhausted {
        assert!(res.polygon.max_relative_gap() <= 0.02 + 1e-12);
    }
    let angles = res.polygon.seed_angles();
    assert!(angles.windows(2).all(|w| w[0] < w[1]));
}
