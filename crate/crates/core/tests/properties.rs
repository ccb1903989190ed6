use proptest::prelude::*;
use tlroa_core::dynsys::{propagate, IntegrationOptions, ModeSchedule, Segment};
use tlroa_core::linstab::{
    lyapunov_residual, solve_lyapunov, LevelSet, QuadraticForm, SquareMatrix,
};
use tlroa_core::math::TAU;
use tlroa_core::models::VanDerPolReversed;
use tlroa_core::roa::{point_in_polygon, signed_area, BoundaryPolygon, Point};
use tlroa_core::StateVector;

/// Random Hurwitz 2x2 matrix from trace < 0, det > 0.
fn hurwitz() -> impl Strategy<Value = SquareMatrix> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_filter("hurwitz", |(a, b, c, d)| {
            a + d < -0.1 && a * d - b * c > 0.1
        })
        .prop_map(|(a, b, c, d)| SquareMatrix::from_row_slice(2, &[a, b, c, d]).unwrap())
}

/// Random symmetric positive-definite 2x2 matrix.
fn spd() -> impl Strategy<Value = SquareMatrix> {
    (0.2..3.0f64, 0.2..3.0f64, -0.9..0.9f64).prop_map(|(a, c, r)| {
        let b = r * (a * c).sqrt();
        SquareMatrix::from_row_slice(2, &[a, b, b, c]).unwrap()
    })
}

/// Star-shaped polygon around the origin: sorted angles, positive radii.
fn star(n: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(0.5..2.0f64, n).prop_map(move |r| {
        r.iter()
            .enumerate()
            .map(|(k, &rk)| {
                let th = TAU * k as f64 / r.len() as f64;
                [rk * th.cos(), rk * th.sin()]
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_round_trip(x1 in -1.0..1.0f64, x2 in -1.0..1.0f64, t in 0.5..5.0f64) {
        let opts = IntegrationOptions::default();
        let sched = ModeSchedule::constant(());
        let fwd = propagate(&VanDerPolReversed, &[x1, x2], 0.0, t, &sched, &opts).unwrap();
        let back = propagate(&VanDerPolReversed, &fwd, t, 0.0, &sched, &opts).unwrap();
        let err = ((back[0] - x1).powi(2) + (back[1] - x2).powi(2)).sqrt();
        let norm = (x1 * x1 + x2 * x2).sqrt();
        prop_assert!(err <= 10.0 * opts.rtol * (1.0 + norm), "err {}", err);
    }

    #[test]
    fn lyapunov_solution_is_spd_with_small_residual(a in hurwitz(), q in spd()) {
        let p = solve_lyapunov(&a, &q).unwrap();
        prop_assert!(p.is_symmetric(1e-12));
        prop_assert!(p.cholesky().is_ok());
        let scale = p.frobenius_norm() * a.frobenius_norm() + q.frobenius_norm();
        prop_assert!(lyapunov_residual(&a, &q, &p) <= 1e-10 * scale);
    }

    #[test]
    fn lyapunov_scaling_covariance(
        a in hurwitz(),
        q in spd(),
        alpha in 0.01..100.0f64,
        c in 0.1..5.0f64,
        probes in prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64), 64),
    ) {
        let p = solve_lyapunov(&a, &q).unwrap();
        let ps = solve_lyapunov(&a, &q.scale(alpha)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = alpha * p.get(i, j);
                prop_assert!((ps.get(i, j) - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
        let eq = StateVector::zeros(2);
        let base = LevelSet::new(QuadraticForm::new(p, eq.clone()).unwrap(), c).unwrap();
        let scaled = LevelSet::new(QuadraticForm::new(ps, eq).unwrap(), alpha * c).unwrap();
        for (x, y) in probes {
            let v = base.value(&[x, y]) / c;
            // Skip points on the boundary, where rounding decides.
            if (v - 1.0).abs() > 1e-9 {
                prop_assert_eq!(base.contains(&[x, y]), scaled.contains(&[x, y]));
            }
        }
    }

    #[test]
    fn containment_is_invariant_under_angle_shifts(
        pts in star(24),
        cx in -3.0..3.0f64,
        qx in -3.0..3.0f64,
        qy in -3.0..3.0f64,
        k in -3i32..=3,
    ) {
        let verts: Vec<Point> = pts.iter().map(|p| [p[0] + cx, p[1]]).collect();
        let angles = (0..verts.len()).map(|i| TAU * i as f64 / verts.len() as f64).collect();
        let poly = BoundaryPolygon::new(verts, angles, 1.0, vec![(0, TAU)]).unwrap();
        let shifted = [qx + k as f64 * TAU, qy];
        prop_assert_eq!(poly.contains([qx, qy]), poly.contains(shifted));
    }

    #[test]
    fn polygon_geometry(pts in star(16), dx in -5.0..5.0f64, dy in -5.0..5.0f64) {
        let a = signed_area(&pts);
        prop_assert!(a > 0.0);
        let moved: Vec<Point> = pts.iter().map(|p| [p[0] + dx, p[1] + dy]).collect();
        prop_assert!((signed_area(&moved) - a).abs() <= 1e-9 * a.max(1.0));
        let mut rev = pts.clone();
        rev.reverse();
        prop_assert!((signed_area(&rev) + a).abs() <= 1e-12 * a.max(1.0));
        // Star-shaped around the origin, so the centre is inside and a far
        // point is not.
        prop_assert!(point_in_polygon(&pts, [0.0, 0.0]));
        prop_assert!(!point_in_polygon(&pts, [10.0, 10.0]));
        let angles = (0..pts.len()).map(|i| TAU * i as f64 / pts.len() as f64).collect();
        let poly = BoundaryPolygon::new(pts.clone(), angles, 1.0, vec![]).unwrap();
        prop_assert!(poly.is_simple());
        let per: f64 = poly.edge_lengths().iter().sum();
        prop_assert!((per - poly.perimeter()).abs() <= 1e-12 * per);
    }

    #[test]
    fn schedule_lookup_is_right_continuous(
        gaps in prop::collection::vec(0.01..2.0f64, 1..6),
        frac in 0.0..1.0f64,
    ) {
        let mut t = 0.0;
        let mut segs = Vec::new();
        for (i, g) in gaps.iter().enumerate() {
            segs.push(Segment { start: t, mode_id: i as u32, mode: i });
            t += g;
        }
        let end = t;
        let sched = ModeSchedule::new(segs.clone()).unwrap();
        for s in &segs {
            prop_assert_eq!(sched.segment_at(s.start).mode_id, s.mode_id);
        }
        let q = frac * end;
        let active = segs.iter().filter(|s| s.start <= q).count() - 1;
        prop_assert_eq!(sched.index_at(q), active);
    }
}
