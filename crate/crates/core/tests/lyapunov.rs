use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlroa_core::linstab::{
    jacobian, lyapunov_residual, maximize_level, solve_lyapunov, LevelSearch, QuadraticForm,
    SquareMatrix,
};
use tlroa_core::models::VanDerPolReversed;
use tlroa_core::StateVector;

fn vdp_form() -> (SquareMatrix, SquareMatrix, QuadraticForm) {
    let a = jacobian(&VanDerPolReversed, 0.0, &[0.0, 0.0], &()).unwrap();
    let q = SquareMatrix::from_row_slice(2, &[1.0, -0.5, -0.5, 1.0]).unwrap();
    let p = solve_lyapunov(&a, &q).unwrap();
    (a, q, QuadraticForm::new(p, StateVector::zeros(2)).unwrap())
}

/// Direct solve of the three unknowns of a symmetric 2x2 `A^T P + P A = -Q`.
fn lyapunov_2x2(a: [[f64; 2]; 2], q: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let [[a11, a12], [a21, a22]] = a;
    // Unknowns (p11, p12, p22).
    let m = [
        [2.0 * a11, 2.0 * a21, 0.0],
        [a12, a11 + a22, a21],
        [0.0, 2.0 * a12, 2.0 * a22],
    ];
    let rhs = [-q[0][0], -q[0][1], -q[1][1]];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = rhs[i];
        }
        *xk = det(mk) / d;
    }
    [[x[0], x[1]], [x[1], x[2]]]
}

#[test]
fn van_der_pol_p_equals_q() {
    let (a, q, form) = vdp_form();
    assert_eq!(a.rows(), vec![vec![0.0, -1.0], vec![1.0, -1.0]]);
    let p = form.p();
    for i in 0..2 {
        for j in 0..2 {
            assert!((p.get(i, j) - q.get(i, j)).abs() <= 1e-10);
        }
    }
    assert!(lyapunov_residual(&a, &q, p) < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let want = x[0] * x[0] - x[0] * x[1] + x[1] * x[1];
        assert!((form.value(&x) - want).abs() < 1e-10);
    }
}

#[test]
fn kronecker_solve_matches_direct_2x2() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 50 {
        let a = [
            [rng.gen_range(-3.0..1.0), rng.gen_range(-3.0..3.0)],
            [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..1.0)],
        ];
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(tr < -0.1 && det > 0.1) {
            continue;
        }
        let q = [[2.0, 0.3], [0.3, 1.0]];
        let am = SquareMatrix::from_row_slice(2, &[a[0][0], a[0][1], a[1][0], a[1][1]]).unwrap();
        let qm = SquareMatrix::from_row_slice(2, &[2.0, 0.3, 0.3, 1.0]).unwrap();
        let p = solve_lyapunov(&am, &qm).unwrap();
        let want = lyapunov_2x2(a, q);
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                assert!((p.get(i, j) - w).abs() < 1e-9 * w.abs().max(1.0));
            }
        }
        checked += 1;
    }
}

#[test]
fn negative_identity_gives_half_identity() {
    let a = SquareMatrix::from_row_slice(2, &[-1.0, 0.0, 0.0, -1.0]).unwrap();
    let p = solve_lyapunov(&a, &SquareMatrix::identity(2)).unwrap();
    assert_eq!(p.rows(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
}

fn vdp_derivative(x: [f64; 2]) -> f64 {
    // V = x1^2 - x1 x2 + x2^2 along x1' = -x2, x2' = x1 - x2 (1 - x1^2).
    let f = [-x[1], x[0] - x[1] * (1.0 - x[0] * x[0])];
    (2.0 * x[0] - x[1]) * f[0] + (2.0 * x[1] - x[0]) * f[1]
}

#[test]
fn maximized_level_has_negative_derivative_inside() {
    let (_, _, form) = vdp_form();
    let ls = maximize_level(
        &form,
        &VanDerPolReversed,
        0.0,
        &(),
        10.0,
        &LevelSearch::default(),
    )
    .unwrap();
    let c = ls.c;
    assert!(c > 0.5 && c < 10.0, "c = {c}");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = (2.0 * c).sqrt() * 1.2;
    let mut tested = 0;
    let mut violations = 0;
    while tested < 10_000 {
        let x = [rng.gen_range(-r..r), rng.gen_range(-r..r)];
        let v = form.value(&x);
        if v > c || v < 1e-9 * c {
            continue;
        }
        tested += 1;
        if vdp_derivative(x) >= 0.0 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn slightly_larger_level_is_refuted_by_a_dense_ring() {
    let (_, _, form) = vdp_form();
    let ls = maximize_level(
        &form,
        &VanDerPolReversed,
        0.0,
        &(),
        10.0,
        &LevelSearch::default(),
    )
    .unwrap();
    let c = 1.01 * ls.c;
    let witness = (0..10_000).any(|k| {
        let th = std::f64::consts::TAU * k as f64 / 10_000.0;
        vdp_derivative(form.ellipse_point(c, th)) >= 0.0
    });
    assert!(witness, "no counterexample on V = {c}");
}
