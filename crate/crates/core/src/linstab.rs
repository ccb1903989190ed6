//! Linearized stability: Jacobians, the Hurwitz test, the continuous
//! Lyapunov equation and quadratic Lyapunov functions with certified
//! sublevel sets.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::dynsys::SystemModel;
use crate::error::{Error, Result};
use crate::math::{cos, exp, ln, sin, sqrt, TAU};
use crate::state::StateVector;

/// Default stability margin for [`is_hurwitz`].
pub const HURWITZ_EPS: f64 = 1e-9;

/// Dense `n x n` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "matrix must be square and non-empty",
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite"));
        }
        Ok(Self(m))
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::from_row_slice(n, &flat)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self(&self.0 * alpha)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.0.amax().max(f64::MIN_POSITIVE);
        let n = self.n();
        (0..n).all(|i| (0..i).all(|j| (self.0[(i, j)] - self.0[(j, i)]).abs() <= rel_tol * scale))
    }

    /// Lower Cholesky factor, or `NotPositiveDefinite`.
    pub fn cholesky(&self) -> Result<Self> {
        self.0
            .clone()
            .cholesky()
            .map(|c| Self(c.l()))
            .ok_or(Error::NotPositiveDefinite)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * x[j]).sum())
            .collect()
    }
}

/// Central-difference Jacobian of `f(t, ., mode)` at `x`, step
/// `h_i = max(1e-6, 1e-6 |x_i|)`.
pub fn fd_jacobian<S: SystemModel>(
    model: &S,
    t: f64,
    x: &[f64],
    mode: &S::Mode,
) -> Result<SquareMatrix> {
    let n = model.dimension();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let mut m = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = (1e-6 * x[j].abs()).max(1e-6);
        xp[j] = x[j] + h;
        model.eval(t, &xp, mode, &mut fp)?;
        xp[j] = x[j] - h;
        model.eval(t, &xp, mode, &mut fm)?;
        xp[j] = x[j];
        for i in 0..n {
            let d = (fp[i] - fm[i]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFiniteState { t });
            }
            m[(i, j)] = d;
        }
    }
    SquareMatrix::new(m)
}

/// Jacobian at `x`: the model's closed form when registered, otherwise
/// central differences.
pub fn jacobian<S: SystemModel>(
    model: &S,
    t: f64,
    x: &[f64],
    mode: &S::Mode,
) -> Result<SquareMatrix> {
    match model.analytic_jacobian(t, x, mode) {
        Some(j) => Ok(j),
        None => fd_jacobian(model, t, x, mode),
    }
}

pub fn eigenvalues(a: &SquareMatrix) -> Result<Vec<Complex<f64>>> {
    let m = a.inner();
    match a.n() {
        1 => Ok(vec![Complex::new(m[(0, 0)], 0.0)]),
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = 0.25 * tr * tr - det;
            if disc >= 0.0 {
                let s = sqrt(disc);
                Ok(vec![
                    Complex::new(0.5 * tr + s, 0.0),
                    Complex::new(0.5 * tr - s, 0.0),
                ])
            } else {
                let s = sqrt(-disc);
                Ok(vec![Complex::new(0.5 * tr, s), Complex::new(0.5 * tr, -s)])
            }
        }
        _ => nalgebra::Schur::try_new(m.clone(), 1e-14, 100_000)
            .map(|s| s.complex_eigenvalues().iter().copied().collect())
            .ok_or(Error::EigenFailure),
    }
}

/// Decay time constants used by [`settling_time`]; the linear envelope
/// `exp(-sigma t)` has dropped to about 1.3% after this many.
pub const SETTLING_TIME_CONSTANTS: f64 = 4.37;

/// Time for the slowest linear mode of a Hurwitz `a` to decay by
/// `time_constants` e-foldings.
pub fn settling_time(a: &SquareMatrix, time_constants: f64) -> Result<f64> {
    let abscissa = spectral_abscissa(a)?;
    if !(abscissa < -HURWITZ_EPS) {
        return Err(Error::NotHurwitz { abscissa });
    }
    if !(time_constants > 0.0) {
        return Err(Error::InvalidArgument("time_constants must be positive"));
    }
    Ok(time_constants / -abscissa)
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &SquareMatrix) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `max Re(lambda) < -HURWITZ_EPS`.
pub fn is_hurwitz(a: &SquareMatrix) -> Result<bool> {
    is_hurwitz_with(a, HURWITZ_EPS)
}

pub fn is_hurwitz_with(a: &SquareMatrix, eps: f64) -> Result<bool> {
    Ok(spectral_abscissa(a)? < -eps)
}

/// Solves `P A + A^T P + Q = 0` through the `n^2` vectorized system.
pub fn solve_lyapunov(a: &SquareMatrix, q: &SquareMatrix) -> Result<SquareMatrix> {
    let n = a.n();
    if q.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q.n(),
        });
    }
    if !q.is_symmetric(1e-12) {
        return Err(Error::InvalidArgument("Q must be symmetric"));
    }
    q.cholesky()?;
    let abscissa = spectral_abscissa(a)?;
    if !(abscissa < -HURWITZ_EPS) {
        return Err(Error::NotHurwitz { abscissa });
    }

    // Column-major vec: vec(A^T P) = (I (x) A^T) vec P, vec(P A) = (A^T (x) I) vec P.
    let at = a.inner().transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, q.inner().iter().map(|v| -v));
    let lu = k.full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n * n).map(|i| u[(i, i)].abs()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(dmax > 0.0) || dmin <= 1e-14 * dmax {
        return Err(Error::NumericallySingular);
    }
    let sol = lu.solve(&rhs).ok_or(Error::NumericallySingular)?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    SquareMatrix::new(p)
}

/// Frobenius norm of `P A + A^T P + Q`.
pub fn lyapunov_residual(a: &SquareMatrix, q: &SquareMatrix, p: &SquareMatrix) -> f64 {
    let r = p.inner() * a.inner() + a.inner().transpose() * p.inner() + q.inner();
    r.norm()
}

/// `V(x) = (x - x_eq)^T P (x - x_eq)` with `P` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    p: SquareMatrix,
    equilibrium: StateVector,
    chol: SquareMatrix,
}

impl QuadraticForm {
    pub fn new(p: SquareMatrix, equilibrium: StateVector) -> Result<Self> {
        if p.n() != equilibrium.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.n(),
                found: equilibrium.dim(),
            });
        }
        if !p.is_symmetric(1e-12) {
            return Err(Error::InvalidArgument("P must be symmetric"));
        }
        let chol = p.cholesky()?;
        Ok(Self {
            p,
            equilibrium,
            chol,
        })
    }

    pub fn p(&self) -> &SquareMatrix {
        &self.p
    }

    pub fn equilibrium(&self) -> &StateVector {
        &self.equilibrium
    }

    pub fn dim(&self) -> usize {
        self.p.n()
    }

    /// Lower Cholesky factor `L` with `P = L L^T`.
    pub fn cholesky_factor(&self) -> &SquareMatrix {
        &self.chol
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.equilibrium.as_slice())
            .map(|(a, b)| a - b)
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let e = self.shifted(x);
        let pe = self.p.mul_vec(&e);
        e.iter().zip(&pe).map(|(a, b)| a * b).sum()
    }

    /// `dV/dt = 2 (x - x_eq)^T P f(t, x)` along the vector field.
    pub fn derivative<S: SystemModel>(
        &self,
        model: &S,
        t: f64,
        x: &[f64],
        mode: &S::Mode,
    ) -> Result<f64> {
        let mut f = vec![0.0; x.len()];
        model.eval(t, x, mode, &mut f)?;
        let e = self.shifted(x);
        let pf = self.p.mul_vec(&f);
        Ok(2.0 * e.iter().zip(&pf).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Coefficients of `a x1^2 + b x1 x2 + c x2^2` for a planar form.
    pub fn planar_coefficients(&self) -> Option<(f64, f64, f64)> {
        (self.dim() == 2).then(|| (self.p.get(0, 0), 2.0 * self.p.get(0, 1), self.p.get(1, 1)))
    }

    /// Half-width of `{V <= c}` along component `i`: `sqrt(c (P^-1)_ii)`.
    pub fn axis_extent(&self, i: usize, c: f64) -> f64 {
        let inv = self
            .p
            .inner()
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::zeros(self.dim(), self.dim()));
        sqrt(c * inv[(i, i)])
    }

    /// Largest level whose sublevel set fits in the box `|x_i - x_eq_i| <= h_i`.
    pub fn level_fitting_box(&self, half_widths: &[f64]) -> Result<f64> {
        if half_widths.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: half_widths.len(),
            });
        }
        let mut c = f64::INFINITY;
        for (i, h) in half_widths.iter().enumerate() {
            if !(*h > 0.0) {
                return Err(Error::InvalidArgument("box half-widths must be positive"));
            }
            let e1 = self.axis_extent(i, 1.0);
            c = c.min(h * h / (e1 * e1));
        }
        Ok(c)
    }

    /// Point on `{V = c}` at parameter angle `theta` (planar forms):
    /// `sqrt(c) L^-T (cos theta, sin theta) + x_eq`.
    pub fn ellipse_point(&self, c: f64, theta: f64) -> [f64; 2] {
        let l = self.chol.inner();
        // L^-T u for lower-triangular L: solve the upper system L^T y = u.
        let (l00, l10, l11) = (l[(0, 0)], l[(1, 0)], l[(1, 1)]);
        let (u0, u1) = (cos(theta), sin(theta));
        let y1 = u1 / l11;
        let y0 = (u0 - l10 * y1) / l00;
        let s = sqrt(c);
        let eq = self.equilibrium.as_slice();
        [s * y0 + eq[0], s * y1 + eq[1]]
    }
}

/// `{x : V(x) <= c}` for a quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub form: QuadraticForm,
    pub c: f64,
}

impl LevelSet {
    pub fn new(form: QuadraticForm, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(
                "level c must be positive and finite",
            ));
        }
        Ok(Self { form, c })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.form.value(x) <= self.c
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.form.value(x)
    }
}

/// Ring sampling and bisection settings for [`maximize_level`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSearch {
    /// Points per ring.
    pub ring_samples: usize,
    /// Rings tested inside a candidate level, at `c (j / rings)^2`.
    pub rings: usize,
    pub bisection_iters: usize,
    /// Smallest level tried; defaults to `1e-12 c_max`.
    pub c_min: Option<f64>,
}

impl Default for LevelSearch {
    fn default() -> Self {
        Self {
            ring_samples: 720,
            rings: 16,
            bisection_iters: 20,
            c_min: None,
        }
    }
}

/// True when `dV/dt < 0` at every sample of every ring inside `{V <= c}`.
pub fn level_is_valid<S: SystemModel>(
    form: &QuadraticForm,
    model: &S,
    t: f64,
    mode: &S::Mode,
    c: f64,
    search: &LevelSearch,
) -> Result<bool> {
    if form.dim() != 2 {
        return Err(Error::InvalidArgument(
            "level certification supports planar systems",
        ));
    }
    let m = search.ring_samples.max(8);
    let rings = search.rings.max(1);
    for j in (1..=rings).rev() {
        let cj = c * ((j * j) as f64) / ((rings * rings) as f64);
        for k in 0..m {
            let theta = TAU * k as f64 / m as f64;
            let x = form.ellipse_point(cj, theta);
            if !(form.derivative(model, t, &x, mode)? < 0.0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Largest certified level `c <= c_max`, by log-space bisection.
///
/// The returned level is the validated end of the final bracket, backed
/// off by 0.1% to absorb the finite ring resolution.
pub fn maximize_level<S: SystemModel>(
    form: &QuadraticForm,
    model: &S,
    t: f64,
    mode: &S::Mode,
    c_max: f64,
    search: &LevelSearch,
) -> Result<LevelSet> {
    if !(c_max > 0.0) || !c_max.is_finite() {
        return Err(Error::InvalidArgument("c_max must be positive and finite"));
    }
    if level_is_valid(form, model, t, mode, c_max, search)? {
        return LevelSet::new(form.clone(), c_max);
    }
    let c_min = search.c_min.unwrap_or(c_max * 1e-12);
    if !(c_min > 0.0 && c_min < c_max) {
        return Err(Error::InvalidArgument("c_min must lie in (0, c_max)"));
    }
    if !level_is_valid(form, model, t, mode, c_min, search)? {
        return Err(Error::NoValidLevel);
    }
    let (mut lo, mut hi) = (ln(c_min), ln(c_max));
    for _ in 0..search.bisection_iters {
        let mid = 0.5 * (lo + hi);
        if level_is_valid(form, model, t, mode, exp(mid), search)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    LevelSet::new(form.clone(), exp(lo) * 0.999)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearSystem, VanDerPolReversed};

    fn m2(a: f64, b: f64, c: f64, d: f64) -> SquareMatrix {
        SquareMatrix::from_row_slice(2, &[a, b, c, d]).unwrap()
    }

    #[test]
    fn hurwitz_cases() {
        assert!(is_hurwitz(&m2(0.0, -1.0, 1.0, -1.0)).unwrap());
        assert!(!is_hurwitz(&SquareMatrix::identity(2)).unwrap());
        assert!(!is_hurwitz(&m2(0.0, 0.0, 0.0, 0.0)).unwrap());
        let ev = eigenvalues(&m2(0.0, -1.0, 1.0, -1.0)).unwrap();
        for l in ev {
            assert!((l.re + 0.5).abs() < 1e-15);
            assert!((l.im.abs() - sqrt(3.0) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn settling_time_of_damped_oscillator() {
        // Eigenvalues -2 +- 3i.
        let a = SquareMatrix::from_row_slice(2, &[0.0, 1.0, -13.0, -4.0]).unwrap();
        assert!((settling_time(&a, 4.0).unwrap() - 2.0).abs() < 1e-12);
        let b = SquareMatrix::from_row_slice(2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!(settling_time(&b, 4.0).is_err());
    }

    #[test]
    fn hurwitz_larger_matrix_uses_schur() {
        let a = SquareMatrix::from_row_slice(3, &[-1.0, 2.0, 0.0, -2.0, -1.0, 0.0, 0.0, 0.0, -3.0])
            .unwrap();
        assert!(is_hurwitz(&a).unwrap());
        assert!((spectral_abscissa(&a).unwrap() + 1.0).abs() < 1e-10);
        let b = SquareMatrix::from_row_slice(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
            .unwrap();
        assert!(!is_hurwitz(&b).unwrap());
    }

    #[test]
    fn lyapunov_trivial_and_errors() {
        let p = solve_lyapunov(&m2(-1.0, 0.0, 0.0, -1.0), &SquareMatrix::identity(2)).unwrap();
        for (i, j, v) in [(0, 0, 0.5), (0, 1, 0.0), (1, 0, 0.0), (1, 1, 0.5)] {
            assert!((p.get(i, j) - v).abs() < 1e-14);
        }
        assert!(matches!(
            solve_lyapunov(&SquareMatrix::identity(2), &SquareMatrix::identity(2)),
            Err(Error::NotHurwitz { .. })
        ));
        assert_eq!(
            solve_lyapunov(&m2(-1.0, 0.0, 0.0, -1.0), &m2(1.0, 0.0, 0.0, -1.0)),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn quadratic_form_basics() {
        let form = QuadraticForm::new(m2(1.0, -0.5, -0.5, 1.0), StateVector::zeros(2)).unwrap();
        assert_eq!(form.value(&[1.0, 1.0]), 1.0);
        assert_eq!(form.value(&[0.0, 0.0]), 0.0);
        assert_eq!(form.planar_coefficients(), Some((1.0, -1.0, 1.0)));
        let vdp = VanDerPolReversed;
        assert_eq!(form.derivative(&vdp, 0.0, &[0.0, 0.0], &()).unwrap(), 0.0);
        assert!(QuadraticForm::new(m2(1.0, 2.0, 2.0, 1.0), StateVector::zeros(2)).is_err());
    }

    #[test]
    fn ellipse_points_lie_on_level() {
        let eq = StateVector::from_slice(&[0.3, -2.0]).unwrap();
        let form = QuadraticForm::new(m2(49.66, 0.0013, 0.0013, 0.129), eq).unwrap();
        for k in 0..37 {
            let x = form.ellipse_point(0.001, 0.17 * k as f64);
            assert!((form.value(&x) - 0.001).abs() <= 1e-12 * 0.001);
        }
    }

    #[test]
    fn box_fit_touches_the_box() {
        let form = QuadraticForm::new(m2(2.0, 0.5, 0.5, 1.0), StateVector::zeros(2)).unwrap();
        let c = form.level_fitting_box(&[0.1, 0.2]).unwrap();
        let e0 = form.axis_extent(0, c);
        let e1 = form.axis_extent(1, c);
        assert!(e0 <= 0.1 + 1e-12 && e1 <= 0.2 + 1e-12);
        assert!((e0 - 0.1).abs() < 1e-12 || (e1 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn linear_stable_system_is_unbounded() {
        let sys = LinearSystem::new(m2(-1.0, 0.0, 0.0, -1.0));
        let form = QuadraticForm::new(m2(0.5, 0.0, 0.0, 0.5), StateVector::zeros(2)).unwrap();
        let ls = maximize_level(&form, &sys, 0.0, &(), 1e6, &LevelSearch::default()).unwrap();
        assert_eq!(ls.c, 1e6);
    }

    #[test]
    fn unstable_system_has_no_level() {
        let sys = LinearSystem::new(m2(1.0, 0.0, 0.0, 1.0));
        let form = QuadraticForm::new(SquareMatrix::identity(2), StateVector::zeros(2)).unwrap();
        assert_eq!(
            maximize_level(&form, &sys, 0.0, &(), 1.0, &LevelSearch::default()),
            Err(Error::NoValidLevel)
        );
    }

    #[test]
    fn fd_jacobian_of_linear_system() {
        let m = m2(0.3, -1.2, 2.5, -0.7);
        let sys = LinearSystem::new(m.clone()).without_analytic_jacobian();
        let j = fd_jacobian(&sys, 0.0, &[3.0, -4.0], &()).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert!((j.get(i, k) - m.get(i, k)).abs() <= 1e-9);
            }
        }
    }
}
