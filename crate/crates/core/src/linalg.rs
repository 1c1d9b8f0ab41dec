//! Dense eigenvalue helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// All eigenvalues of a complex square matrix, sorted by decreasing modulus.
pub fn eigenvalues_complex(m: &CMatrix) -> Result<Vec<Complex64>> {
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::EigenSolver("matrix has non-finite entries".into()));
    }
    let mut b = m.clone();
    balance(&mut b, |z| z.norm(), |z, f| *z *= f);
    let schur = nalgebra::linalg::Schur::try_new(b, 1e-15, 20_000)
        .ok_or_else(|| Error::EigenSolver("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<Complex64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    sort_by_modulus(&mut ev);
    Ok(ev)
}

/// All eigenvalues of a real square matrix, sorted by decreasing modulus.
pub fn eigenvalues_real(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::EigenSolver("matrix has non-finite entries".into()));
    }
    let mut b = m.clone();
    balance(&mut b, |x| x.abs(), |x, f| *x *= f);
    let schur = nalgebra::linalg::Schur::try_new(b, 1e-15, 20_000)
        .ok_or_else(|| Error::EigenSolver("Schur iteration did not converge".into()))?;
    let mut ev: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    sort_by_modulus(&mut ev);
    Ok(ev)
}

/// Parlett–Reinsch diagonal balancing by powers of two (a similarity, exact in floating point).
fn balance<T: nalgebra::Scalar>(a: &mut DMatrix<T>, abs: impl Fn(&T) -> f64, scale: impl Fn(&mut T, f64)) {
    let n = a.nrows();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += abs(&a[(j, i)]);
                    r += abs(&a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if c + r < 0.95 * s {
                converged = false;
                for j in 0..n {
                    scale(&mut a[(i, j)], 1.0 / f);
                    scale(&mut a[(j, i)], f);
                }
            }
        }
    }
}

/// Decreasing modulus; ties broken by argument so the order is reproducible.
pub fn sort_by_modulus(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.arg().partial_cmp(&b.arg()).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Right eigenvector for an (approximate) eigenvalue `lambda` by shifted inverse iteration.
/// Returns the vector normalized to unit Euclidean norm.
pub fn eigenvector_complex(m: &CMatrix, lambda: Complex64) -> Result<CVector> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);
    // tiny perturbation keeps the LU factors finite at an exact eigenvalue
    let shift = lambda + Complex64::new(scale * 1e-13, scale * 1e-13);
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut v = CVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * (i as f64).sin(), 0.3 * (i as f64).cos()));
    for _ in 0..6 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::EigenSolver("singular shifted matrix".into()))?;
        let nrm = w.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::EigenSolver("inverse iteration produced a degenerate vector".into()));
        }
        v = w / Complex64::new(nrm, 0.0);
    }
    Ok(v)
}

/// Relative eigen-residual ‖Mv − λv‖ / ‖v‖.
pub fn residual(m: &CMatrix, lambda: Complex64, v: &CVector) -> f64 {
    let r = m * v - v * lambda;
    r.norm() / v.norm()
}

/// Real analogue of [`eigenvector_complex`].
pub fn eigenvector_real(m: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let scale = m.amax().max(1e-300);
    let shift = lambda + scale * 1e-13;
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64).sin());
    for _ in 0..6 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::EigenSolver("singular shifted matrix".into()))?;
        let nrm = w.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::EigenSolver("inverse iteration produced a degenerate vector".into()));
        }
        v = w / nrm;
    }
    Ok(v)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Least-squares line `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("a line fit needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Trace of `m^n` by repeated multiplication.
pub fn trace_of_power(m: &CMatrix, n: usize) -> Complex64 {
    assert!(n >= 1);
    let mut p = m.clone();
    for _ in 1..n {
        p = &p * m;
    }
    p.trace()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_eigenvalues_of_triangular_matrix() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(1.0, 1.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 3.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-0.5, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.1, 0.0),
            ],
        );
        let ev = eigenvalues_complex(&m).unwrap();
        assert!((ev[0] - Complex64::new(1.0, 1.0)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(-0.5, 0.0)).norm() < 1e-12);
        assert!((ev[2] - Complex64::new(0.1, 0.0)).norm() < 1e-12);
        let v = eigenvector_complex(&m, ev[1]).unwrap();
        assert!(residual(&m, ev[1], &v) < 1e-10);
    }

    #[test]
    fn rotation_has_conjugate_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let ev = eigenvalues_real(&m).unwrap();
        assert!((ev[0].norm() - 2.0).abs() < 1e-12);
        assert!((ev[0].im.abs() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b) = linear_fit(&x, &y).unwrap();
        assert!((a - 2.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
