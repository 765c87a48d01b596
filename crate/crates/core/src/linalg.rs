//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Determinant as (ln|det|, phase) from a partially pivoted LU.
///
/// Stays finite for large matrices where the plain product would overflow.
/// Returns `None` for an exactly singular matrix.
pub fn log_det(m: &CMatrix) -> Option<(f64, f64)> {
    assert!(m.is_square());
    let n = m.nrows();
    if n == 0 {
        return Some((0.0, 0.0));
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let mut log_mag = 0.0;
    let mut phase = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        let r = d.norm();
        if r == 0.0 || !r.is_finite() {
            return None;
        }
        log_mag += r.ln();
        phase += d.arg();
    }
    if lu.p().determinant::<f64>() < 0.0 {
        phase += std::f64::consts::PI;
    }
    Some((log_mag, wrap_phase(phase)))
}

pub fn det(m: &CMatrix) -> Complex64 {
    match log_det(m) {
        Some((l, p)) => Complex64::from_polar(l.exp(), p),
        None => Complex64::new(0.0, 0.0),
    }
}

pub fn wrap_phase(p: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut q = p % two_pi;
    if q > std::f64::consts::PI {
        q -= two_pi;
    } else if q <= -std::f64::consts::PI {
        q += two_pi;
    }
    q
}

/// 1-norm condition estimate from an explicit inverse; fine for the small
/// matrices used here.
pub fn inverse_checked(m: &CMatrix, what: &str, max_condition: f64) -> Result<CMatrix> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} is not invertible")))?;
    let cond = one_norm(m) * one_norm(&inv);
    if !cond.is_finite() || cond > max_condition {
        return Err(Error::Singular(format!("{what} has condition number {cond:e}")));
    }
    Ok(inv)
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest |A − A†| entry.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..=i {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_matches_direct_determinant() {
        let m = CMatrix::from_fn(4, 4, |i, j| Complex64::new((i + 2 * j) as f64 * 0.3 - 1.0, (i * j) as f64 * 0.1 + (i == j) as u8 as f64));
        let direct = m.determinant();
        let via_log = det(&m);
        assert!((direct - via_log).norm() < 1e-10 * direct.norm().max(1.0));
    }

    #[test]
    fn log_det_survives_overflow_sized_matrices() {
        let m = CMatrix::from_diagonal_element(400, 400, Complex64::new(1e3, 0.0));
        let (l, p) = log_det(&m).unwrap();
        assert!((l - 400.0 * 1e3f64.ln()).abs() < 1e-8);
        assert!(p.abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_reports_none() {
        let m = CMatrix::zeros(3, 3);
        assert!(log_det(&m).is_none());
        assert!(inverse_checked(&m, "zero", 1e12).is_err());
    }
}
