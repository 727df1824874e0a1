//! Small dense helpers on row-major square matrices.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn identity<T: Real>(d: usize) -> Vec<T> {
    let mut m = vec![T::zero(); d * d];
    for i in 0..d {
        m[i * d + i] = T::one();
    }
    m
}

pub fn mat_vec<T: Real>(m: &[T], x: &[T]) -> Vec<T> {
    let d = x.len();
    (0..d)
        .map(|i| m[i * d..(i + 1) * d].iter().zip(x).map(|(&a, &b)| a * b).sum())
        .collect()
}

pub fn is_symmetric<T: Real>(m: &[T], d: usize, tol: T) -> bool {
    (0..d).all(|i| (0..i).all(|j| (m[i * d + j] - m[j * d + i]).abs() <= tol))
}

/// Lower Cholesky factor `L` with `L Lᵀ = m`.
pub fn cholesky<T: Real>(m: &[T], d: usize) -> Result<Vec<T>> {
    if m.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: m.len(),
        });
    }
    let mut l = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite(format!(
                        "Cholesky pivot {i} is {s}"
                    )));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// `L z` for a lower-triangular `L`.
pub fn lower_mul<T: Real>(l: &[T], z: &[T]) -> Vec<T> {
    let d = z.len();
    (0..d)
        .map(|i| (0..=i).map(|k| l[i * d + k] * z[k]).sum())
        .collect()
}

/// Solves `Lᵀ x = z` for a lower-triangular `L`.
pub fn lower_transpose_solve<T: Real>(l: &[T], z: &[T]) -> Vec<T> {
    let d = z.len();
    let mut x = z.to_vec();
    for i in (0..d).rev() {
        let mut s = x[i];
        for k in i + 1..d {
            s -= l[k * d + i] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    x
}

/// Solves `L x = z` for a lower-triangular `L`.
pub fn lower_solve<T: Real>(l: &[T], z: &[T]) -> Vec<T> {
    let d = z.len();
    let mut x = z.to_vec();
    for i in 0..d {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * d + k] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    x
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse<T: Real>(m: &[T], d: usize) -> Result<Vec<T>> {
    let l = cholesky(m, d)?;
    let mut inv = vec![T::zero(); d * d];
    let mut e = vec![T::zero(); d];
    for j in 0..d {
        e.iter_mut().for_each(|c| *c = T::zero());
        e[j] = T::one();
        let z = lower_transpose_solve(&l, &lower_solve(&l, &e));
        for i in 0..d {
            inv[i * d + j] = z[i];
        }
    }
    for i in 0..d {
        for j in 0..i {
            let avg = (inv[i * d + j] + inv[j * d + i]) / (T::one() + T::one());
            inv[i * d + j] = avg;
            inv[j * d + i] = avg;
        }
    }
    Ok(inv)
}

/// Induced infinity norm (max absolute row sum).
pub fn norm_inf<T: Real>(m: &[T], d: usize) -> T {
    (0..d)
        .map(|i| m[i * d..(i + 1) * d].iter().map(|x| x.abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let l = cholesky(&m, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - m[i * 3 + j]).abs() < 1e-12);
            }
        }
        let z = [1.0, -2.0, 0.5];
        let x = lower_transpose_solve(&l, &z);
        let back: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|k| l[k * 3 + i] * x[k]).sum())
            .collect();
        for (a, b) in back.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(cholesky(&m, 2), Err(Error::NotPositiveDefinite(_))));
    }
}
