//! Small dense symmetric-matrix helpers (row-major `d × d`).

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Lower Cholesky factor `L` with `L Lᵀ = A`.
pub(crate) fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), d * d);
    let mut l = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * d + i] = libm::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L y = b` in place.
pub(crate) fn forward_substitute(l: &[f64], d: usize, b: &mut [f64]) {
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
}

/// `L z`.
pub(crate) fn lower_mul(l: &[f64], d: usize, z: &[f64], out: &mut [f64]) {
    for i in 0..d {
        out[i] = (0..=i).map(|k| l[i * d + k] * z[k]).sum();
    }
}
