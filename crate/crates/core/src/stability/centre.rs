//! Matrix `M̃` of the polygon-with-centre cluster.
//!
//! Layout of (2k+2)-vectors: `0..k` radial vertex components, `k` the centre
//! x-component, `k+1..2k+1` tangential vertex components, `2k+1` the centre
//! y-component.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn build_m_centre(k: usize) -> Result<DMatrix<f64>> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let n = 2 * k + 2;
    // corners are Σcos²θ_l and Σsin²θ_l: both k/2 once k ≥ 3, but (2, 0)
    // for the collinear pair
    let (corner_x, corner_y) = if k == 2 { (2.0, 0.0) } else { (k as f64 / 2.0, k as f64 / 2.0) };
    let mut m = DMatrix::zeros(n, n);
    for l in 0..k {
        let (s, c) = (2.0 * PI * l as f64 / k as f64).sin_cos();
        m[(l, l)] = 1.0;
        m[(l, k)] = -c;
        m[(k, l)] = -c;
        m[(l, 2 * k + 1)] = -s;
        m[(2 * k + 1, l)] = -s;
    }
    m[(k, k)] = corner_x;
    m[(2 * k + 1, 2 * k + 1)] = corner_y;
    Ok(m)
}

/// Indices of the radial block plus both centre components.
pub fn restricted_indices(k: usize) -> Vec<usize> {
    (0..=k).chain(std::iter::once(2 * k + 1)).collect()
}

/// Indices of the tangential vertex components.
pub fn tangential_indices(k: usize) -> Vec<usize> {
    (k + 1..=2 * k).collect()
}

pub fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// `Σ_l (a_l - α cos θ_l - β sin θ_l)²` with `α = a[k]`, `β = a[2k+1]`.
pub fn sum_of_squares(k: usize, a: &DVector<f64>) -> f64 {
    let (alpha, beta) = (a[k], a[2 * k + 1]);
    (0..k)
        .map(|l| {
            let (s, c) = (2.0 * PI * l as f64 / k as f64).sin_cos();
            let r = a[l] - alpha * c - beta * s;
            r * r
        })
        .sum()
}

/// Vector in the translation-type kernel of the restricted block.
pub fn kernel_witness(k: usize, alpha: f64, beta: f64) -> DVector<f64> {
    let mut a = DVector::zeros(2 * k + 2);
    for l in 0..k {
        let (s, c) = (2.0 * PI * l as f64 / k as f64).sin_cos();
        a[l] = alpha * c + beta * s;
    }
    a[k] = alpha;
    a[2 * k + 1] = beta;
    a
}

pub(crate) fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}
