//! Leading and second-order small-eigenvalue matrices of the polygon cluster
//! and their Fourier block form.
//!
//! Index layout for 2k-vectors: entries `0..k` are radial components of the
//! vertices, entries `k..2k` tangential components.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use super::circulant::{build_a1, build_a2, fourier_matrix, fourier_matrix_inverse, fourier_vector};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct StabilityMatrices {
    pub k: usize,
    /// `𝓜`
    pub m_leading: DMatrix<f64>,
    /// `𝓜₂`
    pub m_second: DMatrix<f64>,
}

fn blocks(tl: DMatrix<f64>, tr: DMatrix<f64>, bl: DMatrix<f64>, br: DMatrix<f64>) -> DMatrix<f64> {
    let k = tl.nrows();
    let mut m = DMatrix::zeros(2 * k, 2 * k);
    m.view_mut((0, 0), (k, k)).copy_from(&tl);
    m.view_mut((0, k), (k, k)).copy_from(&tr);
    m.view_mut((k, 0), (k, k)).copy_from(&bl);
    m.view_mut((k, k), (k, k)).copy_from(&br);
    m
}

impl StabilityMatrices {
    pub fn new(k: usize) -> Result<Self> {
        let a1 = build_a1(k)?;
        let a2 = build_a2(k)?;
        let id = DMatrix::<f64>::identity(k, k);
        let (s, c) = (PI / k as f64).sin_cos();
        let (s2, c2) = (2.0 * PI / k as f64).sin_cos();
        let m_leading = blocks(
            (&a1 + &id * 4.0) * (s * s),
            &a2 * (s * c),
            &a2 * (-s * c),
            &a1 * (-c * c),
        );
        let m_second = blocks(&a1 * c2, &a2 * (-s2), &a2 * s2, &a1 * c2);
        Ok(Self {
            k,
            m_leading,
            m_second,
        })
    }
}

/// Size of the leading matrix term, `ξσ^{3/2} e^{-σd} d^{-5/2}`.
pub fn leading_prefactor(xi: f64, sigma: f64, d: f64) -> f64 {
    xi * sigma.powf(1.5) * (-sigma * d).exp() * d.powf(-2.5)
}

/// `K̃(d) = ξσ^{1/2} e^{-σd} d^{-3/2}`, weight of the second-order term.
pub fn k_tilde(xi: f64, sigma: f64, d: f64) -> f64 {
    xi * sigma.sqrt() * (-sigma * d).exp() * d.powf(-1.5)
}

/// Scale that turns the exact Hessian of `Π` (ordered-pair sum) into `𝓜`
/// at leading order: `2ξσ^{3/2} d^{-1/2} e^{-σd}`.
pub fn hessian_scale(xi: f64, sigma: f64, d: f64) -> f64 {
    2.0 * xi * sigma.powf(1.5) * d.powf(-0.5) * (-sigma * d).exp()
}

/// Cyclic vertex shift `j → j+1` acting on both halves of a 2k-vector.
pub fn block_rotation(k: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * k, 2 * k);
    for j in 0..k {
        s[((j + 1) % k, j)] = 1.0;
        s[(k + (j + 1) % k, k + j)] = 1.0;
    }
    s
}

fn block_fourier(k: usize, m: &DMatrix<f64>) -> DMatrix<Complex64> {
    let p = fourier_matrix(k);
    let pinv = fourier_matrix_inverse(k);
    let mut big_p = DMatrix::zeros(2 * k, 2 * k);
    let mut big_pinv = DMatrix::zeros(2 * k, 2 * k);
    for off in [0, k] {
        big_p.view_mut((off, off), (k, k)).copy_from(&p);
        big_pinv.view_mut((off, off), (k, k)).copy_from(&pinv);
    }
    let mc = m.map(|x| Complex64::new(x, 0.0));
    big_pinv * mc * big_p
}

/// `P⁻¹𝓜P` computed by matrix products.
pub fn transformed_leading(m: &StabilityMatrices) -> DMatrix<Complex64> {
    block_fourier(m.k, &m.m_leading)
}

/// `P⁻¹𝓜₂P` computed by matrix products.
pub fn transformed_second(m: &StabilityMatrices) -> DMatrix<Complex64> {
    block_fourier(m.k, &m.m_second)
}

/// The 2×2 block of `P⁻¹𝓜P` acting on Fourier mode `l`.
pub fn leading_block(k: usize, l: usize) -> Matrix2<Complex64> {
    let (s, c) = (PI / k as f64).sin_cos();
    let (sl, cl) = (l as f64 * PI / k as f64).sin_cos();
    let off = (2.0 * PI / k as f64).sin() * (2.0 * l as f64 * PI / k as f64).sin();
    Matrix2::new(
        Complex64::new(4.0 * s * s * cl * cl, 0.0),
        Complex64::new(0.0, off),
        Complex64::new(0.0, -off),
        Complex64::new(4.0 * c * c * sl * sl, 0.0),
    )
}

/// The 2×2 block of `P⁻¹𝓜₂P` acting on Fourier mode `l`.
pub fn second_block(k: usize, l: usize) -> Matrix2<Complex64> {
    let c2 = (2.0 * PI / k as f64).cos();
    let sl = (l as f64 * PI / k as f64).sin();
    let off = 2.0 * (2.0 * PI / k as f64).sin() * (2.0 * l as f64 * PI / k as f64).sin();
    Matrix2::new(
        Complex64::new(-4.0 * c2 * sl * sl, 0.0),
        Complex64::new(0.0, -off),
        Complex64::new(0.0, off),
        Complex64::new(-4.0 * c2 * sl * sl, 0.0),
    )
}

/// Block-diagonal Fourier form assembled from the closed-form 2×2 blocks.
pub fn assembled_block_form(k: usize, second: bool) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(2 * k, 2 * k);
    for l in 0..k {
        let b = if second {
            second_block(k, l)
        } else {
            leading_block(k, l)
        };
        out[(l, l)] = b[(0, 0)];
        out[(l, k + l)] = b[(0, 1)];
        out[(k + l, l)] = b[(1, 0)];
        out[(k + l, k + l)] = b[(1, 1)];
    }
    out
}

/// Null vector `(cos(π/k) sin(lπ/k), i sin(π/k) cos(lπ/k))` of the leading block.
pub fn kernel_vector(k: usize, l: usize) -> [Complex64; 2] {
    let (s, c) = (PI / k as f64).sin_cos();
    let (sl, cl) = (l as f64 * PI / k as f64).sin_cos();
    [Complex64::new(c * sl, 0.0), Complex64::new(0.0, s * cl)]
}

/// The kernel vector of mode `l` placed in the full 2k Fourier space.
pub fn kernel_vector_fourier(k: usize, l: usize) -> DVector<Complex64> {
    let v = kernel_vector(k, l);
    let mut out = DVector::zeros(2 * k);
    out[l] = v[0];
    out[k + l] = v[1];
    out
}

/// The same mode in physical local coordinates: `(a X_l, i b X_l)`.
pub fn kernel_vector_physical(k: usize, l: usize) -> DVector<Complex64> {
    let v = kernel_vector(k, l);
    let x = fourier_vector(k, l);
    let mut out = DVector::zeros(2 * k);
    for j in 0..k {
        out[j] = v[0] * x[j];
        out[k + j] = v[1] * x[j];
    }
    out
}

fn mu_parts(k: usize, l: usize) -> (f64, f64, f64) {
    let (s, c) = (PI / k as f64).sin_cos();
    let (sl, cl) = (l as f64 * PI / k as f64).sin_cos();
    let (s2, c2) = (2.0 * PI / k as f64).sin_cos();
    let s2l = (2.0 * l as f64 * PI / k as f64).sin();
    let first = -4.0 * c2 * sl * sl;
    let cross = 4.0 * s2 * s2l * c * s * cl * sl;
    let den = c * c * sl * sl + s * s * cl * cl;
    (first, cross, den)
}

/// Closed-form Rayleigh quotient of `𝓜₂` on the mode-`l` kernel vector.
pub fn mu_closed_form(k: usize, l: usize) -> f64 {
    let (first, cross, den) = mu_parts(k, l);
    first + cross / den
}

/// Numerator of `μ_l` over the common denominator
/// `cos²(π/k) sin²(lπ/k) + sin²(π/k) cos²(lπ/k)`.
pub fn mu_numerator(k: usize, l: usize) -> f64 {
    let (first, cross, den) = mu_parts(k, l);
    first * den + cross
}

/// `⟨(P⁻¹𝓜₂P) v, v⟩ / ⟨v, v⟩` evaluated numerically.
pub fn mu_rayleigh(transformed_second: &DMatrix<Complex64>, k: usize, l: usize) -> f64 {
    let v = kernel_vector_fourier(k, l);
    let num = v.dotc(&(transformed_second * &v));
    let den = v.dotc(&v);
    (num / den).re
}
